"""JSON model files (schema version 1).

Example::

    {
      "schema_version": 1,
      "kind": "production",
      "goods": 3,
      "consumers": [
        {"family": "cobb-douglas", "shares": [0.9, 0.1, 0], "endowment": [0, 5, 3]}
      ],
      "activity_matrix": [[1], [-1], [-1]],
      "known_equilibria": [{"prices": [0.5, 0.0833, 0.4167], "activities": [3], "label": "p*"}]
    }
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, List, Union

import numpy as np

from .economy import (
    CES_B,
    FAMILIES,
    Consumer,
    EconomyModel,
    ExchangeEconomy,
    KnownEquilibrium,
    ModelError,
    ProductionEconomy,
)

__all__ = ["SCHEMA_VERSION", "model_from_dict", "model_to_dict", "load_model", "dump_model"]

SCHEMA_VERSION = 1
KINDS = ("exchange", "production")


def _number_list(value: Any, path: str, length: int, nonnegative: bool = False) -> List[float]:
    if not isinstance(value, list):
        raise ModelError("expected an array of numbers", path)
    if len(value) != length:
        raise ModelError(f"expected {length} entries, got {len(value)}", path)
    out = []
    for i, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            raise ModelError(f"not a finite number: {v!r}", f"{path}[{i}]")
        if nonnegative and v < 0:
            raise ModelError(f"must be nonnegative, got {v!r}", f"{path}[{i}]")
        out.append(float(v))
    return out


def _positive_int(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ModelError(f"expected a positive integer, got {value!r}", path)
    return value


def model_from_dict(data: Any, name: str = "") -> EconomyModel:
    """Validate a parsed model file and build the economy it describes.

    Errors are :class:`ModelError` with a field path such as
    ``consumers[1].endowment[0]``.
    """
    if not isinstance(data, dict):
        raise ModelError("model file must contain a JSON object")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ModelError(f"unsupported value {data.get('schema_version')!r}, expected {SCHEMA_VERSION}", "schema_version")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ModelError(f"must be one of {KINDS}, got {kind!r}", "kind")
    D = _positive_int(data.get("goods"), "goods")

    raw_consumers = data.get("consumers")
    if not isinstance(raw_consumers, list) or not raw_consumers:
        raise ModelError("expected a nonempty array", "consumers")
    consumers = []
    for i, c in enumerate(raw_consumers):
        path = f"consumers[{i}]"
        if not isinstance(c, dict):
            raise ModelError("expected an object", path)
        family = c.get("family")
        if family not in FAMILIES:
            raise ModelError(f"must be one of {FAMILIES}, got {family!r}", f"{path}.family")
        shares = _number_list(c.get("shares"), f"{path}.shares", D, nonnegative=True)
        endowment = _number_list(c.get("endowment"), f"{path}.endowment", D, nonnegative=True)
        elasticity = c.get("elasticity")
        if elasticity is not None and (isinstance(elasticity, bool) or not isinstance(elasticity, (int, float))):
            raise ModelError(f"not a number: {elasticity!r}", f"{path}.elasticity")
        if family == CES_B and elasticity is None:
            raise ModelError("required for the ces-b family", f"{path}.elasticity")
        try:
            consumers.append(Consumer(endowment, shares, family, elasticity))
        except ModelError as exc:
            raise ModelError(str(exc).split(": ", 1)[-1], f"{path}.{exc.path}") from None

    J = 0
    A = None
    if kind == "production":
        rows = data.get("activity_matrix")
        if not isinstance(rows, list) or len(rows) != D:
            raise ModelError(f"expected {D} rows", "activity_matrix")
        if not isinstance(rows[0], list) or not rows[0]:
            raise ModelError("expected a nonempty row", "activity_matrix[0]")
        J = len(rows[0])
        A = np.array([_number_list(r, f"activity_matrix[{d}]", J) for d, r in enumerate(rows)])
    elif data.get("activity_matrix") is not None:
        raise ModelError("only allowed when kind is 'production'", "activity_matrix")

    known = []
    for k, eq in enumerate(data.get("known_equilibria") or []):
        path = f"known_equilibria[{k}]"
        if not isinstance(eq, dict):
            raise ModelError("expected an object", path)
        prices = _number_list(eq.get("prices"), f"{path}.prices", D, nonnegative=True)
        acts = eq.get("activities")
        if acts is not None:
            if kind != "production":
                raise ModelError("only allowed for production models", f"{path}.activities")
            acts = _number_list(acts, f"{path}.activities", J, nonnegative=True)
        label = eq.get("label", "")
        if not isinstance(label, str):
            raise ModelError("expected text", f"{path}.label")
        known.append(KnownEquilibrium(prices, acts, label))

    exchange = ExchangeEconomy(
        tuple(consumers),
        () if A is not None else tuple(known),
        name=name,
        require_supply=A is None,
    )
    if A is None:
        return exchange
    return ProductionEconomy(exchange, A, tuple(known), name=name)


def model_to_dict(model: EconomyModel) -> dict:
    production = isinstance(model, ProductionEconomy)
    out = {
        "schema_version": SCHEMA_VERSION,
        "kind": "production" if production else "exchange",
        "goods": model.goods,
        "consumers": [],
    }
    for c in model.consumers:
        entry = {"family": c.family, "shares": c.shares.tolist()}
        if c.elasticity is not None:
            entry["elasticity"] = c.elasticity
        entry["endowment"] = c.endowment.tolist()
        out["consumers"].append(entry)
    if production:
        out["activity_matrix"] = model.activity_matrix.tolist()
    if model.known_equilibria:
        out["known_equilibria"] = [
            {
                "prices": eq.prices.tolist(),
                **({"activities": eq.activities.tolist()} if eq.activities is not None else {}),
                "label": eq.label,
            }
            for eq in model.known_equilibria
        ]
    return out


def load_model(path: Union[str, Path]) -> EconomyModel:
    path = Path(path)
    with path.open() as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"invalid JSON: {exc}") from None
    return model_from_dict(data, name=path.stem)


def dump_model(model: EconomyModel, path: Union[str, Path, None] = None) -> str:
    text = json.dumps(model_to_dict(model), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
