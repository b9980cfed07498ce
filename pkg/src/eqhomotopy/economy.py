"""Exchange and linear-activity production economies as NCPs.

All three demand families share one closed form,

    x_j(p) = s_j * (p . w) / (p_j**b * sum_k s_k p_k**(1 - b)),

with ``(s, b) = (a**(1/5), 1/5)`` for CES-A, ``(a, elasticity)`` for CES-B and
``(a, 1)`` for Cobb-Douglas, so one analytic derivative covers them all.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .ncp import EvaluationError, NcpProblem, ncp_residual
from .tracer import TraceConfig, solve_ncp

__all__ = [
    "CES_A",
    "CES_B",
    "COBB_DOUGLAS",
    "FAMILIES",
    "REPLACE_LAST_ROW",
    "NO_NORMALIZATION",
    "ModelError",
    "Consumer",
    "KnownEquilibrium",
    "ExchangeEconomy",
    "ProductionEconomy",
    "EquilibriumReport",
    "demand",
    "demand_jacobian",
    "excess_demand",
    "excess_demand_jacobian",
    "exchange_ncp",
    "production_ncp",
    "compile_model",
    "normalize_prices",
    "compute_equilibrium",
]

CES_A = "ces-a"
CES_B = "ces-b"
COBB_DOUGLAS = "cobb-douglas"
FAMILIES = (CES_A, CES_B, COBB_DOUGLAS)

REPLACE_LAST_ROW = "replace-last-row"
NO_NORMALIZATION = "none"
_NORMALIZATIONS = (REPLACE_LAST_ROW, NO_NORMALIZATION)

# Distance (infinity norm) within which a computed equilibrium is labelled
# with a known one.
MATCH_TOL = 1e-2


class ModelError(ValueError):
    """Invalid economy data; ``path`` names the offending field."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


def _vector(values, path: str) -> np.ndarray:
    try:
        v = np.array(values, dtype=float).reshape(-1)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"not a numeric vector ({exc})", path) from None
    if not np.all(np.isfinite(v)):
        raise ModelError("contains non-finite values", path)
    v.flags.writeable = False
    return v


@dataclass(frozen=True)
class Consumer:
    endowment: np.ndarray
    shares: np.ndarray
    family: str = COBB_DOUGLAS
    elasticity: Optional[float] = None

    def __post_init__(self):
        w = _vector(self.endowment, "endowment")
        a = _vector(self.shares, "shares")
        object.__setattr__(self, "endowment", w)
        object.__setattr__(self, "shares", a)
        if self.family not in FAMILIES:
            raise ModelError(f"unknown demand family {self.family!r}", "family")
        if w.size != a.size:
            raise ModelError(f"length {a.size} does not match endowment length {w.size}", "shares")
        if np.any(w < 0) or not np.any(w > 0):
            raise ModelError("must be nonnegative with at least one positive entry", "endowment")
        if np.any(a < 0) or not np.any(a > 0):
            raise ModelError("must be nonnegative with at least one positive entry", "shares")
        if self.family == CES_B:
            if self.elasticity is None or not np.isfinite(self.elasticity):
                raise ModelError("required for the ces-b family", "elasticity")
            object.__setattr__(self, "elasticity", float(self.elasticity))

    @property
    def goods(self) -> int:
        return self.endowment.size

    def weights(self) -> Tuple[np.ndarray, float]:
        """``(s, b)`` of the shared closed form."""
        if self.family == CES_A:
            return self.shares ** 0.2, 0.2
        if self.family == CES_B:
            return self.shares, self.elasticity
        return self.shares, 1.0


@dataclass(frozen=True)
class KnownEquilibrium:
    prices: np.ndarray
    activities: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "prices", _vector(self.prices, "prices"))
        if self.activities is not None:
            object.__setattr__(self, "activities", _vector(self.activities, "activities"))


@dataclass(frozen=True)
class ExchangeEconomy:
    consumers: Tuple[Consumer, ...]
    known_equilibria: Tuple[KnownEquilibrium, ...] = ()
    name: str = ""
    # production economies may have goods that only firms supply
    require_supply: bool = field(default=True, compare=False)

    def __post_init__(self):
        consumers = tuple(self.consumers)
        if not consumers:
            raise ModelError("at least one consumer is required", "consumers")
        D = consumers[0].goods
        for i, c in enumerate(consumers):
            if c.goods != D:
                raise ModelError(f"has {c.goods} goods, expected {D}", f"consumers[{i}]")
        if self.require_supply and np.any(self.total_endowment(consumers) <= 0):
            raise ModelError("aggregate endowment must be positive in every good", "consumers")
        object.__setattr__(self, "consumers", consumers)
        object.__setattr__(self, "known_equilibria", tuple(self.known_equilibria))

    @staticmethod
    def total_endowment(consumers) -> np.ndarray:
        return np.sum([c.endowment for c in consumers], axis=0)

    @property
    def goods(self) -> int:
        return self.consumers[0].goods

    @property
    def activities(self) -> int:
        return 0


@dataclass(frozen=True)
class ProductionEconomy:
    """An exchange economy plus a ``D x J`` activity matrix (outputs > 0, inputs < 0)."""

    exchange: ExchangeEconomy
    activity_matrix: np.ndarray
    known_equilibria: Tuple[KnownEquilibrium, ...] = ()
    name: str = ""

    def __post_init__(self):
        A = np.array(self.activity_matrix, dtype=float)
        if A.ndim == 1:
            A = A.reshape(-1, 1)
        if A.ndim != 2 or A.shape[0] != self.exchange.goods or A.shape[1] < 1:
            raise ModelError(
                f"shape {A.shape} incompatible with {self.exchange.goods} goods", "activity_matrix"
            )
        if not np.all(np.isfinite(A)):
            raise ModelError("contains non-finite values", "activity_matrix")
        zero = np.flatnonzero(~np.any(A != 0, axis=0))
        if zero.size:
            raise ModelError("activity column is all zero", f"activity_matrix[:, {zero[0]}]")
        A.flags.writeable = False
        object.__setattr__(self, "activity_matrix", A)
        object.__setattr__(self, "known_equilibria", tuple(self.known_equilibria))

    @property
    def consumers(self) -> Tuple[Consumer, ...]:
        return self.exchange.consumers

    @property
    def goods(self) -> int:
        return self.exchange.goods

    @property
    def activities(self) -> int:
        return self.activity_matrix.shape[1]


EconomyModel = Union[ExchangeEconomy, ProductionEconomy]


@dataclass
class EquilibriumReport:
    prices: np.ndarray
    activities: Optional[np.ndarray]
    complementarity_residual: float
    iterations: int
    restarts: int
    matched_known_equilibrium: Optional[str] = None
    # residual of the unnormalized equilibrium conditions at (prices, activities)
    equilibrium_residual: float = 0.0
    corrector_steps: int = 0
    raw_solution: Optional[np.ndarray] = None
    warnings: Tuple[str, ...] = ()
    trace: object = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "prices": [float(v) for v in self.prices],
            "activities": None if self.activities is None else [float(v) for v in self.activities],
            "complementarity_residual": float(self.complementarity_residual),
            "equilibrium_residual": float(self.equilibrium_residual),
            "iterations": int(self.iterations),
            "restarts": int(self.restarts),
            "matched_known_equilibrium": self.matched_known_equilibrium,
            "warnings": list(self.warnings),
        }


def _check_prices(p: np.ndarray) -> None:
    bad = np.flatnonzero(~(p > 0))
    if bad.size:
        raise EvaluationError(f"price {bad[0]} = {p[bad[0]]!r} is not strictly positive", int(bad[0]))


def demand(consumer: Consumer, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    _check_prices(p)
    s, b = consumer.weights()
    income = float(p @ consumer.endowment)
    if not income > 0:
        raise EvaluationError("consumer income is not positive")
    denom = float(s @ p ** (1.0 - b))
    return s * income / (p ** b * denom)


def demand_jacobian(consumer: Consumer, p) -> np.ndarray:
    """``d demand_j / d p_m`` in closed form."""
    p = np.asarray(p, dtype=float)
    _check_prices(p)
    s, b = consumer.weights()
    w = consumer.endowment
    income = float(p @ w)
    if not income > 0:
        raise EvaluationError("consumer income is not positive")
    S = float(s @ p ** (1.0 - b))
    g = s * p ** (-b)
    x = g * income / S
    dS = (1.0 - b) * s * p ** (-b)
    J = np.outer(g, w / S - income * dS / S ** 2)
    J[np.diag_indices_from(J)] -= b * x / p
    return J


def excess_demand(economy: EconomyModel, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    total = np.zeros(economy.goods)
    for c in economy.consumers:
        total += demand(c, p) - c.endowment
    return total


def excess_demand_jacobian(economy: EconomyModel, p) -> np.ndarray:
    return sum(demand_jacobian(c, p) for c in economy.consumers)


def _check_normalization(normalization: str) -> None:
    if normalization not in _NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {_NORMALIZATIONS}, got {normalization!r}")


def exchange_ncp(economy: EconomyModel, normalization: str = NO_NORMALIZATION) -> NcpProblem:
    """``f(p) = -xi(p)``, optionally with the last row replaced by ``sum(p) - 1``."""
    _check_normalization(normalization)
    D = economy.goods
    replace = normalization == REPLACE_LAST_ROW

    def f(p):
        out = -excess_demand(economy, p)
        if replace:
            out[-1] = np.sum(p) - 1.0
        return out

    def jac_f(p):
        J = -excess_demand_jacobian(economy, p)
        if replace:
            J[-1] = 1.0
        return J

    return NcpProblem(D, f, jac_f, name=economy.name)


def production_ncp(economy: ProductionEconomy, normalization: str = NO_NORMALIZATION) -> NcpProblem:
    """NCP over ``z = (p, y)`` with ``f(z) = (A y - xi(p), -A^T p)``.

    With ``replace-last-row`` the final component (the last activity's profit
    condition) becomes ``sum(p) - 1``.
    """
    _check_normalization(normalization)
    D, J = economy.goods, economy.activities
    A = economy.activity_matrix
    replace = normalization == REPLACE_LAST_ROW

    def f(z):
        p, y = z[:D], z[D:]
        out = np.concatenate([A @ y - excess_demand(economy, p), -(A.T @ p)])
        if replace:
            out[-1] = np.sum(p) - 1.0
        return out

    def jac_f(z):
        p = z[:D]
        M = np.zeros((D + J, D + J))
        M[:D, :D] = -excess_demand_jacobian(economy, p)
        M[:D, D:] = A
        M[D:, :D] = -A.T
        if replace:
            M[-1] = 0.0
            M[-1, :D] = 1.0
        return M

    def guard(z):
        # only prices enter demand; activity levels may sit on the boundary
        return np.concatenate([z[:D] > 0, np.ones(J, dtype=bool)])

    return NcpProblem(D + J, f, jac_f, guard, name=economy.name)


def default_normalization(model: EconomyModel) -> str:
    # replace-last-row drops the last activity's profit condition, which is
    # only recovered (through Walras' law) when that activity runs; it is
    # kept as an option but never chosen by default
    return NO_NORMALIZATION


def compile_model(model: EconomyModel, normalization: Optional[str] = None) -> NcpProblem:
    normalization = normalization or default_normalization(model)
    if isinstance(model, ProductionEconomy):
        return production_ncp(model, normalization)
    return exchange_ncp(model, normalization)


def normalize_prices(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    total = float(np.sum(p))
    if not total > 0:
        raise ValueError(f"price vector must have a positive sum, got {total!r}")
    return p / total


def known_vector(model: EconomyModel, eq: KnownEquilibrium) -> np.ndarray:
    """Stacked ``(p, y)`` of a known equilibrium, as the compiled NCP sees it."""
    if isinstance(model, ProductionEconomy):
        y = eq.activities if eq.activities is not None else np.zeros(model.activities)
        return np.concatenate([eq.prices, y])
    return np.array(eq.prices)


def match_known(model: EconomyModel, prices, activities=None, tol: float = MATCH_TOL) -> Optional[str]:
    best, label = np.inf, None
    for k, eq in enumerate(model.known_equilibria):
        dist = float(np.max(np.abs(normalize_prices(eq.prices) - prices)))
        if activities is not None and eq.activities is not None:
            dist = max(dist, float(np.max(np.abs(eq.activities - activities))))
        if dist < best:
            best, label = dist, eq.label or f"#{k + 1}"
    return label if best <= tol else None


def compute_equilibrium(
    model: EconomyModel,
    x0=None,
    cfg: TraceConfig = TraceConfig(),
    normalization: Optional[str] = None,
) -> EquilibriumReport:
    """Solve the model's NCP and report simplex-normalized prices.

    ``x0`` seeds the price block of the start (all ones by default); for
    production models it may also carry the activity block.  The
    complementary start is all ones.
    """
    normalization = normalization or default_normalization(model)
    problem = compile_model(model, normalization)
    D, J = model.goods, model.activities
    n = problem.n
    if x0 is None:
        start = np.ones(n)
    else:
        start = np.asarray(x0, dtype=float).reshape(-1)
        if start.size == D and J:
            start = np.concatenate([start, np.ones(J)])
        if start.size != n:
            raise ValueError(f"start must have {D} or {n} entries, got {start.size}")
    if np.any(start <= 0):
        raise ValueError("start point must be strictly positive")

    sol = solve_ncp(problem, start, np.ones(n), cfg)
    prices = normalize_prices(sol.x[:D])
    activities = np.array(sol.x[D:]) if J else None
    notes = []
    eq_residual = sol.residual
    if normalization == REPLACE_LAST_ROW:
        eq_residual = ncp_residual(compile_model(model, NO_NORMALIZATION), np.concatenate([prices, sol.x[D:]]))
        if eq_residual > cfg.eps_residual:
            msg = (
                f"replace-last-row solution is degenerate: last activity level {sol.x[-1]:.3e}, "
                f"equilibrium residual {eq_residual:.3e}"
            )
            notes.append(msg)
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return EquilibriumReport(
        prices=prices,
        activities=activities,
        complementarity_residual=sol.residual,
        equilibrium_residual=eq_residual,
        iterations=sol.iterations,
        restarts=sol.restarts_used,
        matched_known_equilibrium=match_known(model, prices, activities),
        corrector_steps=sol.trace.corrector_steps_total,
        raw_solution=sol.x,
        warnings=tuple(notes),
        trace=sol.trace,
    )
