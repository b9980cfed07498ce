"""Builtin test economies with their reference equilibria."""

from __future__ import annotations

import numpy as np

from .economy import (
    CES_A,
    CES_B,
    COBB_DOUGLAS,
    Consumer,
    ExchangeEconomy,
    KnownEquilibrium,
    ProductionEconomy,
)

__all__ = ["BUILTIN_IDS", "builtin_example", "synthetic_production_economy"]


def _ex1() -> ExchangeEconomy:
    # two consumers, two goods, three equilibria
    shares = np.array([[1024.0, 1.0], [1.0, 1024.0]])
    endow = np.array([[12.0, 1.0], [1.0, 12.0]])
    consumers = [Consumer(endow[i], shares[i], CES_A) for i in range(2)]
    known = [
        KnownEquilibrium([0.5, 0.5], label="p1*"),
        KnownEquilibrium([0.1129, 0.8871], label="p2*"),
        KnownEquilibrium([0.8871, 0.1129], label="p3*"),
    ]
    return ExchangeEconomy(tuple(consumers), tuple(known), name="ex1")


_EX2_SHARES = [
    [1, 1, 3, 0.1, 0.1, 1.2, 2, 1, 1, 0.7],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [9.9, 0.1, 5, 0.2, 6, 0.2, 8, 1, 1, 0.2],
    [1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
    [1, 13, 11, 9, 4, 0.9, 8, 1, 2, 10],
]
_EX2_ELASTICITY = [2, 1.3, 3, 0.2, 0.6]
_EX2_ENDOWMENT = [
    [0.6, 0.2, 0.2, 20, 0.1, 2, 9, 5, 5, 15],
    [0.2, 11, 12, 13, 14, 15, 16, 5, 5, 9],
    [0.4, 9, 8, 7, 6, 5, 4, 5, 7, 12],
    [1, 5, 5, 5, 5, 5, 5, 8, 3, 17],
    [8, 1, 22, 10, 0.3, 0.9, 5.1, 0.1, 6.2, 11],
]


def _ex2() -> ExchangeEconomy:
    consumers = [
        Consumer(w, a, CES_B, b) for w, a, b in zip(_EX2_ENDOWMENT, _EX2_SHARES, _EX2_ELASTICITY)
    ]
    known = [
        KnownEquilibrium(
            [0.187, 0.109, 0.099, 0.043, 0.117, 0.077, 0.117, 0.102, 0.099, 0.049], label="p*"
        )
    ]
    return ExchangeEconomy(tuple(consumers), tuple(known), name="ex2")


_EX3_ACTIVITY = [
    [-1, 0, 0, 0, 3, 5, -1, -1],
    [0, -1, 0, 0, -1, -1, 5, 5],
    [0, 0, -1, 0, -1, -1, -1, -4],
    [0, 0, 0, -1, -1, -4, -3, -1],
]


def _ex3() -> ProductionEconomy:
    consumers = (
        Consumer([0, 0, 10, 0], [0.8, 0.2, 0, 0], COBB_DOUGLAS),
        Consumer([0, 0, 0, 20], [0, 0.9, 0, 0], COBB_DOUGLAS),
    )
    known = [
        KnownEquilibrium([0.25, 0.25, 0.25, 0.25], [0, 0, 0, 0, 5, 0, 5, 0], label="p1*"),
        KnownEquilibrium(
            [0.2500, 0.2222, 0.3611, 0.1667], [0, 0, 0, 0, 5.1806, 0.3611, 4.4583, 0], label="p2*"
        ),
        KnownEquilibrium(
            [0.2500, 0.2708, 0.1667, 0.1190], [0, 0, 0, 0, 4.3690, 0, 5.1548, 0.1190], label="p3*"
        ),
    ]
    return ProductionEconomy(
        ExchangeEconomy(consumers, name="ex3", require_supply=False), np.array(_EX3_ACTIVITY, dtype=float), tuple(known), name="ex3"
    )


def _ex4() -> ProductionEconomy:
    consumers = (Consumer([0, 5, 3], [0.9, 0.1, 0], COBB_DOUGLAS),)
    known = [KnownEquilibrium([0.5000, 0.0833, 0.4167], [3.0], label="p*")]
    return ProductionEconomy(
        ExchangeEconomy(consumers, name="ex4", require_supply=False), np.array([[1.0], [-1.0], [-1.0]]), tuple(known), name="ex4"
    )


_BUILDERS = {"ex1": _ex1, "ex2": _ex2, "ex3": _ex3, "ex4": _ex4}
BUILTIN_IDS = tuple(_BUILDERS)


def builtin_example(name: str):
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; choose from {', '.join(BUILTIN_IDS)}") from None


def synthetic_production_economy(
    goods: int = 20, activities: int = 20, consumers: int = 5, seed: int = 0
) -> ProductionEconomy:
    """Random Cobb-Douglas production economy with a constructed equilibrium.

    Prices ``p*`` are drawn first; about half the activities (always
    including the last, so that replace-last-row stays well posed) earn zero
    profit at ``p*`` and run at positive levels, the rest lose money.
    Endowments are then chosen so that markets clear at ``(p*, y*)``.
    """
    rng = np.random.default_rng(seed)
    D, J, I = goods, activities, consumers
    p = rng.uniform(0.5, 1.5, D)
    p /= p.sum()

    A = rng.uniform(-1.0, 1.0, (D, J))
    active = np.zeros(J, dtype=bool)
    active[rng.permutation(J)[: J // 2]] = True
    active[-1] = True
    loss = np.where(active, 0.0, rng.uniform(0.05, 0.2, J))
    A -= np.outer(np.ones(D), (p @ A + loss) / p.sum())

    shares = rng.uniform(0.1, 1.0, (I, D))
    income = rng.uniform(1.0, 3.0, I)
    spend = shares / shares.sum(axis=1, keepdims=True)
    demand = (spend * income[:, None]).sum(axis=0) / p

    y = np.where(active, rng.uniform(0.5, 2.0, J), 0.0)
    net = A @ y
    # keep aggregate endowment (demand minus net output) comfortably positive
    scale = 0.5 * np.min(demand / np.maximum(np.abs(net), 1e-12))
    y *= min(1.0, scale)
    total = demand - A @ y

    # split the endowment so each consumer's income at p* is exactly `income`
    base = np.outer(income / income.sum(), total)
    noise = rng.normal(size=(I, D)) * total
    noise -= noise.mean(axis=0)
    noise -= np.outer(noise @ p, p) / (p @ p)
    noise -= noise.mean(axis=0)
    room = np.min(np.where(noise < 0, base / np.maximum(-noise, 1e-300), np.inf))
    endow = base + 0.5 * min(1.0, room) * noise

    cons = tuple(Consumer(endow[i], shares[i], COBB_DOUGLAS) for i in range(I))
    known = (KnownEquilibrium(p, y, label="constructed"),)
    name = f"synthetic-{D}x{J}-seed{seed}"
    return ProductionEconomy(
        ExchangeEconomy(cons, name=name, require_supply=False), A, known, name=name
    )
