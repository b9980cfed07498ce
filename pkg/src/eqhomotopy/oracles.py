"""Brute-force reference solvers used to cross-check the path tracer.

Nothing here shares code with the homotopy: LCPs are solved by enumerating
every support, and determined square systems by plain damped Newton.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .economy import (
    EconomyModel,
    ProductionEconomy,
    excess_demand,
    excess_demand_jacobian,
)

__all__ = [
    "LcpInstance",
    "lcp_enumerate",
    "newton_square_solve",
    "SquareSystem",
    "normalized_equilibrium_system",
]

FEAS_TOL = 1e-10
MERGE_TOL = 1e-8


@dataclass(frozen=True)
class LcpInstance:
    M: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.array(self.M, dtype=float))
        q = np.array(self.q, dtype=float).reshape(-1)
        n = q.size
        if M.shape != (n, n):
            raise ValueError(f"M has shape {M.shape}, expected ({n}, {n})")
        if n > 14:
            raise ValueError(f"enumeration is limited to n <= 14, got n = {n}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.q.size


def lcp_enumerate(inst: LcpInstance) -> List[np.ndarray]:
    """Every solution of ``x >= 0, Mx + q >= 0, x . (Mx + q) = 0`` by support enumeration."""
    M, q, n = inst.M, inst.q, inst.n
    found: List[np.ndarray] = []
    for r in range(n + 1):
        for support in itertools.combinations(range(n), r):
            S = list(support)
            x = np.zeros(n)
            if S:
                try:
                    x[S] = np.linalg.solve(M[np.ix_(S, S)], -q[S])
                except np.linalg.LinAlgError:
                    continue
            w = M @ x + q
            if np.any(x < -FEAS_TOL) or np.any(w < -FEAS_TOL):
                continue
            x = np.maximum(x, 0.0)
            if not any(np.max(np.abs(x - y)) <= MERGE_TOL for y in found):
                found.append(x)
    return found


class NewtonFailure(RuntimeError):
    pass


def newton_square_solve(
    system: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    x0,
    tol: float = 1e-10,
    max_iter: int = 100,
) -> np.ndarray:
    """Damped Newton for a determined system; halves the step while the residual grows."""
    x = np.array(x0, dtype=float)
    Fx = np.asarray(system(x), dtype=float)
    res = np.max(np.abs(Fx))
    for _ in range(max_iter):
        if res <= tol:
            return x
        try:
            dx = np.linalg.solve(jacobian(x), Fx)
        except np.linalg.LinAlgError as exc:
            raise NewtonFailure(f"singular Jacobian: {exc}") from exc
        t = 1.0
        while True:
            xn = x - t * dx
            try:
                Fn = np.asarray(system(xn), dtype=float)
                rn = np.max(np.abs(Fn))
            except ValueError:
                rn = np.inf
            if rn < res or t < 1e-10:
                break
            t /= 2
        if not np.isfinite(rn):
            raise NewtonFailure("step left the domain of the system")
        x, Fx, res = xn, Fn, rn
    if res <= tol:
        return x
    raise NewtonFailure(f"no convergence in {max_iter} iterations (residual {res:.3e})")


@dataclass(frozen=True)
class SquareSystem:
    F: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray]
    n: int
    active: Sequence[int] = ()


def normalized_equilibrium_system(model: EconomyModel, active: Optional[Sequence[int]] = None) -> SquareSystem:
    """Equilibrium as a determined square system, assuming strictly positive prices.

    Unknowns are ``p`` followed by the levels of the ``active`` activities.
    Equations are market clearing ``xi(p) - A_S y_S = 0`` with its last row
    swapped for ``sum(p) - 1``, and zero profit ``A_S^T p = 0``.
    """
    D = model.goods
    if isinstance(model, ProductionEconomy):
        S = list(range(model.activities) if active is None else active)
        A = model.activity_matrix[:, S]
    else:
        S = []
        A = np.zeros((D, 0))
    k = len(S)

    def F(z):
        p, y = z[:D], z[D:]
        top = excess_demand(model, p) - A @ y
        top[-1] = np.sum(p) - 1.0
        return np.concatenate([top, A.T @ p])

    def jac(z):
        p = z[:D]
        M = np.zeros((D + k, D + k))
        M[:D, :D] = excess_demand_jacobian(model, p)
        M[:D, D:] = -A
        M[D - 1] = 0.0
        M[D - 1, :D] = 1.0
        M[D:, :D] = A.T
        return M

    return SquareSystem(F, jac, D + k, tuple(S))
