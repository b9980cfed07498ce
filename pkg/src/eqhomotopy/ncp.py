"""Nonlinear complementarity problems and the positive-start homotopy map.

An NCP asks for ``x >= 0`` with ``f(x) >= 0`` and ``x . f(x) = 0``.  It is
rewritten as the square system ``F(x, y) = (x * y, y - f(x)) = 0`` over the
nonnegative orthant, and that system is embedded in the homotopy

    H(x, y, lam) = (x * y - lam * x0 * y0,  y - (1 - lam) f(x) - lam * y0)

which vanishes at ``(x0, y0, 1)`` for any strictly positive start.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "EvaluationError",
    "NcpProblem",
    "HomotopyPoint",
    "positive_guard",
    "eval_F",
    "eval_H",
    "jac_H",
    "fd_jacobian",
    "ncp_residual",
]

Evaluator = Callable[[np.ndarray], np.ndarray]


class EvaluationError(ValueError):
    """Raised when ``f`` or its Jacobian cannot be evaluated at a point.

    ``index`` is the offending coordinate when one can be named.
    """

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


def positive_guard(x: np.ndarray) -> np.ndarray:
    return x > 0


@dataclass(frozen=True)
class NcpProblem:
    """The mapping ``f`` of an NCP together with its dimension.

    ``domain_guard`` returns either a single bool or a per-coordinate mask of
    valid entries; it defaults to strict positivity.  When ``jac_f`` is None a
    central-difference Jacobian is used instead.
    """

    n: int
    f: Evaluator
    jac_f: Optional[Evaluator] = None
    domain_guard: Callable[[np.ndarray], object] = positive_guard
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.n!r}")

    def check_domain(self, x: np.ndarray) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise EvaluationError(f"expected a vector of length {self.n}, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise EvaluationError("non-finite coordinate", int(np.flatnonzero(~np.isfinite(x))[0]))
        ok = np.asarray(self.domain_guard(x))
        if ok.ndim == 0:
            if not bool(ok):
                raise EvaluationError("point outside the domain of f")
            return
        if not ok.all():
            i = int(np.flatnonzero(~ok)[0])
            raise EvaluationError(f"coordinate {i} = {x[i]!r} outside the domain of f", i)

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self.check_domain(x)
        fx = np.asarray(self.f(x), dtype=float)
        if fx.shape != (self.n,):
            raise EvaluationError(f"f returned shape {fx.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(fx)):
            raise EvaluationError("f returned a non-finite value", int(np.flatnonzero(~np.isfinite(fx))[0]))
        return fx

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        self.check_domain(x)
        if self.jac_f is None:
            return fd_jacobian(self.f, x)
        J = np.asarray(self.jac_f(x), dtype=float)
        if J.shape != (self.n, self.n):
            raise EvaluationError(f"jac_f returned shape {J.shape}, expected ({self.n}, {self.n})")
        if not np.all(np.isfinite(J)):
            raise EvaluationError("jac_f returned a non-finite value")
        return J


@dataclass(frozen=True)
class HomotopyPoint:
    """A point ``(x, y, lam)`` of the homotopy's domain."""

    x: np.ndarray
    y: np.ndarray
    lam: float

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        y = np.array(self.y, dtype=float).reshape(-1)
        if x.shape != y.shape:
            raise ValueError(f"x and y lengths differ: {x.size} vs {y.size}")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def n(self) -> int:
        return self.x.size

    def as_vector(self) -> np.ndarray:
        """Flatten to ``(x, y, lam)``, the column order used by :func:`jac_H`."""
        return np.concatenate([self.x, self.y, [self.lam]])

    @classmethod
    def from_vector(cls, v: np.ndarray) -> "HomotopyPoint":
        v = np.asarray(v, dtype=float)
        n = (v.size - 1) // 2
        if v.size != 2 * n + 1:
            raise ValueError(f"vector length {v.size} is not of the form 2n+1")
        return cls(v[:n], v[n : 2 * n], v[-1])

    @classmethod
    def start(cls, x0, y0) -> "HomotopyPoint":
        p = cls(x0, y0, 1.0)
        if not (np.all(p.x > 0) and np.all(p.y > 0)):
            raise ValueError("start point must be strictly positive")
        return p


def eval_F(problem: NcpProblem, x, y) -> np.ndarray:
    """Square reformulation ``(x * y, y - f(x))``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fx = problem.value(x)
    return np.concatenate([x * y, y - fx])


def eval_H(problem: NcpProblem, point: HomotopyPoint, start: HomotopyPoint) -> np.ndarray:
    x, y, lam = point.x, point.y, point.lam
    fx = problem.value(x)
    c0 = start.x * start.y
    # Written so that lam == 0 reproduces eval_F bit for bit and the start
    # point maps to an exact zero.
    first = x * y - lam * c0
    second = y - (1.0 - lam) * fx - lam * start.y
    return np.concatenate([first, second])


def jac_H(problem: NcpProblem, point: HomotopyPoint, start: HomotopyPoint) -> np.ndarray:
    """Analytic ``2n x (2n+1)`` Jacobian of :func:`eval_H`, columns ordered ``(x, y, lam)``."""
    n = point.n
    x, y, lam = point.x, point.y, point.lam
    fx = problem.value(x)
    J = np.zeros((2 * n, 2 * n + 1))
    J[:n, :n] = np.diag(y)
    J[:n, n : 2 * n] = np.diag(x)
    J[:n, -1] = -(start.x * start.y)
    if lam != 1.0:
        J[n:, :n] = -(1.0 - lam) * problem.jacobian(x)
    J[n:, n : 2 * n] = np.eye(n)
    J[n:, -1] = fx - start.y
    return J


def fd_jacobian(f: Evaluator, x) -> np.ndarray:
    """Central-difference Jacobian with steps ``max(1e-7, 1e-7 * |x_i|)``."""
    x = np.asarray(x, dtype=float)
    h = np.maximum(1e-7, 1e-7 * np.abs(x))
    cols = []
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h[i]
        xm[i] -= h[i]
        try:
            fp = np.asarray(f(xp), dtype=float)
            fm = np.asarray(f(xm), dtype=float)
        except EvaluationError as exc:
            raise EvaluationError(f"finite difference failed in coordinate {i}: {exc}", i) from exc
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise EvaluationError(f"non-finite value while differencing coordinate {i}", i)
        cols.append((fp - fm) / (xp[i] - xm[i]))
    return np.column_stack(cols).reshape(-1, x.size)


def ncp_residual(problem: NcpProblem, x) -> float:
    """``max_i |min(x_i, f_i(x))|``; zero exactly at solutions of the NCP."""
    x = np.asarray(x, dtype=float)
    fx = problem.value(x)
    return float(np.max(np.abs(np.minimum(x, fx))))
