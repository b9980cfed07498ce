"""Euler-Newton path following for the NCP homotopy.

The zero set of ``H`` is traced from ``(x0, y0, 1)`` down to ``lam = 0``.
Each cycle takes an Euler step of length ``h`` along the unit tangent, pulls
the prediction back with minimum-norm Newton updates (Moore-Penrose inverse
of the rectangular Jacobian), then adapts ``h`` from the corrector's effort.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from .ncp import EvaluationError, HomotopyPoint, NcpProblem, eval_F, eval_H, jac_H, ncp_residual

__all__ = [
    "SingularJacobianError",
    "CorrectorFailure",
    "NoConvergenceError",
    "TraceConfig",
    "PathRecord",
    "TraceResult",
    "NcpSolution",
    "tangent",
    "least_norm_solve",
    "predictor",
    "corrector",
    "adapt_steplength",
    "polish",
    "trace",
    "solve_ncp",
]

log = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
STALLED = "stalled"
DIVERGED = "diverged"

_RANK_TOL = 1e-12
# Points this far from the origin are treated as a path escaping to infinity.
_DIVERGENCE_NORM = 1e10
_FRACTION_TO_BOUNDARY = 0.9


class SingularJacobianError(np.linalg.LinAlgError):
    pass


class CorrectorFailure(RuntimeError):
    pass


class NoConvergenceError(RuntimeError):
    """Every start point (original plus restarts) failed to converge."""

    def __init__(self, message: str, best_residual: float, attempts: int, results=()):
        super().__init__(message)
        self.best_residual = best_residual
        self.attempts = attempts
        self.results = list(results)


@dataclass(frozen=True)
class TraceConfig:
    eps_lambda: float = 1e-6
    eps_residual: float = 1e-5
    h0: float = 0.3
    h_min: float = 1e-8
    h_max: float = 0.5
    max_iterations: int = 1000
    corrector_max: int = 10
    restart_max: int = 5
    rng_seed: int = 0
    final_polish: bool = True

    def __post_init__(self):
        if not (0 < self.h_min <= self.h0 <= self.h_max < 1):
            raise ValueError(
                f"steplengths must satisfy 0 < h_min <= h0 <= h_max < 1, "
                f"got h_min={self.h_min}, h0={self.h0}, h_max={self.h_max}"
            )
        if not (self.eps_lambda > 0 and self.eps_residual > 0):
            raise ValueError("tolerances must be strictly positive")
        if self.max_iterations < 1 or self.corrector_max < 1 or self.restart_max < 0:
            raise ValueError("iteration caps must be positive and restart_max nonnegative")


@dataclass(frozen=True)
class PathRecord:
    """One accepted predictor-corrector cycle."""

    lam: float
    residual: float
    steplength: float
    point: np.ndarray
    tangent: np.ndarray


@dataclass
class TraceResult:
    status: str
    endpoint: HomotopyPoint
    predictor_steps: int
    corrector_steps_total: int
    restarts_used: int = 0
    path_log: List[PathRecord] = field(default_factory=list)
    start: Optional[HomotopyPoint] = None

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


@dataclass
class NcpSolution:
    x: np.ndarray
    y: np.ndarray
    residual: float
    trace: TraceResult
    restarts_used: int
    start: HomotopyPoint

    @property
    def iterations(self) -> int:
        return self.trace.predictor_steps


def _row_space_qr(J: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Complete QR of ``J.T`` with a rank check on the triangular factor."""
    m, k = J.shape
    if m >= k:
        raise ValueError(f"expected a wide matrix, got shape {J.shape}")
    Q, R = np.linalg.qr(J.T, mode="complete")
    d = np.abs(np.diag(R[:m, :m]))
    scale = max(float(np.max(np.abs(J))), np.finfo(float).tiny)
    if m and d.min() < _RANK_TOL * scale:
        raise SingularJacobianError(
            f"Jacobian is rank deficient (pivot {d.min():.3e} relative to {scale:.3e})"
        )
    return Q, R[:m, :m]


def tangent(J: np.ndarray, previous: Optional[np.ndarray] = None) -> np.ndarray:
    """Unit kernel vector of a ``m x (m+1)`` full-row-rank matrix.

    Oriented to agree with ``previous`` when given, otherwise so that the last
    (lambda) component is negative.
    """
    J = np.asarray(J, dtype=float)
    if J.shape[1] != J.shape[0] + 1:
        raise ValueError(f"tangent needs an m x (m+1) matrix, got {J.shape}")
    Q, _ = _row_space_qr(J)
    t = Q[:, -1].copy()
    t /= np.linalg.norm(t)
    if previous is not None:
        if float(np.dot(t, previous)) < 0:
            t = -t
    elif t[-1] > 0:
        t = -t
    return t


def least_norm_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm solution of the underdetermined system ``A z = b``.

    Equal to ``A.T (A A.T)^{-1} b`` but computed from a QR factorization of
    ``A.T`` so the normal equations are never formed.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m = A.shape[0]
    Q, R = _row_space_qr(A)
    # A = R^T Q1^T  =>  z = Q1 R^{-T} b
    c = solve_triangular(R, b, trans="T")
    return Q[:, :m] @ c


def predictor(u: HomotopyPoint, t: np.ndarray, h: float) -> HomotopyPoint:
    return HomotopyPoint.from_vector(u.as_vector() + h * np.asarray(t, dtype=float))


def corrector(
    problem: NcpProblem, v: HomotopyPoint, start: HomotopyPoint, cfg: TraceConfig
) -> Tuple[HomotopyPoint, int]:
    """Minimum-norm Newton iteration back onto ``H = 0``.

    Lambda moves freely with the other coordinates.  Raises
    :class:`CorrectorFailure` on a nonpositive ``x``, two successive residual
    increases, or when ``cfg.corrector_max`` iterations do not suffice.
    """
    w = v
    increases = 0
    steps = 0
    try:
        if np.any(w.x <= 0):
            raise CorrectorFailure("nonpositive x coordinate in corrector input")
        Hw = eval_H(problem, w, start)
        res = float(np.max(np.abs(Hw)))
        while res > cfg.eps_residual:
            if steps >= cfg.corrector_max:
                raise CorrectorFailure(f"no convergence in {cfg.corrector_max} corrector steps (|H|={res:.2e})")
            J = jac_H(problem, w, start)
            dz = least_norm_solve(J, Hw)
            w = HomotopyPoint.from_vector(w.as_vector() - dz)
            steps += 1
            if np.any(w.x <= 0):
                raise CorrectorFailure("corrector produced a nonpositive x coordinate")
            Hw = eval_H(problem, w, start)
            new_res = float(np.max(np.abs(Hw)))
            increases = increases + 1 if new_res > res else 0
            if increases >= 2:
                raise CorrectorFailure("corrector residual increased twice in a row")
            res = new_res
    except (EvaluationError, np.linalg.LinAlgError) as exc:
        raise CorrectorFailure(str(exc)) from exc
    return w, steps


def _square_jacobian(problem: NcpProblem, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    n = problem.n
    return np.block([[np.diag(y), np.diag(x)], [-problem.jacobian(x), np.eye(n)]])


def land(problem: NcpProblem, v: HomotopyPoint, cfg: TraceConfig) -> Tuple[HomotopyPoint, int]:
    """Corrector for a step that lands on lambda = 0.

    ``H'`` loses rank at lambda = 0 when ``f`` is homogeneous (the solutions
    form a ray), so the last step is corrected on the hyperplane lambda = 0
    with least-squares Newton steps on ``F``.  Failure rules match
    :func:`corrector`.
    """
    n = problem.n
    x, y = np.array(v.x), np.array(v.y)
    steps = 0
    increases = 0
    try:
        Fv = eval_F(problem, x, y)
        res = float(np.max(np.abs(Fv)))
        while res > cfg.eps_residual:
            if steps >= cfg.corrector_max:
                raise CorrectorFailure(f"no convergence in {cfg.corrector_max} landing steps (|F|={res:.2e})")
            dz = np.linalg.lstsq(_square_jacobian(problem, x, y), Fv, rcond=None)[0]
            x, y = x - dz[:n], y - dz[n:]
            steps += 1
            Fv = eval_F(problem, x, y)
            new_res = float(np.max(np.abs(Fv)))
            increases = increases + 1 if new_res > res else 0
            if increases >= 2:
                raise CorrectorFailure("landing residual increased twice in a row")
            res = new_res
    except (EvaluationError, np.linalg.LinAlgError) as exc:
        raise CorrectorFailure(str(exc)) from exc
    return HomotopyPoint(x, y, 0.0), steps


def adapt_steplength(h: float, corrector_steps: Optional[int], failed: bool, cfg: TraceConfig) -> float:
    if failed:
        return h / 2
    if corrector_steps <= 2:
        return min(2 * h, cfg.h_max)
    if corrector_steps >= 5:
        return max(h / 2, cfg.h_min)
    return h


def polish(problem: NcpProblem, x, y, max_steps: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """Damped Newton on ``F(x, y) = 0`` with lambda held at zero.

    Uses least-squares (minimum-norm) steps because ``F'`` is singular for
    homogeneous problems; a step is kept only when it lowers ``|F|``.
    """
    n = problem.n
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    try:
        Fv = eval_F(problem, x, y)
    except EvaluationError:
        return x, y, 0
    res = float(np.max(np.abs(Fv)))
    taken = 0
    for _ in range(max_steps):
        if res == 0.0:
            break
        try:
            J = _square_jacobian(problem, x, y)
        except EvaluationError:
            break
        dz = np.linalg.lstsq(J, Fv, rcond=None)[0]
        accepted = False
        alpha = 1.0
        for _ in range(20):
            xn = x - alpha * dz[:n]
            yn = y - alpha * dz[n:]
            try:
                Fn = eval_F(problem, xn, yn)
            except EvaluationError:
                alpha /= 2
                continue
            rn = float(np.max(np.abs(Fn)))
            if rn < res:
                x, y, Fv, res = xn, yn, Fn, rn
                accepted = True
                break
            alpha /= 2
        if not accepted:
            break
        taken += 1
    return x, y, taken


def _limit_step(u: HomotopyPoint, t: np.ndarray, h: float) -> Tuple[float, bool]:
    """Shorten ``h`` so the Euler step keeps lambda in [0, 1] and (x, y) positive.

    Positivity uses a fraction-to-boundary rule, except for the final step:
    near the end of the path the inactive coordinates shrink in proportion to
    lambda, so when they would reach zero no sooner than lambda does the step
    lands on lambda = 0 directly.  The flag reports such a landing step.
    """
    lam, t_lam = u.lam, t[-1]
    h_lam = np.inf
    if t_lam < 0:
        h_lam = -lam / t_lam
    elif t_lam > 0:
        h = min(h, (1 - lam) / t_lam)
    w = np.concatenate([u.x, u.y])
    tw = t[:-1]
    shrinking = tw < 0
    h_pos = float(np.min(-w[shrinking] / tw[shrinking])) if np.any(shrinking) else np.inf
    if h_lam <= h and h_lam <= h_pos / _FRACTION_TO_BOUNDARY:
        return h_lam, True
    return min(h, _FRACTION_TO_BOUNDARY * h_pos), False


def trace(problem: NcpProblem, start: HomotopyPoint, cfg: TraceConfig = TraceConfig()) -> TraceResult:
    """Follow the homotopy path from ``start`` (lambda = 1) toward lambda = 0."""
    if start.n != problem.n:
        raise ValueError(f"start has dimension {start.n}, problem has {problem.n}")
    if not (np.all(start.x > 0) and np.all(start.y > 0)):
        raise ValueError("start point must be strictly positive")
    start = HomotopyPoint(start.x, start.y, 1.0)

    u = start
    h = cfg.h0
    t_prev: Optional[np.ndarray] = None
    t_u: Optional[np.ndarray] = None
    steps = 0
    corr_total = 0
    path: List[PathRecord] = []
    status = MAX_ITERATIONS

    while abs(u.lam) > cfg.eps_lambda:
        if steps >= cfg.max_iterations:
            status = MAX_ITERATIONS
            break
        if t_u is None:
            try:
                t_u = tangent(jac_H(problem, u, start), t_prev)
            except (EvaluationError, np.linalg.LinAlgError) as exc:
                log.debug("tangent failed at lam=%.3e: %s", u.lam, exc)
                status = DIVERGED
                break
        h_step, landing = _limit_step(u, t_u, h)
        if h_step < cfg.h_min:
            status = STALLED
            break
        steps += 1
        v = predictor(u, t_u, h_step)
        try:
            if landing:
                w, k = land(problem, v, cfg)
            else:
                w, k = corrector(problem, v, start, cfg)
            corr_total += k
            if w.lam < -cfg.eps_lambda or w.lam > 1.0:
                raise CorrectorFailure(f"corrected lambda {w.lam:.3e} left [0, 1]")
            if w.lam > cfg.eps_lambda and np.any(w.y <= 0):
                raise CorrectorFailure("nonpositive y coordinate before reaching lambda = 0")
        except CorrectorFailure as exc:
            log.debug("step %d rejected (h=%.3e): %s", steps, h_step, exc)
            h = adapt_steplength(h_step, None, True, cfg)
            if h < cfg.h_min:
                status = STALLED
                break
            continue

        res = float(np.max(np.abs(eval_H(problem, w, start))))
        path.append(PathRecord(w.lam, res, h_step, w.as_vector(), t_u))
        if np.max(np.abs(w.as_vector())) > _DIVERGENCE_NORM:
            u = w
            status = DIVERGED
            break
        t_prev = t_u
        t_u = None
        u = w
        h = adapt_steplength(min(max(h, cfg.h_min), cfg.h_max), k, False, cfg)
    else:
        status = CONVERGED

    endpoint = u
    if status == CONVERGED and cfg.final_polish:
        x, y, k = polish(problem, u.x, u.y, cfg.corrector_max)
        corr_total += k
        endpoint = HomotopyPoint(x, y, 0.0)
        res_pol = float(np.max(np.abs(eval_F(problem, x, y))))
        if res_pol > cfg.eps_residual:
            status = STALLED
    return TraceResult(status, endpoint, steps, corr_total, 0, path, start)


def solve_ncp(problem: NcpProblem, x0, y0, cfg: TraceConfig = TraceConfig()) -> NcpSolution:
    """Trace from ``(x0, y0)``; on failure restart from seeded random starts.

    Restart coordinates are drawn uniformly from [0.1, 2] by a generator
    seeded with ``cfg.rng_seed``.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    start = HomotopyPoint.start(x0, y0)
    if start.n != problem.n:
        raise ValueError(f"start has dimension {start.n}, problem has {problem.n}")
    best = np.inf
    results = []
    for attempt in range(cfg.restart_max + 1):
        if attempt:
            start = HomotopyPoint.start(rng.uniform(0.1, 2.0, problem.n), rng.uniform(0.1, 2.0, problem.n))
            log.info("restart %d from a fresh random start", attempt)
        result = trace(problem, start, cfg)
        result.restarts_used = attempt
        results.append(result)
        try:
            residual = ncp_residual(problem, result.endpoint.x)
        except EvaluationError:
            residual = np.inf
        if result.converged:
            return NcpSolution(
                np.array(result.endpoint.x), np.array(result.endpoint.y), residual, result, attempt, start
            )
        best = min(best, residual)
    raise NoConvergenceError(
        f"no convergence after {cfg.restart_max + 1} attempts (best residual {best:.3e})",
        best,
        cfg.restart_max + 1,
        results,
    )
