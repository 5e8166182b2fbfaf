"""
Small dense QP with amplitude and rate bounds on a move sequence:

    minimize    0.5 z'Hz + g'z
    subject to  |z_i| <= amplitude
                |z_i - z_{i-1}| <= rate,   z_{-1} = previous

Solved by a primal active-set method. Every iterate stays feasible, so a
capped run still returns an admissible sequence.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from lateralbench.exceptions import ConfigurationError, SolverError

logger = logging.getLogger(__name__)

_STEP_TOL = 1e-12
_MULTIPLIER_TOL = 1e-10


@dataclass(frozen=True)
class QPResult:
    solution: np.ndarray
    iterations: int
    converged: bool
    active: Tuple[Tuple[int, int], ...] = field(default_factory=tuple)


def _constraint_rows(n: int) -> np.ndarray:
    """Rows 0..n-1 bound z_i, rows n..2n-1 bound z_i - z_{i-1}."""
    rows = np.zeros((2 * n, n))
    rows[:n] = np.eye(n)
    for i in range(n):
        rows[n + i, i] = 1.0
        if i > 0:
            rows[n + i, i - 1] = -1.0
    return rows


def _bounds(n: int, amplitude: float, rate: float, previous: float) -> Tuple[np.ndarray, np.ndarray]:
    lower = np.concatenate([np.full(n, -amplitude), np.full(n, -rate)])
    upper = np.concatenate([np.full(n, amplitude), np.full(n, rate)])
    # first rate row compares against the previously applied move
    lower[n] += previous
    upper[n] += previous
    return lower, upper


def project_feasible(z, previous: float, amplitude: float, rate: float) -> np.ndarray:
    """Sequentially clip a sequence into the amplitude and rate bounds."""
    z = np.array(z, dtype=float)
    last = previous
    for i in range(z.size):
        z[i] = min(max(z[i], last - rate, -amplitude), last + rate, amplitude)
        last = z[i]
    return z


def _is_independent(rows: List[np.ndarray], candidate: np.ndarray) -> bool:
    if not rows:
        return bool(np.any(candidate))
    stacked = np.vstack(rows + [candidate])
    return np.linalg.matrix_rank(stacked) == len(rows) + 1


def solve_box_rate_qp(hessian, gradient, previous: float = 0.0, amplitude: float = 1.0,
                      rate: float = np.inf, start=None, max_iter: int = 10) -> QPResult:
    H = np.atleast_2d(np.asarray(hessian, dtype=float))
    g = np.asarray(gradient, dtype=float).ravel()
    n = g.size
    if H.shape != (n, n):
        raise ConfigurationError(f"Hessian shape {H.shape} does not match gradient size {n}")
    if amplitude < 0 or rate < 0:
        raise ConfigurationError("Bounds must be nonnegative")
    if abs(previous) > amplitude:
        previous = float(np.clip(previous, -amplitude, amplitude))

    rows = _constraint_rows(n)
    lower, upper = _bounds(n, amplitude, rate, previous)

    z = np.zeros(n) if start is None else np.asarray(start, dtype=float).ravel()[:n]
    if z.size < n:
        z = np.concatenate([z, np.full(n - z.size, z[-1] if z.size else 0.0)])
    z = project_feasible(z, previous, amplitude, rate)

    # working set entries are (row, side) with side +1 for upper, -1 for lower
    working: List[Tuple[int, int]] = []

    for iteration in range(1, max_iter + 1):
        grad = H @ z + g
        if working:
            A_w = np.array([side * rows[j] for j, side in working])
            k = A_w.shape[0]
            kkt = np.zeros((n + k, n + k))
            kkt[:n, :n] = H
            kkt[:n, n:] = A_w.T
            kkt[n:, :n] = A_w
            rhs = np.concatenate([-grad, np.zeros(k)])
            try:
                solution = np.linalg.solve(kkt, rhs)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"Singular KKT system: {exc}") from exc
            step, multipliers = solution[:n], solution[n:]
        else:
            try:
                step = np.linalg.solve(H, -grad)
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"Singular Hessian: {exc}") from exc
            multipliers = np.zeros(0)

        if not np.all(np.isfinite(step)):
            raise SolverError("Non-finite QP step")

        if np.max(np.abs(step), initial=0.0) <= _STEP_TOL * (1.0 + np.max(np.abs(z), initial=0.0)):
            if multipliers.size == 0 or multipliers.min() >= -_MULTIPLIER_TOL:
                return QPResult(z, iteration, True, tuple(working))
            working.pop(int(np.argmin(multipliers)))
            continue

        # longest admissible step along the search direction
        alpha, blocking = 1.0, None
        for j in range(2 * n):
            for side in (1, -1):
                if (j, side) in working:
                    continue
                a = side * rows[j]
                slope = a @ step
                if slope <= 1e-14:
                    continue
                bound = upper[j] if side > 0 else -lower[j]
                ratio = (bound - a @ z) / slope
                if ratio < alpha:
                    alpha, blocking = max(ratio, 0.0), (j, side)

        z = z + alpha * step
        if blocking is not None:
            current = [side * rows[j] for j, side in working]
            if _is_independent(current, blocking[1] * rows[blocking[0]]):
                working.append(blocking)

    return QPResult(project_feasible(z, previous, amplitude, rate), max_iter, False, tuple(working))
