"""State-space containers, zero-order-hold discretization and the DARE solver."""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import expm

from lateralbench.exceptions import ConfigurationError, SolverError
from lateralbench.options import SimulationOptions

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StateSpaceModel:
    A: np.ndarray
    B: np.ndarray
    sample_time: Optional[float] = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        if A.shape[0] != A.shape[1]:
            raise ConfigurationError(f"A must be square, got shape {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ConfigurationError(f"B has {B.shape[0]} rows, A has {A.shape[0]}")
        if self.sample_time is not None and not self.sample_time > 0:
            raise ConfigurationError(f"sample_time must be positive, got {self.sample_time}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def is_discrete(self) -> bool:
        return self.sample_time is not None

    @property
    def shape(self) -> Tuple[int, int]:
        return self.A.shape[0], self.B.shape[1]


def discretize_zoh(model: StateSpaceModel, sample_time: float) -> StateSpaceModel:
    """Exact zero-order-hold discretization via the augmented matrix exponential."""
    if model.is_discrete:
        raise ConfigurationError("Model is already discrete")
    if not sample_time > 0:
        raise ConfigurationError(f"sample_time must be positive, got {sample_time}")

    n, m = model.shape
    augmented = np.zeros((n + m, n + m))
    augmented[:n, :n] = model.A
    augmented[:n, n:] = model.B
    phi = expm(augmented * sample_time)
    return StateSpaceModel(phi[:n, :n], phi[:n, n:], sample_time)


def _validate_weights(Q: np.ndarray, R: np.ndarray, n: int, m: int):
    if Q.shape != (n, n):
        raise ConfigurationError(f"Q must be {n}x{n}, got {Q.shape}")
    if R.shape != (m, m):
        raise ConfigurationError(f"R must be {m}x{m}, got {R.shape}")
    if np.linalg.eigvalsh(0.5 * (R + R.T)).min() <= 0:
        raise ConfigurationError("R must be positive definite")
    if np.linalg.eigvalsh(0.5 * (Q + Q.T)).min() < -1e-12:
        raise ConfigurationError("Q must be positive semidefinite")


def riccati_solution(A, B, Q, R, tolerance: Optional[float] = None,
                     max_iterations: Optional[int] = None) -> np.ndarray:
    """Solve the discrete algebraic Riccati equation by fixed-point iteration.

    Iterates P <- Q + A'PA - A'PB (R + B'PB)^-1 B'PA starting from P = Q
    until the largest entry change falls below ``tolerance`` (relative to
    the magnitude of P). Unset limits come from the ``DARE_TOL`` and
    ``DARE_MAX_ITER`` settings.
    """
    if tolerance is None or max_iterations is None:
        options = SimulationOptions.from_settings()
        tolerance = options.dare_tol if tolerance is None else tolerance
        max_iterations = options.dare_max_iter if max_iterations is None else max_iterations

    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    R = np.atleast_2d(np.asarray(R, dtype=float))
    n, m = A.shape[0], B.shape[1]
    _validate_weights(Q, R, n, m)

    P = Q.copy()
    At = A.T
    for iteration in range(1, max_iterations + 1):
        BtP = B.T @ P
        gain = np.linalg.solve(R + BtP @ B, BtP @ A)
        P_next = Q + At @ P @ A - At @ P @ B @ gain
        P_next = 0.5 * (P_next + P_next.T)
        change = np.max(np.abs(P_next - P))
        P = P_next
        if not np.all(np.isfinite(P)):
            raise SolverError("Riccati iteration diverged (pair not stabilizable?)")
        if change <= tolerance * max(1.0, np.max(np.abs(P))):
            logger.debug(f"DARE converged after {iteration} iterations")
            return P

    raise SolverError(f"DARE did not converge within {max_iterations} iterations")


def solve_dare(A, B, Q, R, tolerance: Optional[float] = None,
               max_iterations: Optional[int] = None) -> np.ndarray:
    """Return the infinite-horizon LQR gain K = (R + B'PB)^-1 B'PA."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    R = np.atleast_2d(np.asarray(R, dtype=float))

    P = riccati_solution(A, B, Q, R, tolerance, max_iterations)
    BtP = B.T @ P
    K = np.linalg.solve(R + BtP @ B, BtP @ A)

    radius = np.max(np.abs(np.linalg.eigvals(A - B @ K)))
    if radius >= 1.0:
        raise SolverError(f"Closed loop not stable (spectral radius {radius:.6f})")
    return K


def riccati_residual(A, B, Q, R, P) -> float:
    """Infinity norm of the DARE residual for a candidate solution ``P``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float)
    if B.ndim == 1:
        B = B.reshape(-1, 1)
    R = np.atleast_2d(np.asarray(R, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    BtPA = B.T @ P @ A
    residual = P - A.T @ P @ A + BtPA.T @ np.linalg.solve(R + B.T @ P @ B, BtPA) - Q
    return float(np.max(np.abs(residual)))
