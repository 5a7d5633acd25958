"""Dense linear-algebra kernels shared by every simulation module.

All systems in this package are small (n <= 4 in practice), so the solvers
favour exact direct methods over scalable ones: the Lyapunov equation is
solved through its Kronecker-vectorized normal form, and the continuous
algebraic Riccati equation by a Newton-Kleinman iteration warm-started from
a Bass-style stabilizing gain.  The Hurwitz test runs on the characteristic
polynomial (Faddeev-LeVerrier recursion plus a Routh table), so it stays
independent of the eigenvalue factorizations used to cross-check it in the
test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DimensionError, NumericError, StabilityError

# Residual targets for the matrix-equation solvers.  Callers may override
# per call; the harness configuration file rebinds them for a whole run.
# The Riccati iteration aims for CARE_RESIDUAL_TOL but, on ill-conditioned
# instances where rounding stalls the Newton steps, accepts any residual
# within the contract bound CARE_RESIDUAL_LIMIT.
LYAPUNOV_RESIDUAL_TOL = 1e-10
CARE_RESIDUAL_TOL = 1e-10
CARE_RESIDUAL_LIMIT = 1e-8
CARE_MAX_ITER = 100


def _as_square(A, name: str = "A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {A.shape}")
    if not np.isfinite(A).all():
        raise ValueError(f"{name} contains non-finite entries")
    return A


def _as_vector(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1:
        raise DimensionError(f"{name} must have at least one entry")
    if not np.isfinite(x).all():
        raise ValueError(f"{name} contains non-finite entries")
    return x


def is_spd(M, rel_tol: float = 1e-12) -> bool:
    """Symmetric positive definite test.

    Symmetry is checked to rel_tol relative to the matrix norm; definiteness
    via leading principal minors for n <= 3 and a symmetric eigenvalue
    computation for larger matrices.
    """
    M = _as_square(M, "M")
    scale = max(1.0, float(np.linalg.norm(M)))
    if np.linalg.norm(M - M.T) > rel_tol * scale:
        return False
    n = M.shape[0]
    if n <= 3:
        return all(np.linalg.det(M[:k, :k]) > 0.0 for k in range(1, n + 1))
    return bool(np.linalg.eigvalsh(0.5 * (M + M.T)).min() > 0.0)


def companion_matrix(last_row) -> np.ndarray:
    """Companion (controllable canonical) matrix with the given last row."""
    row = _as_vector(last_row, "last_row")
    n = row.size
    M = np.eye(n, k=1)
    M[-1, :] = row
    return M


def char_poly(A) -> np.ndarray:
    """Monic characteristic polynomial of A via the Faddeev-LeVerrier recursion.

    Returns coefficients [1, c1, ..., cn] of s^n + c1 s^(n-1) + ... + cn.
    Purely trace/multiply based; no eigenvalue computation.
    """
    A = _as_square(A)
    n = A.shape[0]
    coeffs = np.empty(n + 1)
    coeffs[0] = 1.0
    M = np.eye(n)
    for k in range(1, n + 1):
        if k > 1:
            M = A @ M + coeffs[k - 1] * np.eye(n)
        coeffs[k] = -np.trace(A @ M) / k
    return coeffs


def _routh_stable(coeffs: np.ndarray) -> bool:
    # coeffs monic; all roots in the open left half plane iff every first
    # column entry of the Routh table is strictly positive (zero pivots mean
    # imaginary-axis or symmetric roots, hence not strictly Hurwitz).
    if np.any(coeffs[1:] <= 0.0):
        return False
    n = coeffs.size - 1
    if n <= 2:
        return True
    width = (n + 2) // 2
    rows = np.zeros((n + 1, width + 1))
    rows[0, : coeffs[0::2].size] = coeffs[0::2]
    rows[1, : coeffs[1::2].size] = coeffs[1::2]
    for i in range(2, n + 1):
        pivot = rows[i - 1, 0]
        if pivot <= 0.0:
            return False
        for j in range(width):
            rows[i, j] = (pivot * rows[i - 2, j + 1] - rows[i - 2, 0] * rows[i - 1, j + 1]) / pivot
    return bool(np.all(rows[:, 0] > 0.0))


def is_hurwitz(A) -> bool:
    """True iff every eigenvalue of A has strictly negative real part.

    n <= 2 uses the trace/determinant criterion; larger matrices run a Routh
    table on the characteristic polynomial.
    """
    A = _as_square(A)
    n = A.shape[0]
    if n == 1:
        return bool(A[0, 0] < 0.0)
    if n == 2:
        return bool(np.trace(A) < 0.0 and np.linalg.det(A) > 0.0)
    return _routh_stable(char_poly(A))


def _lyap_kron(A: np.ndarray, Q: np.ndarray) -> np.ndarray:
    # Solve P A + A^T P = -Q by vectorizing to an n^2 x n^2 linear system.
    n = A.shape[0]
    lhs = np.kron(np.eye(n), A.T) + np.kron(A.T, np.eye(n))
    p = np.linalg.solve(lhs, -Q.reshape(-1, order="F"))
    return p.reshape((n, n), order="F")


@dataclass(frozen=True)
class LyapunovSolution:
    """Solution P of P A_H + A_H^T P = -Q, with its residual norm."""

    P: np.ndarray
    residual_norm: float


def solve_lyapunov(A_H, Q, tol: float | None = None) -> LyapunovSolution:
    """Solve the continuous Lyapunov equation P A_H + A_H^T P = -Q.

    A_H must be Hurwitz and Q symmetric positive definite; the returned P is
    symmetric positive definite with residual norm at most tol*max(1, ||Q||).
    """
    if tol is None:
        tol = LYAPUNOV_RESIDUAL_TOL
    A = _as_square(A_H, "A_H")
    Qm = _as_square(Q, "Q")
    if Qm.shape != A.shape:
        raise DimensionError(f"Q shape {Qm.shape} does not match A_H shape {A.shape}")
    if not is_spd(Qm):
        raise ValueError("Q must be symmetric positive definite")
    if not is_hurwitz(A):
        raise StabilityError("A_H is not Hurwitz; the Lyapunov equation has no SPD solution")
    P = _lyap_kron(A, Qm)
    P = 0.5 * (P + P.T)
    residual = float(np.linalg.norm(P @ A + A.T @ P + Qm))
    if not residual <= tol * max(1.0, float(np.linalg.norm(Qm))):
        raise ConvergenceError(f"Lyapunov residual {residual:.3e} exceeds tolerance")
    if not is_spd(P):
        raise NumericError("Lyapunov solve produced a non-positive-definite P")
    return LyapunovSolution(P=P, residual_norm=residual)


@dataclass(frozen=True)
class CareSolution:
    """Stabilizing solution of the continuous algebraic Riccati equation."""

    P: np.ndarray
    K: np.ndarray
    residual_norm: float


def solve_care(A, B, Q, R, tol: float | None = None, max_iter: int | None = None) -> CareSolution:
    """Solve A^T P + P A - P B R^-1 B^T P + Q = 0 for the stabilizing P.

    B is a single input column, R a positive scalar.  Newton-Kleinman
    iteration, warm-started from the Bass construction: with beta exceeding
    the spectral abscissa of A, the solution W of
        (A + beta I) W + W (A + beta I)^T = 2 B B^T
    yields a stabilizing gain K0 = B^T W^-1.  Returns P, the LQR gain
    K = R^-1 B^T P, and the final residual norm.
    """
    if tol is None:
        tol = CARE_RESIDUAL_TOL
    if max_iter is None:
        max_iter = CARE_MAX_ITER
    A = _as_square(A, "A")
    b = _as_vector(B, "B")
    n = A.shape[0]
    if b.size != n:
        raise DimensionError(f"B length {b.size} does not match A dimension {n}")
    Qm = _as_square(Q, "Q")
    if Qm.shape != A.shape:
        raise DimensionError("Q shape does not match A")
    if np.linalg.norm(Qm - Qm.T) > 1e-12 * max(1.0, np.linalg.norm(Qm)):
        raise ValueError("Q must be symmetric")
    if np.linalg.eigvalsh(0.5 * (Qm + Qm.T)).min() < -1e-12 * max(1.0, np.linalg.norm(Qm)):
        raise ValueError("Q must be positive semidefinite")
    R = float(R)
    if R <= 0.0:
        raise ValueError("R must be a positive scalar")

    Bc = b.reshape(n, 1)
    beta = float(np.linalg.norm(A)) + 1.0
    M = A + beta * np.eye(n)
    try:
        # M W + W M^T = 2 B B^T, rewritten for the P A + A^T P = -Q solver.
        W = _lyap_kron(M.T, -2.0 * (Bc @ Bc.T))
        W = 0.5 * (W + W.T)
        K = np.linalg.solve(W, b)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceError(f"stabilizing initialization failed ((A, B) stabilizable?): {exc}") from exc
    if not is_hurwitz(A - Bc @ K[None, :]):
        raise ConvergenceError("failed to construct a stabilizing initial gain; (A, B) may not be stabilizable")

    qscale = max(1.0, float(np.linalg.norm(Qm)))
    # first Newton step in the classic form, then increment form: solving the
    # Lyapunov equation for the small correction avoids the cancellation in
    # Q + K^T R K that otherwise floors the residual on stiff instances.
    P = _lyap_kron(A - Bc @ K[None, :], Qm + np.outer(K, K) * R)
    P = 0.5 * (P + P.T)
    best_residual = math.inf
    best = None
    previous = math.inf
    for iteration in range(max_iter):
        PB = P @ b
        K = PB / R
        residual_matrix = A.T @ P + P @ A - np.outer(PB, PB) / R + Qm
        residual = float(np.linalg.norm(residual_matrix))
        if residual < best_residual:
            best_residual, best = residual, (P, K)
        if residual <= tol * qscale:
            break
        if iteration >= 3 and residual >= 0.99 * previous:
            break  # rounding floor reached; keep the best iterate
        previous = residual
        correction = _lyap_kron(A - Bc @ K[None, :], residual_matrix)
        P = 0.5 * (P + correction + (P + correction).T)
    P, K = best
    if best_residual > CARE_RESIDUAL_LIMIT * qscale:
        raise ConvergenceError(
            f"Riccati iteration stalled at residual {best_residual:.3e} "
            f"(limit {CARE_RESIDUAL_LIMIT * qscale:.3e})"
        )
    if not is_hurwitz(A - Bc @ K[None, :]):
        raise ConvergenceError("Riccati iteration converged to a non-stabilizing gain")
    return CareSolution(P=P, K=K, residual_norm=best_residual)


def euler_step(derivative: Callable[[np.ndarray], np.ndarray], x, dt: float) -> np.ndarray:
    """One explicit Euler step x + dt*derivative(x).

    The derivative is evaluated exactly once; non-finite output raises
    NumericError with the offending state in the message.
    """
    x = np.asarray(x, dtype=float)
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    dx = np.asarray(derivative(x), dtype=float)
    if dx.shape != x.shape:
        raise DimensionError(f"derivative returned shape {dx.shape} for state shape {x.shape}")
    if not np.isfinite(dx).all():
        raise NumericError(f"derivative returned non-finite values at x={x.tolist()}, dt={dt}")
    return x + dt * dx
