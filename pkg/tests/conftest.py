"""Shared test oracles and generators, independent of the library code paths."""

import numpy as np
import pytest


def random_hurwitz(rng, n):
    """Random Hurwitz matrix: shift a random matrix left of its spectral abscissa."""
    A = rng.uniform(-1.0, 1.0, size=(n, n))
    shift = float(np.max(np.real(np.linalg.eigvals(A)))) + rng.uniform(0.2, 1.0)
    return A - shift * np.eye(n)


def random_spd(rng, n):
    M = rng.uniform(-1.0, 1.0, size=(n, n))
    return M @ M.T + (0.1 + rng.uniform(0.0, 1.0)) * np.eye(n)


def random_controllable(rng, n):
    """Random (A, B) pair resampled until the controllability matrix is well-conditioned."""
    while True:
        A = rng.uniform(-2.0, 2.0, size=(n, n))
        B = rng.uniform(0.5, 1.5, size=n) * rng.choice([-1.0, 1.0], size=n)
        ctrb = np.column_stack([np.linalg.matrix_power(A, k) @ B for k in range(n)])
        if np.linalg.matrix_rank(ctrb) == n and np.linalg.cond(ctrb) < 1e4:
            return A, B


def care_hamiltonian_oracle(A, B, Q, R):
    """Stabilizing CARE solution from the stable invariant subspace of the
    Hamiltonian matrix; an eigenvector method entirely separate from the
    Newton-Kleinman path under test."""
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, 1)
    H = np.block([[A, -B @ B.T / R], [-np.asarray(Q, dtype=float), -A.T]])
    w, V = np.linalg.eig(H)
    stable = V[:, np.real(w) < 0.0]
    assert stable.shape[1] == n, "Hamiltonian should have exactly n stable eigenvalues"
    X1, X2 = stable[:n, :], stable[n:, :]
    P = np.real(X2 @ np.linalg.inv(X1))
    return 0.5 * (P + P.T)


@pytest.fixture
def rng():
    return np.random.default_rng(987654321)
