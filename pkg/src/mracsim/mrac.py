"""Model-reference adaptive inner-loop controllers.

Two variants for companion-form plants, sharing the same adaptive machinery:

* linear:    u = K_hat^T x + k_u_hat * xi,
             xi = u_r - (1/b_r) (D alpha_r)^T e,
             with D diagonal, D_ii = omega_i where alpha_ri > 0 (omega_i > 1)
             and psi_i where alpha_ri < 0 (psi_i <= 0), which makes
             A_H = A_r - h (D alpha_r)^T Hurwitz for the systems in scope.

* nonlinear: u = K_hat^T zeta(x) + k_u_hat * xi,
             xi = u_r - (1/b_r) alpha_r^T (zeta - zeta_r) + (1/b_r) beta_r^T e,
             with beta_r strictly negative and A_H = A_r - h alpha_r^T + h beta_r^T.

Both adapt by
    K_hat' = -Gamma * regressor * (e^T P B_r),   k_u_hat' = -gamma_u * xi * (e^T P B_r)
where P solves P A_H + A_H^T P = -Q.  Along trajectories the stored energy
    V = e^T P e + lambda tr(Ktil^T Gamma^-1 Ktil) + lambda ktil^2 / gamma_u
is non-increasing in continuous time (V' = -e^T Q e), which is what the
Lyapunov-value helpers let the tests monitor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, NumericError, StabilityError
from .linalg import companion_matrix, is_hurwitz, is_spd, solve_lyapunov
from .plant import NONLINEAR, CompanionSystem

# Default controller constants, tuned empirically for the benchmark's LQR
# outer loop (reference torques reach O(100) at set-point changes, which is
# what bounds the usable gains of the explicit-Euler adaptive update).
# Two rate classes: the canonical set is sized for a 100 Hz inner loop; slow
# loops (inner interval above SLOW_LOOP_DT) get gentler error feedback and
# adaptation steps, since the discrete update's stability region shrinks
# with the square of the step.  Everything is configuration-exposed
# (see config.Settings).
DEFAULT_OMEGA = 4.0
DEFAULT_PSI = -19.0
DEFAULT_GAMMA_X = 60.0
DEFAULT_GAMMA_U = 0.8
DEFAULT_Q_POS = 50.0
DEFAULT_Q_VEL = 1.0
SLOW_LOOP_DT = 0.02
SLOW_OMEGA = 2.0
SLOW_PSI = -9.0
SLOW_GAMMA_X = 0.5
SLOW_GAMMA_U = 0.02


@dataclass(frozen=True)
class MracConfig:
    """Designer-chosen constants of the adaptive laws."""

    omega: np.ndarray
    psi: np.ndarray
    gamma_x: np.ndarray
    gamma_u: float
    Q: np.ndarray
    variant: str = "linear"
    beta_r: np.ndarray | None = None

    def __post_init__(self):
        omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        psi = np.atleast_1d(np.asarray(self.psi, dtype=float))
        gamma_x = np.asarray(self.gamma_x, dtype=float)
        Q = np.asarray(self.Q, dtype=float)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "gamma_x", gamma_x)
        object.__setattr__(self, "Q", Q)
        if np.any(omega <= 1.0):
            raise ValueError("every omega entry must exceed 1")
        if np.any(psi > 0.0):
            raise ValueError("every psi entry must be <= 0")
        if not is_spd(gamma_x):
            raise ValueError("gamma_x must be symmetric positive definite")
        if not self.gamma_u > 0.0:
            raise ValueError("gamma_u must be positive")
        if not is_spd(Q):
            raise ValueError("Q must be symmetric positive definite")
        if self.variant not in ("linear", "nonlinear"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.beta_r is not None:
            beta = np.atleast_1d(np.asarray(self.beta_r, dtype=float))
            object.__setattr__(self, "beta_r", beta)
            if np.any(beta >= 0.0) or not np.isfinite(beta).all():
                raise ValueError("beta_r entries must be strictly negative")
        elif self.variant == "nonlinear":
            raise ValueError("nonlinear variant requires beta_r")


def default_config(
    reference: CompanionSystem,
    inner_dt: float = 0.01,
    gamma_x: float | None = None,
    gamma_u: float | None = None,
    omega: float | None = None,
    psi: float | None = None,
    q_pos: float = DEFAULT_Q_POS,
    q_vel: float = DEFAULT_Q_VEL,
) -> MracConfig:
    """Config for a reference system, sized for the given inner-loop interval.

    Scalar gains broadcast to vectors.  Q weights the position error q_pos
    and the remaining states q_vel, which steers the learning signal
    e^T P B_r toward position errors.  The nonlinear beta_r defaults to the
    last row of the linear variant's A_H (alpha_r - D alpha_r), so the two
    variants share their error dynamics.
    """
    slow = inner_dt > SLOW_LOOP_DT
    if omega is None:
        omega = SLOW_OMEGA if slow else DEFAULT_OMEGA
    if psi is None:
        psi = SLOW_PSI if slow else DEFAULT_PSI
    if gamma_x is None:
        gamma_x = SLOW_GAMMA_X if slow else DEFAULT_GAMMA_X
    if gamma_u is None:
        gamma_u = SLOW_GAMMA_U if slow else DEFAULT_GAMMA_U
    n = reference.dim
    variant = reference.form
    beta_r = None
    if variant == NONLINEAR:
        diag = np.where(reference.alpha > 0.0, omega, psi)
        beta_r = reference.alpha - diag * reference.alpha
    return MracConfig(
        omega=np.full(n, omega),
        psi=np.full(n, psi),
        gamma_x=gamma_x * np.eye(n),
        gamma_u=gamma_u,
        Q=np.diag([q_pos] + [q_vel] * (n - 1)),
        variant=variant,
        beta_r=beta_r,
    )


@dataclass(frozen=True)
class MracDerived:
    """Constants precomputed from (alpha_r, b_r) and an MracConfig.

    ``correction`` is the error-feedback row used inside xi: D alpha_r for
    the linear variant.  ``PB`` caches P @ B_r so the adaptive update's
    scalar e^T P B_r is a single dot product.
    """

    A_H: np.ndarray
    P: np.ndarray
    h: np.ndarray
    alpha_r: np.ndarray
    b_r: float
    variant: str
    D: np.ndarray | None = None
    beta_r: np.ndarray | None = None
    correction: np.ndarray | None = None
    PB: np.ndarray | None = None


def build_D(alpha_r, config: MracConfig) -> np.ndarray:
    """Diagonal D with D_ii = omega_i where alpha_ri > 0, psi_i where < 0.

    Guarantees alpha_r - D alpha_r is strictly negative entrywise, which is
    what makes the derived A_H Hurwitz for second-order systems.
    """
    alpha_r = np.atleast_1d(np.asarray(alpha_r, dtype=float))
    if np.any(alpha_r == 0.0):
        raise ValueError("alpha_r has a zero entry; the D construction requires known nonzero signs")
    if config.omega.size != alpha_r.size or config.psi.size != alpha_r.size:
        raise DimensionError("omega/psi length does not match alpha_r")
    diag = np.where(alpha_r > 0.0, config.omega, config.psi)
    residual_row = alpha_r - diag * alpha_r
    if np.any(residual_row >= 0.0):
        raise StabilityError("alpha_r - D alpha_r is not strictly negative; check omega/psi")
    return np.diag(diag)


def _finish_derived(A_H, alpha_r, b_r, config, D=None, beta_r=None, correction=None) -> MracDerived:
    if not is_hurwitz(A_H):
        raise StabilityError(f"constructed A_H is not Hurwitz (last row {A_H[-1].tolist()})")
    P = solve_lyapunov(A_H, config.Q).P
    n = alpha_r.size
    h = np.zeros(n)
    h[-1] = 1.0
    PB = P @ (b_r * h)
    return MracDerived(
        A_H=A_H,
        P=P,
        h=h,
        alpha_r=alpha_r,
        b_r=float(b_r),
        variant=config.variant,
        D=D,
        beta_r=beta_r,
        correction=correction,
        PB=PB,
    )


def derive_linear(alpha_r, b_r: float, config: MracConfig) -> MracDerived:
    """Constants for the linear controller: D, A_H = A_r - h (D alpha_r)^T, P."""
    alpha_r = np.atleast_1d(np.asarray(alpha_r, dtype=float))
    D = build_D(alpha_r, config)
    d_alpha = D @ alpha_r
    A_H = companion_matrix(alpha_r - d_alpha)
    return _finish_derived(A_H, alpha_r, b_r, config, D=D, correction=d_alpha)


def derive_nonlinear(alpha_r, b_r: float, config: MracConfig) -> MracDerived:
    """Constants for the nonlinear controller: A_H has last row beta_r."""
    alpha_r = np.atleast_1d(np.asarray(alpha_r, dtype=float))
    beta_r = config.beta_r
    if beta_r is None or beta_r.size != alpha_r.size:
        raise DimensionError("config.beta_r must be set and match alpha_r in length")
    A_H = companion_matrix(beta_r)
    return _finish_derived(A_H, alpha_r, b_r, config, beta_r=beta_r)


def derive(reference: CompanionSystem, config: MracConfig) -> MracDerived:
    """Dispatch on the config variant, taking alpha_r/b_r from the reference."""
    b_r = reference.input_gain
    if config.variant == "nonlinear":
        return derive_nonlinear(reference.alpha, b_r, config)
    return derive_linear(reference.alpha, b_r, config)


@dataclass(frozen=True)
class AdaptiveState:
    """Adaptive gain estimates K_hat (vector) and k_u_hat (scalar)."""

    K_hat: np.ndarray
    k_u_hat: float

    def __post_init__(self):
        object.__setattr__(self, "K_hat", np.atleast_1d(np.asarray(self.K_hat, dtype=float)))


def initial_adaptive_state(n: int) -> AdaptiveState:
    """Standard initialization K_hat = 0, k_u_hat = 1 (exact feedthrough)."""
    return AdaptiveState(K_hat=np.zeros(n), k_u_hat=1.0)


def xi_linear(u_r: float, e, derived: MracDerived) -> float:
    """Augmented reference input u_r - (1/b_r) (D alpha_r)^T e."""
    return float(u_r - (derived.correction @ np.asarray(e, dtype=float)) / derived.b_r)


def xi_nonlinear(u_r: float, e, zeta_x, zeta_r, derived: MracDerived) -> float:
    """u_r - (1/b_r) alpha_r^T (zeta - zeta_r) + (1/b_r) beta_r^T e."""
    e = np.asarray(e, dtype=float)
    dz = np.asarray(zeta_x, dtype=float) - np.asarray(zeta_r, dtype=float)
    return float(u_r - (derived.alpha_r @ dz) / derived.b_r + (derived.beta_r @ e) / derived.b_r)


def control(adaptive: AdaptiveState, regressor, xi: float) -> float:
    """Control torque K_hat^T regressor + k_u_hat * xi.

    The regressor is the state x for the linear variant and zeta(x) for the
    nonlinear one.
    """
    return float(adaptive.K_hat @ np.asarray(regressor, dtype=float) + adaptive.k_u_hat * xi)


def adapt_step(
    adaptive: AdaptiveState,
    regressor,
    e,
    xi: float,
    derived: MracDerived,
    config: MracConfig,
    dt: float,
) -> AdaptiveState:
    """One explicit Euler step of the adaptive laws at step size dt.

    K_hat <- K_hat - dt * Gamma * regressor * (e^T P B_r)
    k_u_hat <- k_u_hat - dt * gamma_u * xi * (e^T P B_r)
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    e = np.asarray(e, dtype=float)
    s = float(e @ derived.PB)
    K_new = adaptive.K_hat - dt * s * (config.gamma_x @ np.asarray(regressor, dtype=float))
    k_new = adaptive.k_u_hat - dt * config.gamma_u * xi * s
    if not np.isfinite(K_new).all():
        raise NumericError(f"K_hat update produced non-finite values (e={e.tolist()}, xi={xi})")
    if not np.isfinite(k_new):
        raise NumericError(f"k_u_hat update produced a non-finite value (e={e.tolist()}, xi={xi})")
    return AdaptiveState(K_hat=K_new, k_u_hat=float(k_new))


@dataclass(frozen=True)
class IdealGains:
    """Matching-condition gains; computable only when the true plant is known.

    Satisfy A + lambda B_r K_star^T = A_r (row-wise on alpha) and
    lambda k_u_star = 1, so u* = K_star^T x + k_u_star u_r tracks exactly.
    """

    K_star: np.ndarray
    k_u_star: float
    lambda_true: float


def ideal_gains(true_system: CompanionSystem, reference: CompanionSystem) -> IdealGains:
    """Gains that make the true closed loop coincide with the reference model."""
    if true_system.dim != reference.dim:
        raise DimensionError("true and reference systems have different dimensions")
    if true_system.form != reference.form:
        raise ValueError("true and reference systems must share the same form")
    lam = true_system.input_gain / reference.input_gain
    K_star = (reference.alpha - true_system.alpha) / true_system.input_gain
    return IdealGains(K_star=K_star, k_u_star=1.0 / lam, lambda_true=lam)


def lyapunov_value(
    e,
    adaptive: AdaptiveState,
    ideal: IdealGains,
    derived: MracDerived,
    config: MracConfig,
) -> float:
    """Stored energy e^T P e + lambda ||Ktil||^2_(Gamma^-1) + lambda ktil^2/gamma_u."""
    e = np.asarray(e, dtype=float)
    K_til = adaptive.K_hat - ideal.K_star
    k_til = adaptive.k_u_hat - ideal.k_u_star
    lam = ideal.lambda_true
    value = float(
        e @ derived.P @ e
        + lam * (K_til @ np.linalg.solve(config.gamma_x, K_til))
        + lam * k_til**2 / config.gamma_u
    )
    return value
