"""Companion-form plant models and the torque-driven pendulum.

The pendulum dynamics (unitless constants, matching the benchmark's nominal
values m = l = b = 1, g = 10) are

    m l^2 th'' = m g l phi(th) - b th' + u,   phi = identity | sin

which in companion (controllable canonical) form reads

    xdot = A zeta(x) + lambda * B u,   zeta(x) = [phi(x1), x2, ..., xn]

with all free parameters in the last row of A and the input entering only
the last state.  ``lambda`` is an input-gain scale kept for systems whose
input matrix differs from the reference's; plants built from physical
parameters use lambda = 1 and carry the perturbation in the parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError
from .linalg import euler_step

LINEAR = "linear"
NONLINEAR = "nonlinear"
FORMS = (LINEAR, NONLINEAR)


@dataclass(frozen=True)
class PlantParams:
    """Physical pendulum constants: mass, length, viscous drag, gravity."""

    m: float
    l: float
    b: float
    g: float = 10.0

    def __post_init__(self):
        for name in ("m", "l", "b", "g"):
            value = getattr(self, name)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"PlantParams.{name} must be positive and finite, got {value}")


#: Reference-model constants used throughout the benchmark.
NOMINAL_PARAMS = PlantParams(m=1.0, l=1.0, b=1.0, g=10.0)


@dataclass(frozen=True)
class CompanionSystem:
    """Companion-form system: last A-row ``alpha``, input entry ``b_scalar``.

    ``form`` selects the shape function applied to the first state: identity
    for linear systems, sine for the nonlinear pendulum.  Every alpha entry
    must be nonzero (their signs are structural knowledge the adaptive
    controller relies on).
    """

    alpha: np.ndarray
    b_scalar: float
    lambda_scale: float = 1.0
    form: str = LINEAR

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "alpha", alpha)
        if alpha.ndim != 1 or alpha.size < 1:
            raise DimensionError("alpha must be a 1-D vector")
        if not np.isfinite(alpha).all() or np.any(alpha == 0.0):
            raise ValueError("alpha entries must be finite and nonzero")
        if self.b_scalar == 0.0 or not math.isfinite(self.b_scalar):
            raise ValueError("b_scalar must be nonzero and finite")
        if not (self.lambda_scale > 0.0 and math.isfinite(self.lambda_scale)):
            raise ValueError("lambda_scale must be positive")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}, got {self.form!r}")

    @property
    def dim(self) -> int:
        return self.alpha.size

    @property
    def input_gain(self) -> float:
        """Effective input coefficient lambda * b_scalar."""
        return self.lambda_scale * self.b_scalar

    @property
    def nonlinearity(self):
        """The scalar shape function phi applied to the first state."""
        return math.sin if self.form == NONLINEAR else _identity


def _identity(v: float) -> float:
    return v


def companion_from_pendulum(params: PlantParams, form: str) -> CompanionSystem:
    """Companion-form pendulum: alpha = [g/l, -b/(m l^2)], b_scalar = 1/(m l^2)."""
    ml2 = params.m * params.l**2
    alpha = np.array([params.g / params.l, -params.b / ml2])
    return CompanionSystem(alpha=alpha, b_scalar=1.0 / ml2, lambda_scale=1.0, form=form)


def zeta(x, system: CompanionSystem) -> np.ndarray:
    """Shape map [phi(x1), x2, ..., xn]; the identity for linear systems."""
    x = np.asarray(x, dtype=float)
    if x.shape != (system.dim,):
        raise DimensionError(f"state has shape {x.shape}, system dimension is {system.dim}")
    if system.form == LINEAR:
        return x
    z = x.copy()
    z[0] = math.sin(x[0])
    return z


def plant_derivative(system: CompanionSystem, x, u: float) -> np.ndarray:
    """Companion-form derivative: shifted zeta entries, input in the last row."""
    z = zeta(x, system)
    dx = np.empty_like(z)
    dx[:-1] = z[1:]
    dx[-1] = system.alpha @ z + system.lambda_scale * system.b_scalar * u
    return dx


@dataclass(frozen=True)
class PlantState:
    """State sample x at time t; for the pendulum x = [theta, theta_dot]."""

    x: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))


def step_plant(system: CompanionSystem, state: PlantState, u: float, dt: float, substeps: int = 1) -> PlantState:
    """Advance by dt using `substeps` Euler steps with u held constant (ZOH)."""
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    h = dt / substeps
    x = state.x
    for _ in range(substeps):
        x = euler_step(lambda xx: plant_derivative(system, xx, u), x, h)
    return replace(state, x=x, t=state.t + dt)


def pendulum_energy(params: PlantParams, x) -> float:
    """Mechanical energy of the nonlinear pendulum, 0.5 m l^2 w^2 + m g l cos(th).

    theta is measured from the upright pose, so the gravity torque
    +m g l sin(theta) derives from the potential +m g l cos(theta); along
    unforced trajectories dE/dt = -b theta_dot^2.
    """
    theta, theta_dot = float(x[0]), float(x[1])
    return 0.5 * params.m * params.l**2 * theta_dot**2 + params.m * params.g * params.l * math.cos(theta)
