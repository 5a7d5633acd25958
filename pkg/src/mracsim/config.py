"""Run settings and the key = value configuration file.

The file format is one ``key = value`` pair per line; blank lines and
``#`` comments are ignored.  Keys and defaults:

    omega          = 4.0     # D-matrix entry for positive alpha_r rows (> 1)
    psi            = -19.0   # D-matrix entry for negative alpha_r rows (<= 0)
    gamma_x        = 60.0    # state-channel adaptation gain (diagonal)
    gamma_u        = 0.8     # torque-channel adaptation gain
    q_pos          = 50.0    # Lyapunov design weight on the position error
    q_vel          = 1.0     # Lyapunov design weight on the remaining states
    slow_omega     = 2.0     # same knobs for slow inner loops
    slow_psi       = -9.0    #   (inner interval > slow_loop_dt seconds,
    slow_gamma_x   = 0.5     #    e.g. the 10 Hz lock-step variant, whose
    slow_gamma_u   = 0.02    #    explicit-Euler update tolerates less gain)
    slow_loop_dt   = 0.02
    q1             = 1.0     # step-cost weight on (theta - theta_set)^2
    q2             = 0.1     # step-cost weight on theta_dot^2
    r              = 0.001   # step-cost weight on u^2
    lqr_q1         = 1.0     # LQR design weight on theta
    lqr_q2         = 0.1     # LQR design weight on theta_dot
    lqr_r          = 0.001   # LQR design weight on torque
    literal_lqr    = false   # unshifted feedback -K x + u0 (comparison only)
    guard_bound    = 1e3     # divergence guard on |x|, |x_r|, |u_r|
    episode_seconds = 20.0
    integration_hz = 200.0   # Euler grid of both plants
    lyap_tol       = 1e-10   # Lyapunov solver residual target
    care_tol       = 1e-10   # Riccati solver residual target
    care_max_iter  = 100
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .mrac import (
    DEFAULT_GAMMA_U,
    DEFAULT_GAMMA_X,
    DEFAULT_OMEGA,
    DEFAULT_PSI,
    DEFAULT_Q_POS,
    DEFAULT_Q_VEL,
    SLOW_GAMMA_U,
    SLOW_GAMMA_X,
    SLOW_LOOP_DT,
    SLOW_OMEGA,
    SLOW_PSI,
)


@dataclass
class Settings:
    omega: float = DEFAULT_OMEGA
    psi: float = DEFAULT_PSI
    gamma_x: float = DEFAULT_GAMMA_X
    gamma_u: float = DEFAULT_GAMMA_U
    q_pos: float = DEFAULT_Q_POS
    q_vel: float = DEFAULT_Q_VEL
    slow_omega: float = SLOW_OMEGA
    slow_psi: float = SLOW_PSI
    slow_gamma_x: float = SLOW_GAMMA_X
    slow_gamma_u: float = SLOW_GAMMA_U
    slow_loop_dt: float = SLOW_LOOP_DT
    q1: float = 1.0
    q2: float = 0.1
    r: float = 0.001
    lqr_q1: float = 1.0
    lqr_q2: float = 0.1
    lqr_r: float = 0.001
    literal_lqr: bool = False
    guard_bound: float = 1e3
    episode_seconds: float = 20.0
    integration_hz: float = 200.0
    lyap_tol: float = 1e-10
    care_tol: float = 1e-10
    care_max_iter: int = 100

    def mrac_knobs(self, inner_dt: float) -> dict:
        """The (omega, psi, gamma) block appropriate for an inner-loop step."""
        if inner_dt > self.slow_loop_dt:
            return {
                "omega": self.slow_omega,
                "psi": self.slow_psi,
                "gamma_x": self.slow_gamma_x,
                "gamma_u": self.slow_gamma_u,
            }
        return {
            "omega": self.omega,
            "psi": self.psi,
            "gamma_x": self.gamma_x,
            "gamma_u": self.gamma_u,
        }


_FIELD_TYPES = {f.name: f.type for f in fields(Settings)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind in ("bool", bool):
        lowered = raw.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"config key {name!r}: expected a boolean, got {raw!r}")
    if kind in ("int", int):
        return int(raw)
    return float(raw)


def load_settings(path) -> Settings:
    """Parse a key = value settings file; unknown keys are an error."""
    settings = Settings()
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}; valid keys: {sorted(_FIELD_TYPES)}")
        setattr(settings, key, _coerce(key, raw))
    return settings
