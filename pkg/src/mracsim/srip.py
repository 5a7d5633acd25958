"""The set-point-randomized pendulum task.

An episode lasts 20 s and carries four angular set-points, each held for
5 s, drawn uniformly from [-pi, pi].  Performance is the quadratic step
cost q1 (theta - theta_set)^2 + q2 theta_dot^2 + r u^2 accumulated on the
10 Hz agent grid.  Test environments randomize the pendulum constants
(l, m in [0.75, 1.25], b in [0.001, 2.0], g fixed at 10) and are fully
determined by their seed, so benchmark sweeps replay byte-for-byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .plant import FORMS, PlantParams

DWELL_SECONDS = 5.0
SETPOINTS_PER_EPISODE = 4
L_RANGE = (0.75, 1.25)
M_RANGE = (0.75, 1.25)
B_RANGE = (0.001, 2.0)
GRAVITY = 10.0


@dataclass(frozen=True)
class CostWeights:
    """Quadratic step-cost weights; defaults are the benchmark values."""

    q1: float = 1.0
    q2: float = 0.1
    r: float = 0.001

    def __post_init__(self):
        if self.q1 < 0.0 or self.q2 < 0.0 or self.r < 0.0:
            raise ValueError("cost weights must be nonnegative")


def step_cost(theta: float, theta_dot: float, u: float, theta_set: float, w: CostWeights = CostWeights()) -> float:
    """q1 (theta - theta_set)^2 + q2 theta_dot^2 + r u^2, on unwrapped angles."""
    d = theta - theta_set
    return w.q1 * d * d + w.q2 * theta_dot * theta_dot + w.r * u * u


@dataclass(frozen=True)
class SetpointSchedule:
    """Piecewise-constant set-point sequence; slot k covers [k*dwell, (k+1)*dwell)."""

    setpoints: np.ndarray
    dwell: float = DWELL_SECONDS

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.setpoints, dtype=float))
        object.__setattr__(self, "setpoints", pts)
        if pts.size < 1 or not np.isfinite(pts).all():
            raise ValueError("setpoints must be a nonempty finite sequence")
        if np.any(np.abs(pts) > math.pi):
            raise ValueError("setpoints must lie in [-pi, pi]")
        if self.dwell <= 0.0:
            raise ValueError("dwell must be positive")

    @property
    def episode_seconds(self) -> float:
        return self.dwell * self.setpoints.size


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def sample_schedule(seed) -> SetpointSchedule:
    """Four independent uniform set-points in [-pi, pi]; deterministic in the seed."""
    rng = _rng(seed)
    pts = rng.uniform(-math.pi, math.pi, size=SETPOINTS_PER_EPISODE)
    return SetpointSchedule(setpoints=pts)


def active_setpoint(schedule: SetpointSchedule, t: float) -> float:
    """Set-point active at time t; the episode end clamps to the last slot."""
    if t < 0.0:
        raise ValueError(f"t must be nonnegative, got {t}")
    idx = min(int(t // schedule.dwell), schedule.setpoints.size - 1)
    return float(schedule.setpoints[idx])


@dataclass(frozen=True)
class TestEnv:
    """One randomized test environment: plant constants plus a schedule."""

    __test__ = False  # not a pytest case, despite the name

    params: PlantParams
    schedule: SetpointSchedule
    seed: int
    form: str

    def __post_init__(self):
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}")


def sample_test_env(seed: int, form: str) -> TestEnv:
    """Uniform draws of (l, m, b) in the benchmark ranges, then the schedule."""
    rng = _rng(seed)
    l = rng.uniform(*L_RANGE)
    m = rng.uniform(*M_RANGE)
    b = rng.uniform(*B_RANGE)
    params = PlantParams(m=m, l=l, b=b, g=GRAVITY)
    return TestEnv(params=params, schedule=sample_schedule(rng), seed=int(seed), form=form)


def nominal_env(form: str, seed: int = 0) -> TestEnv:
    """Environment with the reference-model constants; only the schedule is sampled."""
    return TestEnv(params=PlantParams(1.0, 1.0, 1.0, GRAVITY), schedule=sample_schedule(seed), seed=int(seed), form=form)


def _env_to_record(env: TestEnv) -> dict:
    return {
        "seed": env.seed,
        "form": env.form,
        "params": {"m": env.params.m, "l": env.params.l, "b": env.params.b, "g": env.params.g},
        "schedule": {"setpoints": env.schedule.setpoints.tolist(), "dwell": env.schedule.dwell},
    }


def _env_from_record(rec: dict) -> TestEnv:
    params = PlantParams(**rec["params"])
    schedule = SetpointSchedule(setpoints=np.asarray(rec["schedule"]["setpoints"]), dwell=rec["schedule"]["dwell"])
    return TestEnv(params=params, schedule=schedule, seed=int(rec["seed"]), form=rec["form"])


def save_envs(envs, path) -> None:
    """Write environments as JSON lines (one object per env) for replay."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for env in envs:
            fh.write(json.dumps(_env_to_record(env)) + "\n")


def load_envs(path) -> list[TestEnv]:
    """Read environments written by save_envs."""
    envs = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                envs.append(_env_from_record(json.loads(line)))
    return envs
