"""Inner/outer-loop episode runner and the paired benchmark sweep.

One episode advances three coupled pieces on nested grids:

* outer loop (rate ``outer_rate_hz``): evaluates the policy to produce the
  reference torque u_r = pi(x_r);
* inner loop (``F1`` ticks per outer tick, interval delta1): forms the
  tracking error e = x - x_r, computes the applied torque u (through the
  adaptive controller, or u = u_r when the inner loop is disabled), updates
  the adaptive gains, then
* integration (``F2`` reference substeps of delta2 per inner tick, and
  ``plant_substeps`` true-plant substeps), both under zero-order hold.

With the inner loop disabled the policy reads the true state directly and
u is applied as computed (the plain sim-trained-policy deployment); the
reference model still runs its own closed loop on the same grid so the
divergence between the two trajectories remains measurable.

Costs are always sampled on the 10 Hz agent grid from the true state and
the torque applied at that instant, so every loop configuration is scored
on the same 200-step grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError
from .mrac import (
    AdaptiveState,
    MracConfig,
    adapt_step,
    control,
    default_config,
    derive,
    ideal_gains,
    initial_adaptive_state,
    lyapunov_value,
    xi_linear,
    xi_nonlinear,
)
from .plant import NOMINAL_PARAMS, NONLINEAR, CompanionSystem, companion_from_pendulum, plant_derivative, zeta
from .policy import Observation
from .srip import CostWeights, TestEnv, active_setpoint, sample_test_env, step_cost

AGENT_RATE_HZ = 10.0
INTEGRATION_RATE_HZ = 200.0
DEFAULT_GUARD = 1e3
VARIANT_NAMES = ("direct100", "mrac100", "direct10", "mrac10")


@dataclass(frozen=True)
class LoopConfig:
    """Rates and step counts of one loop configuration.

    delta1 = 1/(outer_rate_hz * F1) is the inner-loop interval, delta2 =
    delta1/F2 the reference integration step.  plant_substeps fixes the true
    plant's Euler grid per inner tick.
    """

    name: str
    outer_rate_hz: float
    F1: int
    F2: int
    plant_substeps: int
    mrac_enabled: bool

    def __post_init__(self):
        if self.outer_rate_hz <= 0.0:
            raise ValueError("outer_rate_hz must be positive")
        for attr in ("F1", "F2", "plant_substeps"):
            if int(getattr(self, attr)) < 1:
                raise ValueError(f"{attr} must be a positive count")
        if abs(self.delta1 * self.F1 * self.outer_rate_hz - 1.0) > 1e-12:
            raise ValueError("inconsistent rates: delta1 * F1 * outer_rate_hz != 1")

    @property
    def delta1(self) -> float:
        return 1.0 / (self.outer_rate_hz * self.F1)

    @property
    def delta2(self) -> float:
        return self.delta1 / self.F2

    @property
    def inner_rate_hz(self) -> float:
        return self.outer_rate_hz * self.F1


def loop_config(variant: str, integration_hz: float = INTEGRATION_RATE_HZ) -> LoopConfig:
    """Named loop configurations of the benchmark.

    direct100: policy straight onto the plant at 100 Hz (no inner loop).
    mrac100:   10 Hz policy, adaptive inner loop at 100 Hz (F1 = 10).
    direct10:  policy straight onto the plant at 10 Hz.
    mrac10:    10 Hz policy, inner loop in lock-step at 10 Hz (F1 = 1).

    Reference and true plant integrate at integration_hz (default 200 Hz)
    regardless of the loop rates.
    """
    table = {
        "direct100": (100.0, 1, False),
        "mrac100": (10.0, 10, True),
        "direct10": (10.0, 1, False),
        "mrac10": (10.0, 1, True),
    }
    if variant not in table:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANT_NAMES}")
    outer, F1, mrac_enabled = table[variant]
    delta1 = 1.0 / (outer * F1)
    substeps = delta1 * integration_hz
    if abs(substeps - round(substeps)) > 1e-9 or round(substeps) < 1:
        raise ValueError(f"integration rate {integration_hz} Hz does not divide the inner interval {delta1}")
    substeps = int(round(substeps))
    return LoopConfig(
        name=variant,
        outer_rate_hz=outer,
        F1=F1,
        F2=substeps,
        plant_substeps=substeps,
        mrac_enabled=mrac_enabled,
    )


@dataclass
class MetricsSummary:
    """Episode-level metrics: costs plus reference-tracking error."""

    avg_cost: float
    total_cost: float
    avg_e_theta_sq_deg: float
    peak_abs_e_theta: float


@dataclass
class EpisodeRecord:
    """Time-indexed episode data.

    Per-tick series (length = inner ticks, sampled at tick start): times, x,
    x_r, u, u_r, e, theta_set, and optionally the Lyapunov values V and the
    adaptive-gain traces.  costs live on the 10 Hz agent grid.
    """

    times: np.ndarray
    x: np.ndarray
    x_r: np.ndarray
    u: np.ndarray
    u_r: np.ndarray
    e: np.ndarray
    theta_set: np.ndarray
    costs: np.ndarray
    cost_times: np.ndarray
    summary: MetricsSummary
    V: np.ndarray | None = None
    K_hat: np.ndarray | None = None
    k_u_hat: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def compute_metrics(
    costs: np.ndarray | EpisodeRecord,
    e_theta: np.ndarray | None = None,
) -> MetricsSummary:
    """Metrics from a record (or raw cost / angle-error series).

    avg_cost and total_cost are over the agent grid; the tracking error is
    the mean squared angle error on the inner grid, in squared degrees
    (Table-style magnitudes are only consistent with degree units).
    """
    if isinstance(costs, EpisodeRecord):
        e_theta = costs.e[:, 0]
        costs = costs.costs
    costs = np.asarray(costs, dtype=float)
    e_theta = np.asarray(e_theta, dtype=float) if e_theta is not None else np.zeros(0)
    e_deg_sq = float(np.mean((e_theta * (180.0 / math.pi)) ** 2)) if e_theta.size else 0.0
    peak = float(np.max(np.abs(e_theta))) if e_theta.size else 0.0
    avg = float(np.mean(costs)) if costs.size else 0.0
    total = float(np.sum(costs))
    return MetricsSummary(avg_cost=avg, total_cost=total, avg_e_theta_sq_deg=e_deg_sq, peak_abs_e_theta=peak)


def _guard_check(value: float, bound: float, signal: str, t: float):
    if not value <= bound:
        raise DivergenceError(
            f"{signal} left the guard bound at t={t:.4f}s (|{signal}| = {value:.4g} > {bound:.4g})",
            t=t,
            signal=signal,
            value=value,
        )


def run_episode(
    env: TestEnv,
    policy,
    loop_cfg: LoopConfig,
    mrac_cfg: MracConfig | None = None,
    x0=None,
    duration: float | None = None,
    cost_weights: CostWeights = CostWeights(),
    guard: float = DEFAULT_GUARD,
    track_lyapunov: bool = False,
    record_gains: bool = False,
) -> EpisodeRecord:
    """Simulate one episode of the loop in loop_cfg on the given environment.

    The reference model always uses the nominal constants; the true plant is
    built from env.params.  x0 seeds both trajectories (default the origin).
    track_lyapunov computes the stored-energy value V at every inner tick
    from the matching-condition gains (possible here because the test
    environment's true parameters are known).
    """
    reference = companion_from_pendulum(NOMINAL_PARAMS, env.form)
    true_system = companion_from_pendulum(env.params, env.form)
    schedule = env.schedule
    if duration is None:
        duration = schedule.episode_seconds

    delta1 = loop_cfg.delta1
    delta2 = loop_cfg.delta2
    n_ticks_f = duration * loop_cfg.inner_rate_hz
    if abs(n_ticks_f - round(n_ticks_f)) > 1e-9:
        raise ValueError(f"duration {duration}s is not a whole number of inner ticks at {loop_cfg.inner_rate_hz} Hz")
    n_ticks = int(round(n_ticks_f))
    stride_f = loop_cfg.inner_rate_hz / AGENT_RATE_HZ
    if abs(stride_f - round(stride_f)) > 1e-9 or round(stride_f) < 1:
        raise ValueError("inner rate must be an integer multiple of the 10 Hz agent rate")
    stride = int(round(stride_f))
    h_plant = delta1 / loop_cfg.plant_substeps

    x = np.zeros(reference.dim) if x0 is None else np.asarray(x0, dtype=float).copy()
    x_r = x.copy()

    use_mrac = loop_cfg.mrac_enabled
    nonlinear = env.form == NONLINEAR
    derived = None
    adaptive: AdaptiveState | None = None
    ideal = None
    if use_mrac:
        if mrac_cfg is None:
            mrac_cfg = default_config(reference, inner_dt=delta1)
        if mrac_cfg.variant != env.form:
            raise ValueError(f"mrac config variant {mrac_cfg.variant!r} does not match env form {env.form!r}")
        derived = derive(reference, mrac_cfg)
        adaptive = initial_adaptive_state(reference.dim)
        if track_lyapunov:
            ideal = ideal_gains(true_system, reference)

    times = np.empty(n_ticks)
    xs = np.empty((n_ticks, reference.dim))
    xrs = np.empty((n_ticks, reference.dim))
    us = np.empty(n_ticks)
    urs = np.empty(n_ticks)
    es = np.empty((n_ticks, reference.dim))
    setpoints = np.empty(n_ticks)
    n_costs = n_ticks // stride
    costs = np.empty(n_costs)
    cost_times = np.empty(n_costs)
    V = np.empty(n_ticks) if (track_lyapunov and use_mrac) else None
    k_series = np.empty((n_ticks, reference.dim)) if record_gains and use_mrac else None
    ku_series = np.empty(n_ticks) if record_gains and use_mrac else None

    u_r = 0.0
    u_cmd = 0.0
    for k in range(n_ticks):
        t = k * delta1
        theta_set = active_setpoint(schedule, t)
        if k % loop_cfg.F1 == 0:
            u_r = policy.act(Observation(x_r[0], x_r[1], theta_set))
            _guard_check(abs(u_r), guard, "u_r", t)
            if not use_mrac:
                u_cmd = policy.act(Observation(x[0], x[1], theta_set))

        e = x - x_r
        if use_mrac:
            if nonlinear:
                z_x = zeta(x, true_system)
                z_r = zeta(x_r, reference)
                regressor = z_x
                xi = xi_nonlinear(u_r, e, z_x, z_r, derived)
            else:
                regressor = x
                xi = xi_linear(u_r, e, derived)
            u = control(adaptive, regressor, xi)
            if V is not None:
                V[k] = lyapunov_value(e, adaptive, ideal, derived, mrac_cfg)
            if k_series is not None:
                k_series[k] = adaptive.K_hat
                ku_series[k] = adaptive.k_u_hat
            adaptive = adapt_step(adaptive, regressor, e, xi, derived, mrac_cfg, delta1)
        else:
            u = u_cmd

        times[k] = t
        xs[k] = x
        xrs[k] = x_r
        us[k] = u
        urs[k] = u_r
        es[k] = e
        setpoints[k] = theta_set
        if k % stride == 0:
            costs[k // stride] = step_cost(x[0], x[1], u, theta_set, cost_weights)
            cost_times[k // stride] = t

        for _ in range(loop_cfg.F2):
            x_r = x_r + delta2 * plant_derivative(reference, x_r, u_r)
        for _ in range(loop_cfg.plant_substeps):
            x = x + h_plant * plant_derivative(true_system, x, u)

        t_next = t + delta1
        _guard_check(float(np.abs(x_r).max()), guard, "x_r", t_next)
        _guard_check(float(np.abs(x).max()), guard, "x", t_next)

    summary = compute_metrics(costs, es[:, 0])
    meta = {
        "variant": loop_cfg.name,
        "form": env.form,
        "env_seed": env.seed,
        "params": {"m": env.params.m, "l": env.params.l, "b": env.params.b, "g": env.params.g},
        "duration": duration,
        "x0": [0.0] * reference.dim if x0 is None else np.asarray(x0, dtype=float).tolist(),
    }
    return EpisodeRecord(
        times=times,
        x=xs,
        x_r=xrs,
        u=us,
        u_r=urs,
        e=es,
        theta_set=setpoints,
        costs=costs,
        cost_times=cost_times,
        summary=summary,
        V=V,
        K_hat=k_series,
        k_u_hat=ku_series,
        meta=meta,
    )


@dataclass(frozen=True)
class VariantSpec:
    """One benchmark column: a policy plus a loop configuration."""

    name: str
    policy: object
    loop: LoopConfig
    mrac_cfg: MracConfig | None = None


@dataclass
class VariantResult:
    """Aggregated metrics of one variant over the paired environment list."""

    name: str
    n_envs: int
    avg_costs: np.ndarray
    e_theta_sq_deg: np.ndarray
    diverged: list[int]
    mean_avg_cost: float
    se_avg_cost: float
    mean_e_theta_sq_deg: float
    se_e_theta_sq_deg: float


@dataclass
class BenchmarkTable:
    """Paired benchmark over n_envs environments shared by every variant."""

    form: str
    master_seed: int
    n_envs: int
    envs: list[TestEnv]
    results: list[VariantResult]


def _aggregate(name: str, avg_costs: np.ndarray, e2: np.ndarray, diverged: list[int]) -> VariantResult:
    ok = np.ones(avg_costs.size, dtype=bool)
    ok[diverged] = False
    cost_ok = avg_costs[ok]
    e2_ok = e2[ok]

    def mean_se(v: np.ndarray) -> tuple[float, float]:
        if v.size == 0:
            return math.nan, math.nan
        se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        return float(np.mean(v)), se

    mean_cost, se_cost = mean_se(cost_ok)
    mean_e2, se_e2 = mean_se(e2_ok)
    return VariantResult(
        name=name,
        n_envs=avg_costs.size,
        avg_costs=avg_costs,
        e_theta_sq_deg=e2,
        diverged=diverged,
        mean_avg_cost=mean_cost,
        se_avg_cost=se_cost,
        mean_e_theta_sq_deg=mean_e2,
        se_e_theta_sq_deg=se_e2,
    )


def sample_benchmark_envs(n_envs: int, master_seed: int, form: str) -> list[TestEnv]:
    """The deterministic environment list a benchmark run uses."""
    rng = np.random.default_rng(master_seed)
    seeds = rng.integers(0, 2**62, size=n_envs)
    return [sample_test_env(int(s), form) for s in seeds]


def run_benchmark(
    n_envs: int,
    variants: list[VariantSpec],
    master_seed: int,
    form: str,
    duration: float | None = None,
    cost_weights: CostWeights = CostWeights(),
    guard: float = DEFAULT_GUARD,
    x0=None,
    progress=None,
) -> BenchmarkTable:
    """Run every variant over the same seeded environment list (paired design).

    A diverging episode marks its (variant, env) cell and is excluded from
    that variant's means; it never aborts the sweep.
    """
    if n_envs < 1:
        raise ValueError("n_envs must be >= 1")
    envs = sample_benchmark_envs(n_envs, master_seed, form)
    results = []
    for spec in variants:
        avg_costs = np.full(n_envs, math.nan)
        e2 = np.full(n_envs, math.nan)
        diverged: list[int] = []
        for i, env in enumerate(envs):
            try:
                record = run_episode(
                    env,
                    spec.policy,
                    spec.loop,
                    mrac_cfg=spec.mrac_cfg,
                    x0=x0,
                    duration=duration,
                    cost_weights=cost_weights,
                    guard=guard,
                )
            except DivergenceError:
                diverged.append(i)
                continue
            avg_costs[i] = record.summary.avg_cost
            e2[i] = record.summary.avg_e_theta_sq_deg
            if progress is not None:
                progress(spec.name, i, n_envs)
        results.append(_aggregate(spec.name, avg_costs, e2, diverged))
    return BenchmarkTable(form=form, master_seed=int(master_seed), n_envs=n_envs, envs=envs, results=results)
