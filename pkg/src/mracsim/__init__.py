"""Adaptive inner-loop control around outer-loop policies, with a
set-point-tracking pendulum benchmark.

Layout:
    linalg   -- Hurwitz tests, Lyapunov/Riccati solvers, Euler stepping
    plant    -- companion-form systems and the pendulum parameterization
    mrac     -- the adaptive controllers (linear / nonlinear variants)
    policy   -- LQR set-point policy and loadable MLP policies
    srip     -- the set-point-randomized task: cost, schedules, test envs
    harness  -- episode runner, paired benchmark, metrics
    export   -- CSV/JSON round-trippable serialization
    plots    -- figure rendering for the CLI report path
"""

from .harness import (
    BenchmarkTable,
    EpisodeRecord,
    LoopConfig,
    MetricsSummary,
    VariantSpec,
    compute_metrics,
    loop_config,
    run_benchmark,
    run_episode,
)
from .linalg import CareSolution, LyapunovSolution, euler_step, is_hurwitz, solve_care, solve_lyapunov
from .mrac import (
    AdaptiveState,
    IdealGains,
    MracConfig,
    MracDerived,
    adapt_step,
    build_D,
    control,
    default_config,
    derive,
    derive_linear,
    derive_nonlinear,
    ideal_gains,
    initial_adaptive_state,
    lyapunov_value,
    xi_linear,
    xi_nonlinear,
)
from .plant import (
    NOMINAL_PARAMS,
    CompanionSystem,
    PlantParams,
    PlantState,
    companion_from_pendulum,
    plant_derivative,
    step_plant,
    zeta,
)
from .policy import LqrPolicy, MlpPolicy, Observation, design_lqr, lqr_act, lqr_feedforward, mlp_act, mlp_load, mlp_save
from .srip import (
    CostWeights,
    SetpointSchedule,
    TestEnv,
    active_setpoint,
    load_envs,
    nominal_env,
    sample_schedule,
    sample_test_env,
    save_envs,
    step_cost,
)

__version__ = "0.1.0"
