import math

import numpy as np
import pytest

from mracsim.errors import DivergenceError
from mracsim.harness import (
    EpisodeRecord,
    LoopConfig,
    VariantSpec,
    compute_metrics,
    loop_config,
    run_benchmark,
    run_episode,
    sample_benchmark_envs,
)
from mracsim.mrac import default_config, ideal_gains
from mracsim.plant import LINEAR, NONLINEAR, NOMINAL_PARAMS, companion_from_pendulum, plant_derivative
from mracsim.policy import Observation, design_lqr
from mracsim.srip import SetpointSchedule, TestEnv, active_setpoint, nominal_env, sample_test_env
from mracsim.plant import PlantParams


@pytest.fixture(scope="module")
def lqr_linear():
    return design_lqr(companion_from_pendulum(NOMINAL_PARAMS, LINEAR))


@pytest.fixture(scope="module")
def lqr_nonlinear():
    return design_lqr(companion_from_pendulum(NOMINAL_PARAMS, NONLINEAR))


class TestLoopConfig:
    def test_named_variants_match_rates(self):
        mrac100 = loop_config("mrac100")
        assert (mrac100.outer_rate_hz, mrac100.F1, mrac100.mrac_enabled) == (10.0, 10, True)
        assert mrac100.delta1 == pytest.approx(0.01)
        mrac10 = loop_config("mrac10")
        assert (mrac10.outer_rate_hz, mrac10.F1) == (10.0, 1)
        assert mrac10.delta1 == pytest.approx(0.1)
        direct100 = loop_config("direct100")
        assert (direct100.outer_rate_hz, direct100.mrac_enabled) == (100.0, False)

    def test_integration_grid_is_200hz(self):
        for name in ("direct100", "mrac100", "direct10", "mrac10"):
            cfg = loop_config(name)
            assert cfg.delta2 == pytest.approx(1.0 / 200.0)
            assert cfg.delta1 / cfg.plant_substeps == pytest.approx(1.0 / 200.0)

    def test_rate_invariants(self):
        cfg = loop_config("mrac100")
        assert abs(cfg.delta1 * cfg.F1 * cfg.outer_rate_hz - 1.0) <= 1e-12
        assert cfg.delta2 * cfg.F2 == pytest.approx(cfg.delta1)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            loop_config("mrac1000")

    def test_invalid_counts(self):
        with pytest.raises(ValueError):
            LoopConfig("x", 10.0, 0, 1, 1, True)


class TestRunEpisode:
    def test_feedthrough_zero_mismatch(self, lqr_linear):
        record = run_episode(nominal_env(LINEAR, seed=11), lqr_linear, loop_config("mrac100"))
        assert np.abs(record.e).max() <= 1e-9

    def test_tick_counts_exact(self, lqr_linear):
        env = sample_test_env(1, LINEAR)
        for name, inner in (("direct100", 100), ("mrac100", 100), ("direct10", 10), ("mrac10", 10)):
            record = run_episode(env, lqr_linear, loop_config(name))
            assert record.times.size == 20 * inner
            assert record.costs.size == 200
            assert record.x.shape == (20 * inner, 2)

    def test_cost_grid_is_10hz(self, lqr_linear):
        record = run_episode(sample_test_env(2, LINEAR), lqr_linear, loop_config("mrac100"))
        assert np.allclose(np.diff(record.cost_times), 0.1)
        assert record.cost_times[0] == 0.0

    def test_costs_match_recorded_series(self, lqr_linear):
        from mracsim.srip import step_cost

        record = run_episode(sample_test_env(3, LINEAR), lqr_linear, loop_config("mrac100"))
        for j, t in enumerate(record.cost_times):
            k = int(round(t / 0.01))
            expect = step_cost(record.x[k, 0], record.x[k, 1], record.u[k], record.theta_set[k])
            assert record.costs[j] == expect

    def test_direct_mode_matches_minimal_simulator(self, lqr_linear, rng):
        # plain ZOH policy-on-plant simulation, written independently of the runner
        for seed in rng.integers(0, 2**31, size=10):
            env = sample_test_env(int(seed), LINEAR)
            true_system = companion_from_pendulum(env.params, LINEAR)
            record = run_episode(env, lqr_linear, loop_config("direct100"))
            x = np.zeros(2)
            worst = 0.0
            for k in range(2000):
                t = k * 0.01
                theta_set = active_setpoint(env.schedule, t)
                u = lqr_linear.act(Observation(x[0], x[1], theta_set))
                worst = max(worst, float(np.abs(x - record.x[k]).max()))
                for _ in range(2):
                    x = x + 0.005 * plant_derivative(true_system, x, u)
            assert worst <= 1e-12

    def test_direct_mode_reference_runs_its_own_loop(self, lqr_linear):
        env = sample_test_env(4, LINEAR)
        record = run_episode(env, lqr_linear, loop_config("direct100"))
        # perturbed plant: true and reference trajectories must separate
        assert record.summary.avg_e_theta_sq_deg > 0.1
        # and the reference still converges to each set-point
        sched = env.schedule
        for slot, target in enumerate(sched.setpoints):
            k_end = int((slot + 1) * 5.0 / 0.01) - 1
            assert abs(record.x_r[k_end, 0] - target) < 0.05

    def test_mrac_policy_never_sees_true_state(self, lqr_linear):
        # freeze: in mrac mode u_r depends only on x_r; verified by replaying
        # the recorded x_r through the policy
        env = sample_test_env(5, LINEAR)
        record = run_episode(env, lqr_linear, loop_config("mrac100"))
        for k in range(0, 2000, 10):
            obs = Observation(record.x_r[k, 0], record.x_r[k, 1], record.theta_set[k])
            assert record.u_r[k] == lqr_linear.act(obs)

    def test_guard_violation_carries_context(self, lqr_linear):
        env = sample_test_env(6, LINEAR)
        with pytest.raises(DivergenceError) as err:
            run_episode(env, lqr_linear, loop_config("mrac100"), guard=1e-3)
        assert err.value.t is not None and err.value.signal is not None

    def test_duration_must_fit_grid(self, lqr_linear):
        with pytest.raises(ValueError):
            run_episode(nominal_env(LINEAR), lqr_linear, loop_config("mrac100"), duration=0.003)

    def test_form_mismatch_rejected(self, lqr_linear):
        env = sample_test_env(7, NONLINEAR)
        cfg = default_config(companion_from_pendulum(NOMINAL_PARAMS, LINEAR))
        with pytest.raises(ValueError, match="variant"):
            run_episode(env, lqr_linear, loop_config("mrac100"), mrac_cfg=cfg)

    def test_lyapunov_tracking_records_values(self, lqr_linear):
        env = sample_test_env(8, LINEAR)
        record = run_episode(env, lqr_linear, loop_config("mrac100"), track_lyapunov=True, record_gains=True)
        assert record.V is not None and record.V.shape == record.times.shape
        assert np.all(record.V >= 0.0)
        assert record.K_hat.shape == (2000, 2)

    def test_asymptotic_tracking_fixed_perturbation(self, lqr_linear, lqr_nonlinear):
        # adaptation must shrink the tracking error at least tenfold between
        # the first and last quarters of the episode, on both model forms
        params = PlantParams(m=1.25, l=1.25, b=2.0)
        for form, pol in ((LINEAR, lqr_linear), (NONLINEAR, lqr_nonlinear)):
            from mracsim.srip import sample_schedule

            env = TestEnv(params=params, schedule=sample_schedule(3), seed=3, form=form)
            record = run_episode(env, pol, loop_config("mrac100"))
            n = record.e.shape[0]
            peak_first = np.abs(record.e[: n // 4, 0]).max()
            mean_last = np.abs(record.e[3 * n // 4 :, 0]).mean()
            assert mean_last <= 0.1 * peak_first

    def test_bounded_adaptation_within_energy_budget(self, lqr_linear):
        env = sample_test_env(9, LINEAR)
        record = run_episode(env, lqr_linear, loop_config("mrac100"), track_lyapunov=True, record_gains=True)
        cfg = default_config(companion_from_pendulum(NOMINAL_PARAMS, LINEAR))
        gains = ideal_gains(companion_from_pendulum(env.params, LINEAR), companion_from_pendulum(NOMINAL_PARAMS, LINEAR))
        lam_max = float(np.linalg.eigvalsh(cfg.gamma_x).max())
        budget = math.sqrt(float(record.V.max()) * lam_max / gains.lambda_true)
        assert np.isfinite(record.K_hat).all() and np.isfinite(record.k_u_hat).all()
        deviation = np.linalg.norm(record.K_hat - gains.K_star, axis=1)
        assert deviation.max() <= budget * (1.0 + 1e-9)
        k_u_budget = math.sqrt(float(record.V.max()) * cfg.gamma_u / gains.lambda_true)
        assert np.abs(record.k_u_hat - gains.k_u_star).max() <= k_u_budget * (1.0 + 1e-9)


class TestComputeMetrics:
    def test_zero_everything(self):
        m = compute_metrics(np.zeros(5), np.zeros(7))
        assert (m.avg_cost, m.total_cost, m.avg_e_theta_sq_deg, m.peak_abs_e_theta) == (0, 0, 0, 0)

    def test_one_degree_constant_error(self):
        e = np.full(100, math.radians(1.0))
        m = compute_metrics(np.zeros(1), e)
        assert m.avg_e_theta_sq_deg == pytest.approx(1.0, rel=1e-12)

    def test_toy_costs(self):
        m = compute_metrics(np.array([1.0, 2.0, 3.0]), np.zeros(3))
        assert m.avg_cost == pytest.approx(2.0)
        assert m.total_cost == pytest.approx(6.0)

    def test_total_is_avg_times_count(self, lqr_linear):
        record = run_episode(sample_test_env(1, LINEAR), lqr_linear, loop_config("mrac100"))
        assert record.summary.total_cost == pytest.approx(record.summary.avg_cost * 200, rel=1e-12)


class TestRunBenchmark:
    def test_pairing_is_field_identical(self, lqr_linear):
        envs_a = sample_benchmark_envs(5, master_seed=3, form=LINEAR)
        envs_b = sample_benchmark_envs(5, master_seed=3, form=LINEAR)
        for a, b in zip(envs_a, envs_b):
            assert a.params == b.params
            assert np.array_equal(a.schedule.setpoints, b.schedule.setpoints)
            assert a.seed == b.seed

    def test_nominal_env_gives_zero_error_for_mrac(self, lqr_linear):
        record = run_episode(nominal_env(LINEAR, seed=0), lqr_linear, loop_config("mrac100"))
        assert record.summary.avg_e_theta_sq_deg <= 1e-16

    def test_benchmark_shapes_and_determinism(self, lqr_linear):
        variants = [
            VariantSpec("lqr-direct100", lqr_linear, loop_config("direct100")),
            VariantSpec("lqr-mrac100", lqr_linear, loop_config("mrac100")),
        ]
        t1 = run_benchmark(4, variants, master_seed=11, form=LINEAR)
        t2 = run_benchmark(4, variants, master_seed=11, form=LINEAR)
        assert [r.name for r in t1.results] == ["lqr-direct100", "lqr-mrac100"]
        for r1, r2 in zip(t1.results, t2.results):
            assert np.array_equal(r1.avg_costs, r2.avg_costs)
            assert np.array_equal(r1.e_theta_sq_deg, r2.e_theta_sq_deg)
            assert r1.diverged == r2.diverged

    def test_divergence_recorded_per_cell(self, lqr_linear):
        variants = [VariantSpec("tight-guard", lqr_linear, loop_config("mrac100"))]
        table = run_benchmark(3, variants, master_seed=1, form=LINEAR, guard=1e-2)
        res = table.results[0]
        assert len(res.diverged) == 3  # every perturbed env trips a 0.01 guard
        assert math.isnan(res.mean_avg_cost)
