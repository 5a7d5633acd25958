import json

import numpy as np
import pytest

from mracsim.cli import main
from mracsim.config import Settings, load_settings
from mracsim.export import (
    export_episode_csv,
    export_episode_json,
    export_results,
    export_table_csv,
    export_table_json,
    import_episode_csv,
    import_episode_json,
    import_table_csv,
    import_table_json,
)
from mracsim.harness import VariantSpec, loop_config, run_benchmark, run_episode
from mracsim.plant import LINEAR, NOMINAL_PARAMS, companion_from_pendulum
from mracsim.policy import design_lqr
from mracsim.srip import sample_test_env


@pytest.fixture(scope="module")
def lqr():
    return design_lqr(companion_from_pendulum(NOMINAL_PARAMS, LINEAR))


@pytest.fixture(scope="module")
def record(lqr):
    return run_episode(sample_test_env(5, LINEAR), lqr, loop_config("mrac100"), track_lyapunov=True)


@pytest.fixture(scope="module")
def table(lqr):
    variants = [
        VariantSpec("lqr-direct100", lqr, loop_config("direct100")),
        VariantSpec("lqr-mrac100", lqr, loop_config("mrac100")),
    ]
    return run_benchmark(3, variants, master_seed=9, form=LINEAR)


class TestEpisodeExport:
    def test_csv_round_trip_exact(self, record, tmp_path):
        path = tmp_path / "traj.csv"
        export_episode_csv(record, path)
        series = import_episode_csv(path)
        assert np.array_equal(series["t"], record.times)
        assert np.array_equal(series["theta"], record.x[:, 0])
        assert np.array_equal(series["theta_r"], record.x_r[:, 0])
        assert np.array_equal(series["e_theta"], record.e[:, 0])
        assert np.array_equal(series["u"], record.u)
        assert np.array_equal(series["u_r"], record.u_r)
        assert np.array_equal(series["V"], record.V)

    def test_csv_header_names_plot_columns(self, record, tmp_path):
        path = tmp_path / "traj.csv"
        export_episode_csv(record, path)
        header = path.read_text().splitlines()[0]
        for column in ("t", "theta", "theta_r", "e_theta", "u", "u_r"):
            assert column in header.split(",")

    def test_json_round_trip_exact(self, record, tmp_path):
        path = tmp_path / "traj.json"
        export_episode_json(record, path)
        loaded = import_episode_json(path)
        assert np.array_equal(loaded.times, record.times)
        assert np.array_equal(loaded.x, record.x)
        assert np.array_equal(loaded.x_r, record.x_r)
        assert np.array_equal(loaded.costs, record.costs)
        assert np.array_equal(loaded.V, record.V)
        assert loaded.summary.avg_cost == record.summary.avg_cost
        assert loaded.meta == record.meta

    def test_json_carries_schema_version(self, record, tmp_path):
        path = tmp_path / "traj.json"
        export_episode_json(record, path)
        doc = json.loads(path.read_text())
        assert doc["schema_version"] == "1"
        assert doc["kind"] == "episode"


class TestTableExport:
    def test_csv_header_flags_square_degree_units(self, table, tmp_path):
        path = tmp_path / "bench.csv"
        export_table_csv(table, path)
        header = path.read_text().splitlines()[0]
        assert "mean_avg_e_theta_sq_deg2" in header

    def test_empty_table_is_header_only(self, tmp_path):
        from mracsim.harness import BenchmarkTable

        path = tmp_path / "empty.csv"
        export_table_csv(BenchmarkTable(form=LINEAR, master_seed=0, n_envs=0, envs=[], results=[]), path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 1

    def test_csv_round_trip(self, table, tmp_path):
        path = tmp_path / "bench.csv"
        export_table_csv(table, path)
        rows = import_table_csv(path)
        assert [r["variant"] for r in rows] == [res.name for res in table.results]
        for row, res in zip(rows, table.results):
            assert row["mean_avg_cost"] == res.mean_avg_cost
            assert row["mean_avg_e_theta_sq_deg2"] == res.mean_e_theta_sq_deg
            assert row["n_diverged"] == len(res.diverged)

    def test_json_round_trip_with_envs(self, table, tmp_path):
        path = tmp_path / "bench.json"
        export_table_json(table, path)
        loaded = import_table_json(path)
        assert loaded.master_seed == table.master_seed
        assert loaded.n_envs == table.n_envs
        for a, b in zip(loaded.envs, table.envs):
            assert a.params == b.params
        for ra, rb in zip(loaded.results, table.results):
            assert np.array_equal(ra.avg_costs, rb.avg_costs)
            assert ra.mean_e_theta_sq_deg == rb.mean_e_theta_sq_deg

    def test_dispatch_rejects_unknown_format(self, table, tmp_path):
        with pytest.raises(ValueError):
            export_results(table, "yaml", tmp_path / "x.yaml")


class TestSettingsFile:
    def test_defaults_round_trip(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            """
            # adaptation
            gamma_x = 12.5
            gamma_u = 0.25
            literal_lqr = true
            care_max_iter = 64
            """
        )
        settings = load_settings(path)
        assert settings.gamma_x == 12.5
        assert settings.gamma_u == 0.25
        assert settings.literal_lqr is True
        assert settings.care_max_iter == 64
        assert settings.q1 == Settings().q1  # untouched keys keep defaults

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("gamma_z = 1.0\n")
        with pytest.raises(ValueError, match="unknown key"):
            load_settings(path)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("gamma_x 1.0\n")
        with pytest.raises(ValueError, match="key = value"):
            load_settings(path)

    def test_slow_block_selection(self):
        s = Settings()
        fast = s.mrac_knobs(0.01)
        slow = s.mrac_knobs(0.1)
        assert fast["gamma_u"] == s.gamma_u
        assert slow["gamma_u"] == s.slow_gamma_u


class TestCli:
    def test_episode_exports_and_plots(self, tmp_path, capsys):
        out = tmp_path / "traj.json"
        fig = tmp_path / "traj.png"
        code = main(
            [
                "episode",
                "--form",
                "nonlinear",
                "--variant",
                "mrac100",
                "--env-seed",
                "3",
                "--export",
                str(out),
                "--plot",
                str(fig),
            ]
        )
        assert code == 0
        assert out.exists() and fig.stat().st_size > 0
        assert "avg cost" in capsys.readouterr().out

    def test_episode_csv_export(self, tmp_path):
        out = tmp_path / "traj.csv"
        assert main(["episode", "--variant", "direct10", "--env-seed", "1", "--export", str(out)]) == 0
        assert out.read_text().splitlines()[0].startswith("t,")

    def test_bench_paired_table(self, tmp_path, capsys):
        out = tmp_path / "bench.csv"
        fig = tmp_path / "bench.png"
        code = main(
            [
                "bench",
                "--n-envs",
                "3",
                "--form",
                "linear",
                "--variants",
                "lqr-direct100,lqr-mrac100",
                "--master-seed",
                "7",
                "--export",
                str(out),
                "--plot",
                str(fig),
            ]
        )
        assert code == 0
        rows = import_table_csv(out)
        assert [r["variant"] for r in rows] == ["lqr-direct100", "lqr-mrac100"]
        assert fig.stat().st_size > 0

    def test_bench_rejects_bad_variant(self, capsys):
        assert main(["bench", "--n-envs", "1", "--variants", "lqr-warp9"]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as err:
            main(["episode", "--warp", "9"])
        assert err.value.code == 2

    def test_mlp_policy_from_file(self, tmp_path):
        # a linear stabilizing network: u = -43 th - 12.7 thd + 33 th_set
        # holds th_set exactly on the reference model since 33 = 43 - 10
        weights = {
            "layer_sizes": [3, 1],
            "activations": [],
            "weights": [[[-43.0, -12.7, 33.0]]],
            "biases": [[0.0]],
        }
        wpath = tmp_path / "policy.json"
        wpath.write_text(json.dumps(weights))
        out = tmp_path / "traj.csv"
        code = main(
            ["episode", "--policy", f"mlp:{wpath}", "--variant", "mrac100", "--env-seed", "2", "--export", str(out)]
        )
        assert code == 0

    def test_config_file_feeds_run(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("guard_bound = 1e-6\n")
        # an impossible guard makes any perturbed episode abort with exit 1
        assert main(["episode", "--env-seed", "4", "--config", str(cfg)]) == 1

    def test_selftest_smoke(self, capsys):
        code = main(["selftest"])
        out = capsys.readouterr().out
        assert code == 0, out
        assert "PASS" in out and "FAIL" not in out.replace("0 failed", "")
