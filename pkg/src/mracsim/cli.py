"""Command-line interface: single episodes, paired benchmarks, self tests."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import linalg
from .config import Settings, load_settings
from .errors import MracSimError
from .harness import VariantSpec, loop_config, run_benchmark, run_episode, VARIANT_NAMES
from .mrac import default_config
from .plant import FORMS, NOMINAL_PARAMS, companion_from_pendulum
from .policy import design_lqr, mlp_load
from .srip import CostWeights, nominal_env, sample_test_env


def _build_policy(spec: str, form: str, settings: Settings):
    if spec == "lqr":
        reference = companion_from_pendulum(NOMINAL_PARAMS, form)
        return design_lqr(
            reference,
            weights=(settings.lqr_q1, settings.lqr_q2),
            control_weight=settings.lqr_r,
            literal_feedback=settings.literal_lqr,
        )
    if spec.startswith("mlp:"):
        return mlp_load(spec[4:])
    raise ValueError(f"unknown policy {spec!r}; expected 'lqr' or 'mlp:<path>'")


def _mrac_cfg(form: str, settings: Settings, inner_dt: float):
    reference = companion_from_pendulum(NOMINAL_PARAMS, form)
    return default_config(
        reference,
        inner_dt=inner_dt,
        q_pos=settings.q_pos,
        q_vel=settings.q_vel,
        **settings.mrac_knobs(inner_dt),
    )


def _export(obj, path: str):
    from .export import export_results

    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        export_results(obj, "csv", path)
    elif suffix == ".json":
        export_results(obj, "json", path)
    else:
        raise ValueError(f"cannot infer export format from {path!r} (use .csv or .json)")


def _parse_variant_specs(raw: str, form: str, settings: Settings) -> list[VariantSpec]:
    specs = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        policy_part, sep, variant = item.rpartition("-")
        if not sep or variant not in VARIANT_NAMES:
            raise ValueError(f"variant spec {item!r} must look like '<policy>-<{'|'.join(VARIANT_NAMES)}>'")
        pol = _build_policy(policy_part, form, settings)
        loop = loop_config(variant, integration_hz=settings.integration_hz)
        cfg = _mrac_cfg(form, settings, loop.delta1) if loop.mrac_enabled else None
        specs.append(VariantSpec(name=item, policy=pol, loop=loop, mrac_cfg=cfg))
    if not specs:
        raise ValueError("no variants given")
    return specs


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--form", choices=FORMS, default="linear")
    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("--export", help="output file (.csv or .json)")
    parser.add_argument("--plot", help="figure file (.png/.pdf) rendered alongside the export")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mracsim", description="Adaptive inner-loop pendulum benchmark")
    sub = parser.add_subparsers(dest="command", required=True)

    ep = sub.add_parser("episode", help="run one episode and export the trajectory")
    _add_common(ep)
    ep.add_argument("--policy", default="lqr", help="'lqr' or 'mlp:<weights.json>'")
    ep.add_argument("--variant", choices=VARIANT_NAMES, default="mrac100")
    ep.add_argument("--env-seed", type=int, default=0)
    ep.add_argument("--nominal", action="store_true", help="use the reference-model constants for the true plant")
    ep.add_argument("--x0", default="0,0", help="initial state 'theta,theta_dot' shared by both trajectories")
    ep.add_argument("--track-lyapunov", action="store_true", help="record the stored-energy value per tick")

    be = sub.add_parser("bench", help="paired benchmark over sampled test environments")
    _add_common(be)
    be.add_argument("--n-envs", type=int, default=200)
    be.add_argument("--master-seed", type=int, default=0)
    be.add_argument(
        "--variants",
        default="lqr-direct100,lqr-mrac100,lqr-direct10,lqr-mrac10",
        help="comma list of <policy>-<variant> cells, e.g. lqr-direct100,lqr-mrac100",
    )

    st = sub.add_parser("selftest", help="run the built-in invariant checks")
    st.add_argument("--seed", type=int, default=20240)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except MracSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "selftest":
        from .selftest import CHECKS, run as run_selftest

        failures = run_selftest(seed=args.seed)
        print(f"{len(CHECKS) - failures} passed, {failures} failed")
        return 0 if failures == 0 else 1

    settings = load_settings(args.config) if args.config else Settings()
    linalg.LYAPUNOV_RESIDUAL_TOL = settings.lyap_tol
    linalg.CARE_RESIDUAL_TOL = settings.care_tol
    linalg.CARE_MAX_ITER = settings.care_max_iter
    weights = CostWeights(q1=settings.q1, q2=settings.q2, r=settings.r)

    if args.command == "episode":
        env = nominal_env(args.form, seed=args.env_seed) if args.nominal else sample_test_env(args.env_seed, args.form)
        pol = _build_policy(args.policy, args.form, settings)
        loop = loop_config(args.variant, integration_hz=settings.integration_hz)
        cfg = _mrac_cfg(args.form, settings, loop.delta1) if loop.mrac_enabled else None
        x0 = np.array([float(v) for v in args.x0.split(",")])
        record = run_episode(
            env,
            pol,
            loop,
            mrac_cfg=cfg,
            x0=x0,
            duration=settings.episode_seconds,
            cost_weights=weights,
            guard=settings.guard_bound,
            track_lyapunov=args.track_lyapunov and loop.mrac_enabled,
            record_gains=loop.mrac_enabled,
        )
        s = record.summary
        print(
            f"episode {args.variant} ({args.form}, env seed {args.env_seed}): "
            f"avg cost {s.avg_cost:.4g}, total {s.total_cost:.4g}, "
            f"avg e_theta^2 {s.avg_e_theta_sq_deg:.4g} deg^2, peak |e_theta| {s.peak_abs_e_theta:.4g} rad"
        )
        if args.export:
            _export(record, args.export)
            print(f"wrote {args.export}")
        if args.plot:
            from .plots import plot_episode

            plot_episode(record, args.plot)
            print(f"wrote {args.plot}")
        return 0

    if args.command == "bench":
        specs = _parse_variant_specs(args.variants, args.form, settings)
        table = run_benchmark(
            args.n_envs,
            specs,
            master_seed=args.master_seed,
            form=args.form,
            cost_weights=weights,
            guard=settings.guard_bound,
        )
        header = f"{'variant':24s} {'avg cost':>12s} {'se':>9s} {'e_theta^2 [deg2]':>17s} {'se':>9s} {'div':>4s}"
        print(header)
        for res in table.results:
            print(
                f"{res.name:24s} {res.mean_avg_cost:12.4g} {res.se_avg_cost:9.3g} "
                f"{res.mean_e_theta_sq_deg:17.4g} {res.se_e_theta_sq_deg:9.3g} {len(res.diverged):4d}"
            )
        if args.export:
            _export(table, args.export)
            print(f"wrote {args.export}")
        if args.plot:
            from .plots import plot_benchmark

            plot_benchmark(table, args.plot)
            print(f"wrote {args.plot}")
        return 0

    raise ValueError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
