"""CSV / JSON export and import of episode records and benchmark tables.

CSV files are UTF-8, comma-separated, ``.`` decimal, header row first, and
floats are written with 17 significant digits so a round trip through the
matching import reproduces the exact values.  JSON documents carry a
top-level ``schema_version``.  Squared angle errors are labelled ``deg2``
in headers: the magnitudes only make sense in squared degrees.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .harness import BenchmarkTable, EpisodeRecord, MetricsSummary, VariantResult, _aggregate
from .srip import TestEnv, _env_from_record, _env_to_record

SCHEMA_VERSION = "1"

EPISODE_COLUMNS = ("t", "theta", "theta_dot", "theta_r", "theta_dot_r", "e_theta", "e_theta_dot", "u", "u_r", "theta_set")
TABLE_COLUMNS = (
    "variant",
    "form",
    "n_envs",
    "n_diverged",
    "mean_avg_cost",
    "se_avg_cost",
    "mean_avg_e_theta_sq_deg2",
    "se_avg_e_theta_sq_deg2",
)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def export_episode_csv(record: EpisodeRecord, path) -> None:
    """Per-tick trajectory rows suitable for plotting the tracking panels."""
    columns = list(EPISODE_COLUMNS)
    series = [
        record.times,
        record.x[:, 0],
        record.x[:, 1],
        record.x_r[:, 0],
        record.x_r[:, 1],
        record.e[:, 0],
        record.e[:, 1],
        record.u,
        record.u_r,
        record.theta_set,
    ]
    if record.V is not None:
        columns.append("V")
        series.append(record.V)
    lines = [",".join(columns)]
    for row in zip(*series):
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def import_episode_csv(path) -> dict[str, np.ndarray]:
    """Read the per-tick series written by export_episode_csv."""
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
    if data.size == 0:
        return {name: np.zeros(0) for name in header}
    return {name: data[:, i] for i, name in enumerate(header)}


def _summary_dict(s: MetricsSummary) -> dict:
    return {
        "avg_cost": s.avg_cost,
        "total_cost": s.total_cost,
        "avg_e_theta_sq_deg2": s.avg_e_theta_sq_deg,
        "peak_abs_e_theta": s.peak_abs_e_theta,
    }


def export_episode_json(record: EpisodeRecord, path) -> None:
    """Full episode record, losslessly importable via import_episode_json."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "episode",
        "meta": record.meta,
        "times": record.times.tolist(),
        "x": record.x.tolist(),
        "x_r": record.x_r.tolist(),
        "u": record.u.tolist(),
        "u_r": record.u_r.tolist(),
        "e": record.e.tolist(),
        "theta_set": record.theta_set.tolist(),
        "costs": record.costs.tolist(),
        "cost_times": record.cost_times.tolist(),
        "summary": _summary_dict(record.summary),
        "V": record.V.tolist() if record.V is not None else None,
        "K_hat": record.K_hat.tolist() if record.K_hat is not None else None,
        "k_u_hat": record.k_u_hat.tolist() if record.k_u_hat is not None else None,
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def import_episode_json(path) -> EpisodeRecord:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("kind") != "episode":
        raise ValueError(f"{path} is not an episode document")
    s = doc["summary"]
    summary = MetricsSummary(
        avg_cost=s["avg_cost"],
        total_cost=s["total_cost"],
        avg_e_theta_sq_deg=s["avg_e_theta_sq_deg2"],
        peak_abs_e_theta=s["peak_abs_e_theta"],
    )
    opt = lambda key: np.asarray(doc[key]) if doc.get(key) is not None else None
    return EpisodeRecord(
        times=np.asarray(doc["times"]),
        x=np.asarray(doc["x"]),
        x_r=np.asarray(doc["x_r"]),
        u=np.asarray(doc["u"]),
        u_r=np.asarray(doc["u_r"]),
        e=np.asarray(doc["e"]),
        theta_set=np.asarray(doc["theta_set"]),
        costs=np.asarray(doc["costs"]),
        cost_times=np.asarray(doc["cost_times"]),
        summary=summary,
        V=opt("V"),
        K_hat=opt("K_hat"),
        k_u_hat=opt("k_u_hat"),
        meta=doc.get("meta", {}),
    )


def export_table_csv(table: BenchmarkTable, path) -> None:
    """One summary row per variant."""
    lines = [",".join(TABLE_COLUMNS)]
    for res in table.results:
        lines.append(
            ",".join(
                [
                    res.name,
                    table.form,
                    str(res.n_envs),
                    str(len(res.diverged)),
                    _fmt(res.mean_avg_cost),
                    _fmt(res.se_avg_cost),
                    _fmt(res.mean_e_theta_sq_deg),
                    _fmt(res.se_e_theta_sq_deg),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def import_table_csv(path) -> list[dict]:
    """Summary rows written by export_table_csv, with numeric fields parsed."""
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        values = line.split(",")
        row: dict = {}
        for name, value in zip(header, values):
            if name in ("variant", "form"):
                row[name] = value
            elif name in ("n_envs", "n_diverged"):
                row[name] = int(value)
            else:
                row[name] = float(value)
        rows.append(row)
    return rows


def export_table_json(table: BenchmarkTable, path) -> None:
    """Full benchmark table including per-env metrics and the env list."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "benchmark",
        "form": table.form,
        "master_seed": table.master_seed,
        "n_envs": table.n_envs,
        "envs": [_env_to_record(env) for env in table.envs],
        "results": [
            {
                "variant": res.name,
                "avg_costs": res.avg_costs.tolist(),
                "e_theta_sq_deg2": res.e_theta_sq_deg.tolist(),
                "diverged": res.diverged,
            }
            for res in table.results
        ],
    }
    Path(path).write_text(json.dumps(doc) + "\n", encoding="utf-8")


def import_table_json(path) -> BenchmarkTable:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("kind") != "benchmark":
        raise ValueError(f"{path} is not a benchmark document")
    envs = [_env_from_record(rec) for rec in doc["envs"]]
    results = [
        _aggregate(
            rec["variant"],
            np.asarray(rec["avg_costs"], dtype=float),
            np.asarray(rec["e_theta_sq_deg2"], dtype=float),
            list(rec["diverged"]),
        )
        for rec in doc["results"]
    ]
    return BenchmarkTable(
        form=doc["form"],
        master_seed=int(doc["master_seed"]),
        n_envs=int(doc["n_envs"]),
        envs=envs,
        results=results,
    )


def export_results(obj, fmt: str, path) -> None:
    """Dispatch on object kind and format ('csv' | 'json')."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown export format {fmt!r}; expected 'csv' or 'json'")
    try:
        if isinstance(obj, EpisodeRecord):
            (export_episode_csv if fmt == "csv" else export_episode_json)(obj, path)
        elif isinstance(obj, BenchmarkTable):
            (export_table_csv if fmt == "csv" else export_table_json)(obj, path)
        else:
            raise TypeError(f"cannot export object of type {type(obj).__name__}")
    except OSError as exc:
        raise OSError(f"export to {path} failed: {exc}") from exc
