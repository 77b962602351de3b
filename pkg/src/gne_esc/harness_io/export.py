"""Persist trajectories, metrics and run summaries.

CSV files are ASCII with ``.`` decimals, 17 significant digits and LF line
endings so repeated exports of the same run are byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import dumps_document
from .metrics import METRIC_COLUMNS, MetricsRow

AGENT_COLUMNS = ("xhat", "x", "mu", "z", "a", "n", "cost")


def _fmt(v) -> str:
    if v is None:
        return ""
    return format(float(v), ".17g")


def trajectory_header(n_agents: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n_agents + 1):
        cols.extend(f"{c}_{i}" for c in AGENT_COLUMNS)
    return cols


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_trajectory(path, traj) -> None:
    n = traj.states.shape[2]
    # per agent: xhat, played x, mu, z, a, n, cost
    blocks = np.stack(
        [traj.states[:, 0], traj.played, traj.states[:, 1], traj.states[:, 2],
         traj.states[:, 3], traj.states[:, 4], traj.costs],
        axis=2,
    )  # (K, N, 7)
    rows = (
        [_fmt(traj.times[k])] + [_fmt(v) for v in blocks[k].reshape(-1)]
        for k in range(len(traj))
    )
    _write_csv(Path(path), trajectory_header(n), rows)


def write_metrics(path, metrics: list[MetricsRow]) -> None:
    rows = ([_fmt(getattr(m, c)) for c in METRIC_COLUMNS] for m in metrics)
    _write_csv(Path(path), METRIC_COLUMNS, rows)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def summary_document(result) -> dict:
    traj, sol = result.trajectory, result.solution
    final = result.metrics[-1].as_dict()
    xhat = traj.xhat[-1]
    return _clean({
        "name": result.config.name,
        "t_end": float(traj.times[-1]),
        "samples": len(traj),
        "final": final,
        "final_xhat": xhat.tolist(),
        "final_mu": traj.mu[-1].tolist(),
        "final_amp": traj.amp[-1].tolist(),
        "final_inf_dist": float(np.max(np.abs(xhat - sol.x_star))),
        "max_abs_z_sum": float(np.max(np.abs(traj.z.sum(axis=1)))),
        "oracle": sol.as_dict(),
        "conditions": result.report.as_dict(),
    })


def export(result, out_dir, formats=("csv", "json")) -> list[Path]:
    """Write the run's files into ``out_dir`` and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        write_trajectory(out / "trajectory.csv", result.trajectory)
        write_metrics(out / "metrics.csv", result.metrics)
        written += [out / "trajectory.csv", out / "metrics.csv"]
    (out / "config.resolved.json").write_text(dumps_document(result.config.to_dict()), encoding="ascii")
    written.append(out / "config.resolved.json")
    if "json" in formats:
        text = json.dumps(summary_document(result), indent=2, sort_keys=True, allow_nan=False) + "\n"
        (out / "summary.json").write_text(text, encoding="ascii")
        written.append(out / "summary.json")
    return written
