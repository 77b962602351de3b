"""Convergence metrics over recorded trajectories."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from ..integrator import Trajectory

METRIC_COLUMNS = ("t", "dist_to_oracle", "constraint_violation", "mu_spread", "max_amp", "z_sum")


@dataclass(frozen=True)
class MetricsRow:
    t: float
    dist_to_oracle: Optional[float]
    constraint_violation: float
    mu_spread: float
    max_amp: float
    z_sum: float

    def as_dict(self) -> dict:
        return asdict(self)


def compute_metrics(
    traj: Trajectory,
    total_demand: float,
    oracle_solution=None,
    seekers: Optional[Sequence[int]] = None,
) -> list[MetricsRow]:
    """One row per recorded sample.

    ``seekers`` restricts the multiplier spread and amplitude to players that
    run the seeker (stubborn players keep frozen zeros).
    """
    xhat, mu, amp, z = traj.xhat, traj.mu, traj.amp, traj.z
    cols = slice(None) if seekers is None else np.asarray(seekers, dtype=int)
    if oracle_solution is not None:
        dist = np.linalg.norm(xhat - np.asarray(oracle_solution.x_star)[None, :], axis=1)
    else:
        dist = [None] * len(traj)
    violation = np.abs(xhat.sum(axis=1) - total_demand)
    spread = mu[:, cols].max(axis=1) - mu[:, cols].min(axis=1)
    max_amp = np.abs(amp[:, cols]).max(axis=1)
    z_sum = z.sum(axis=1)
    return [
        MetricsRow(
            t=float(traj.times[k]),
            dist_to_oracle=None if dist[k] is None else float(dist[k]),
            constraint_violation=float(violation[k]),
            mu_spread=float(spread[k]),
            max_amp=float(max_amp[k]),
            z_sum=float(z_sum[k]),
        )
        for k in range(len(traj))
    ]


def peak_to_peak(traj: Trajectory, window: float, which: str = "played") -> np.ndarray:
    """Per-agent peak-to-peak excursion over the trailing ``window`` seconds."""
    data = traj.played if which == "played" else traj.xhat
    sel = traj.times >= traj.times[-1] - window
    return data[sel].max(axis=0) - data[sel].min(axis=0)
