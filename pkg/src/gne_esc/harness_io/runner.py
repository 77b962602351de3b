"""Run a resolved experiment and attach its oracle and condition report."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics import SeekerSystem
from ..graph import laplacian
from ..integrator import Trajectory, integrate
from ..oracle import (
    ConditionReport,
    GneSolution,
    best_response_stubborn,
    check_quadratic_conditions,
    solve_box_gne,
    solve_quadratic_gne,
)
from .config import ExperimentConfig
from .metrics import MetricsRow, compute_metrics


@dataclass(eq=False)
class RunResult:
    config: ExperimentConfig
    trajectory: Trajectory
    metrics: list[MetricsRow]
    solution: GneSolution
    report: ConditionReport


def projected_residual(qg, bounds, x, mu_bar) -> float:
    """Natural-map residual of the box-constrained KKT conditions."""
    x = np.asarray(x, dtype=float)
    lo = np.array([-np.inf if b is None or b[0] is None else b[0] for b in bounds])
    hi = np.array([np.inf if b is None or b[1] is None else b[1] for b in bounds])
    step = x - (qg.pseudo_gradient(x) + mu_bar)
    nat = x - np.clip(step, lo, hi)
    return float(max(np.max(np.abs(nat)), abs(x.sum() - qg.demands.sum())))


def reference_solution(cfg: ExperimentConfig) -> GneSolution:
    qg = cfg.quadratic
    if cfg.stubborn:
        return best_response_stubborn(qg, cfg.stubborn)
    if cfg.bounds is not None:
        box = solve_box_gne(qg, cfg.bounds)
        return GneSolution(box.x_star, box.mu_bar, projected_residual(qg, cfg.bounds, box.x_star, box.mu_bar))
    return solve_quadratic_gne(qg)


def condition_report(cfg: ExperimentConfig) -> ConditionReport:
    seekers = [i for i in range(cfg.graph.n) if i not in cfg.stubborn]
    lam2 = laplacian(cfg.graph.subgraph(seekers)).lambda2
    return check_quadratic_conditions(cfg.quadratic, cfg.params, cfg.initial.amp, lam2)


def run_experiment(cfg: ExperimentConfig) -> RunResult:
    traj = integrate(cfg.initial, cfg.params, cfg.graph, cfg.game, cfg.integrator, stubborn=cfg.stubborn)
    solution = reference_solution(cfg)
    seekers = SeekerSystem(cfg.params, cfg.graph, cfg.game, cfg.stubborn).seekers
    metrics = compute_metrics(traj, float(cfg.game.demands.sum()), solution, seekers)
    return RunResult(cfg, traj, metrics, solution, condition_report(cfg))
