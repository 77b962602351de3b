"""Fixed-step explicit integration of the seeking dynamics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Mapping, Optional

import numpy as np

from .dynamics import AMP, MU, XHAT, Z, SeekerParams, SeekerSystem, SwarmState
from .graph import CommGraph

METHODS = ("rk4", "euler")
WARN_POINTS_PER_PERIOD = 20
MIN_POINTS_PER_PERIOD = 8


class StepSizeError(ValueError):
    pass


class StepSizeWarning(UserWarning):
    pass


class InitialStateError(ValueError):
    pass


class DivergenceError(RuntimeError):
    def __init__(self, t: float, agent: int):
        self.t = t
        self.agent = agent
        super().__init__(f"state became non-finite at t={t:.6g} (agent {agent})")


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    method: str = "rk4"
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise StepSizeError("dt must be positive")
        if not self.t_end > self.dt:
            raise StepSizeError("t_end must exceed dt")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError("record_every must be a positive integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def validate_step(self, w_max: float) -> None:
        """Reject steps that resolve the fastest dither with fewer than 8 points."""
        period = 2.0 * math.pi / w_max
        if self.dt > period / MIN_POINTS_PER_PERIOD:
            raise StepSizeError(
                f"dt={self.dt:.4g} leaves fewer than {MIN_POINTS_PER_PERIOD} steps per "
                f"fastest dither period ({period:.4g} s)"
            )
        if self.dt > period / WARN_POINTS_PER_PERIOD:
            warnings.warn(
                f"dt={self.dt:.4g} gives fewer than {WARN_POINTS_PER_PERIOD} steps per dither period",
                StepSizeWarning,
                stacklevel=3,
            )


@dataclass(eq=False)
class Trajectory:
    """Recorded samples; ``states`` has shape (K, 5, N)."""

    times: np.ndarray
    states: np.ndarray
    played: np.ndarray
    costs: np.ndarray

    def __len__(self) -> int:
        return self.times.size

    @property
    def xhat(self) -> np.ndarray:
        return self.states[:, XHAT]

    @property
    def mu(self) -> np.ndarray:
        return self.states[:, MU]

    @property
    def z(self) -> np.ndarray:
        return self.states[:, Z]

    @property
    def amp(self) -> np.ndarray:
        return self.states[:, AMP]

    def final_state(self) -> SwarmState:
        return SwarmState(self.states[-1].copy(), float(self.times[-1]))


def _rk4_step(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + (0.5 * dt) * k1)
    k3 = f(t + 0.5 * dt, y + (0.5 * dt) * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _euler_step(f, t, y, dt):
    return y + dt * f(t, y)


STEPPERS = {"rk4": _rk4_step, "euler": _euler_step}


def solve_fixed_step(
    f: Callable[[float, np.ndarray], np.ndarray],
    y0,
    t0: float,
    dt: float,
    n_steps: int,
    method: str = "rk4",
    record_every: int = 1,
    on_record: Optional[Callable[[float, np.ndarray], None]] = None,
):
    """Integrate ``y' = f(t, y)`` with a fixed step.

    Times are computed as ``t0 + k*dt`` so no rounding drift accumulates.
    Returns ``(times, states)`` for every ``record_every``-th step, including
    the initial point.
    """
    step = STEPPERS[method]
    y = np.array(y0, dtype=float)
    times, states = [t0], [y.copy()]
    if on_record is not None:
        on_record(t0, y)
    for k in range(1, n_steps + 1):
        t_prev = t0 + (k - 1) * dt
        y = step(f, t_prev, y, dt)
        if not np.isfinite(y).all():
            bad = np.flatnonzero(~np.isfinite(np.atleast_2d(y)).all(axis=0))
            raise DivergenceError(t0 + k * dt, int(bad[0]) if bad.size else -1)
        if k % record_every == 0:
            t = t0 + k * dt
            times.append(t)
            states.append(y.copy())
            if on_record is not None:
                on_record(t, y)
    return np.array(times), np.array(states)


def _check_initial(system: SeekerSystem, state: SwarmState) -> None:
    d = state.data
    if not np.isfinite(d).all():
        raise InitialStateError("initial state must be finite")
    if abs(float(d[Z].sum())) > 1e-12:
        raise InitialStateError("initial auxiliary variables must sum to zero")
    if not np.all(d[AMP, system.seekers] > 0):
        raise InitialStateError("initial dither amplitudes must be positive")


def _run(system, rhs, initial, cfg, check_initial, record_played):
    cfg.validate_step(float(system.freqs.max()))
    state = system.prepare(initial)
    if check_initial:
        _check_initial(system, state)
    played, costs = [], []

    def record(t, y):
        x = system.played(t, y) if record_played else y[XHAT].copy()
        played.append(x)
        costs.append(system.costs(t, y) if record_played else system.costs(t, _no_dither(y)))

    times, states = solve_fixed_step(
        rhs, state.data, state.t, cfg.dt, cfg.n_steps, cfg.method, cfg.record_every, record
    )
    return Trajectory(times, states, np.array(played), np.array(costs))


def _no_dither(y):
    out = y.copy()
    out[AMP] = 0.0
    return out


def integrate(
    initial: SwarmState,
    params: SeekerParams,
    graph: CommGraph,
    game,
    cfg: IntegratorConfig,
    stubborn: Optional[Mapping[int, float]] = None,
    check_initial: bool = True,
) -> Trajectory:
    """Simulate the seeking law; deterministic for identical inputs."""
    system = SeekerSystem(params, graph, game, stubborn)
    return _run(system, system.rhs, initial, cfg, check_initial, record_played=True)


def integrate_averaged(
    initial: SwarmState,
    params: SeekerParams,
    graph: CommGraph,
    game,
    cfg: IntegratorConfig,
    stubborn: Optional[Mapping[int, float]] = None,
    check_initial: bool = True,
) -> Trajectory:
    """Simulate the averaged model; recorded played strategies equal x-hat."""
    system = SeekerSystem(params, graph, game, stubborn)
    return _run(system, system.averaged_rhs, initial, cfg, check_initial, record_played=False)
