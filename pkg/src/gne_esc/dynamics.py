"""Extremum-seeking GNE dynamics and its averaged counterpart.

The swarm state is packed as a ``(5, N)`` array whose rows are the nominal
strategies, multipliers, auxiliary consensus variables, dither amplitudes and
low-frequency cost estimates (``STATE_FIELDS``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Mapping, Optional, Sequence

import numpy as np

from .game_model import (
    CapabilityError,
    GameSpec,
    QuadraticGame,
    auxiliary_costs,
    pseudo_gradient,
    to_game_spec,
)
from .graph import CommGraph, is_connected, laplacian

STATE_FIELDS = ("xhat", "mu", "z", "amp", "nlow")
XHAT, MU, Z, AMP, NLOW = range(5)


class ParameterError(ValueError):
    pass


class ProbeError(ValueError):
    pass


def _vec(v, n: Optional[int] = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(v, dtype=float)).copy()
    if n is not None and arr.size == 1 and n > 1:
        arr = np.full(n, arr[0])
    return arr


@dataclass(frozen=True, eq=False)
class SeekerParams:
    """Tuning constants of the seeking law.

    Per-agent entries may be given as scalars and are broadcast to the length
    of ``wbar``. ``m_assumed`` and ``phi`` only feed the condition checks.
    ``amplitude_dynamics=False`` freezes every dither amplitude (the
    fixed-amplitude comparison), and ``amp_min`` optionally floors it.
    """

    k: np.ndarray
    b: np.ndarray
    wl: np.ndarray
    wh: np.ndarray
    wbar: np.ndarray
    w: float = 1.0
    delta: float = 0.05
    alpha: float = 1.0
    m_assumed: Optional[float] = None
    phi: Optional[float] = None
    amplitude_dynamics: bool = True
    amp_min: Optional[float] = None

    def __post_init__(self):
        wbar = _vec(self.wbar)
        n = wbar.size
        object.__setattr__(self, "wbar", wbar)
        for name in ("k", "b", "wl", "wh"):
            arr = _vec(getattr(self, name), n)
            if arr.size != n:
                raise ParameterError(f"{name} must have one entry per agent ({n})")
            object.__setattr__(self, name, arr)
        for name in ("k", "b", "wl", "wh", "wbar"):
            if not np.all(getattr(self, name) > 0):
                raise ParameterError(f"{name} entries must be positive")
        if not self.w > 0:
            raise ParameterError("frequency scale w must be positive")
        if not 0 < self.delta < 1:
            raise ParameterError("delta must lie in (0, 1)")
        if not self.alpha > 0:
            raise ParameterError("consensus gain alpha must be positive")
        if self.m_assumed is not None and not self.m_assumed > 0:
            raise ParameterError("m_assumed must be positive")
        if self.phi is not None and not self.phi > 0:
            raise ParameterError("phi must be positive")
        if self.amp_min is not None and self.amp_min < 0:
            raise ParameterError("amp_min must be non-negative")
        freqs = self.frequencies
        if np.unique(freqs).size != n:
            raise ParameterError("dither frequencies must be pairwise distinct")

    @property
    def n_agents(self) -> int:
        return self.wbar.size

    @property
    def frequencies(self) -> np.ndarray:
        return self.w * self.wbar

    def replace(self, **changes) -> "SeekerParams":
        values = {f: getattr(self, f) for f in self.__dataclass_fields__}
        values.update(changes)
        return SeekerParams(**values)


@dataclass(frozen=True)
class AgentState:
    xhat: float
    mu: float
    z: float
    amp: float
    nlow: float


@dataclass(eq=False)
class SwarmState:
    """Stacked agent states at time ``t``; ``data`` has shape (5, N)."""

    data: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.data = np.array(self.data, dtype=float)
        if self.data.ndim != 2 or self.data.shape[0] != 5:
            raise ValueError("swarm state must have shape (5, N)")

    @classmethod
    def from_agents(cls, agents: Sequence[AgentState], t: float = 0.0) -> "SwarmState":
        data = np.array([[getattr(a, f) for a in agents] for f in STATE_FIELDS])
        return cls(data, t)

    @classmethod
    def initial(cls, xhat, mu=0.0, z=0.0, amp=0.2, nlow=0.0, t: float = 0.0) -> "SwarmState":
        xhat = _vec(xhat)
        n = xhat.size
        return cls(np.vstack([xhat, _vec(mu, n), _vec(z, n), _vec(amp, n), _vec(nlow, n)]), t)

    @property
    def n_agents(self) -> int:
        return self.data.shape[1]

    @property
    def agents(self) -> list[AgentState]:
        return [AgentState(*map(float, col)) for col in self.data.T]

    xhat = property(lambda self: self.data[XHAT])
    mu = property(lambda self: self.data[MU])
    z = property(lambda self: self.data[Z])
    amp = property(lambda self: self.data[AMP])
    nlow = property(lambda self: self.data[NLOW])

    def copy(self) -> "SwarmState":
        return SwarmState(self.data.copy(), self.t)


def as_game_spec(game) -> GameSpec:
    if isinstance(game, QuadraticGame):
        return to_game_spec(game)
    return game


def residual_demands(demands, stubborn: Mapping[int, float]) -> np.ndarray:
    """Seeker demands after the stubborn players' shortfall is split equally.

    Stubborn entries keep their original demand; they take no part in the
    multiplier dynamics.
    """
    d = np.array(demands, dtype=float)
    if not stubborn:
        return d
    seekers = [i for i in range(d.size) if i not in stubborn]
    if not seekers:
        return d
    gap = sum(d[j] - float(v) for j, v in stubborn.items())
    d[seekers] += gap / len(seekers)
    return d


def dither(i: int, t: float, params: SeekerParams, state: SwarmState) -> float:
    """Probing signal a_i sin(w_i t) added to agent ``i``'s nominal strategy."""
    return float(state.data[AMP, i] * math.sin(params.frequencies[i] * t))


class SeekerSystem:
    """Right-hand sides of the seeking law for one game, graph and parameter set.

    ``stubborn`` maps player indices to fixed strategies. Those players play
    their value without dither and are dropped from the consensus graph.
    """

    def __init__(
        self,
        params: SeekerParams,
        graph: CommGraph,
        game,
        stubborn: Optional[Mapping[int, float]] = None,
    ):
        self.game = as_game_spec(game)
        n = self.game.n_players
        if params.n_agents != n or graph.n != n:
            raise ParameterError(
                f"parameters ({params.n_agents}), graph ({graph.n}) and game ({n}) disagree on N"
            )
        self.params = params
        self.graph = graph
        self.n = n
        self.stubborn = {int(i): float(v) for i, v in (stubborn or {}).items()}
        for i in self.stubborn:
            if not 0 <= i < n:
                raise ParameterError(f"stubborn player {i} out of range")
        self.seekers = np.array([i for i in range(n) if i not in self.stubborn], dtype=int)
        if self.seekers.size == 0:
            raise ParameterError("at least one player must run the seeker")
        sub = graph.subgraph(self.seekers)
        if not is_connected(sub):
            raise ParameterError("communication graph among seeking players must be connected")
        L = np.zeros((n, n))
        L[np.ix_(self.seekers, self.seekers)] = laplacian(sub).L
        self.L = L
        self.lambda2 = laplacian(sub).lambda2
        self.mask = np.zeros(n, dtype=bool)
        self.mask[self.seekers] = True
        self.demands = residual_demands(self.game.demands, self.stubborn)
        self.freqs = params.frequencies
        self.fixed = np.array([self.stubborn.get(i, 0.0) for i in range(n)])

    def prepare(self, state: SwarmState) -> SwarmState:
        """Pin stubborn players to their fixed strategy with zero dither."""
        out = state.copy()
        for i, v in self.stubborn.items():
            out.data[:, i] = 0.0
            out.data[XHAT, i] = v
        return out

    def played(self, t: float, y: np.ndarray) -> np.ndarray:
        return y[XHAT] + y[AMP] * np.sin(self.freqs * t)

    def costs(self, t: float, y: np.ndarray) -> np.ndarray:
        return auxiliary_costs(self.game, self.played(t, y))

    def _common(self, y, J, dy):
        p = self.params
        mu = y[MU]
        cons = p.alpha * (self.L @ mu)
        dy[MU] = y[XHAT] - self.demands - cons - y[Z]
        dy[Z] = cons
        dy[NLOW] = -p.wh * y[NLOW] + p.wh * J

    def rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        p = self.params
        xhat, mu, amp, nlow = y[XHAT], y[MU], y[AMP], y[NLOW]
        s = np.sin(self.freqs * t)
        J = auxiliary_costs(self.game, xhat + amp * s)
        dy = np.empty_like(y)
        dy[XHAT] = -p.k * J * amp * s - (p.k * amp * amp / 2.0) * mu
        self._common(y, J, dy)
        if p.amplitude_dynamics:
            da = -p.delta * p.wl * amp + p.delta * p.b * p.wl * (J - nlow)
            if p.amp_min is not None:
                da = np.where((amp <= p.amp_min) & (da < 0.0), 0.0, da)
            dy[AMP] = da
        else:
            dy[AMP] = 0.0
        if self.stubborn:
            dy[:, ~self.mask] = 0.0
        return dy

    def averaged_rhs(self, t: float, y: np.ndarray) -> np.ndarray:
        """Dither-free averaged model with frozen amplitudes."""
        if not self.game.has_gradients:
            raise CapabilityError("the averaged model needs gradient oracles")
        p = self.params
        xhat, amp = y[XHAT], y[AMP]
        F = pseudo_gradient(self.game, xhat)
        J = auxiliary_costs(self.game, xhat)
        dy = np.empty_like(y)
        dy[XHAT] = -(p.k * amp * amp / 2.0) * (F + y[MU])
        self._common(y, J, dy)
        dy[AMP] = 0.0
        if self.stubborn:
            dy[:, ~self.mask] = 0.0
        return dy


def rhs(state: SwarmState, t: float, params: SeekerParams, graph: CommGraph, game) -> np.ndarray:
    """Time derivative of the packed swarm state under the seeking law."""
    return SeekerSystem(params, graph, game).rhs(t, state.data)


def averaged_rhs(state: SwarmState, params: SeekerParams, graph: CommGraph, game) -> np.ndarray:
    return SeekerSystem(params, graph, game).averaged_rhs(state.t, state.data)


def common_period(params: SeekerParams, max_denominator: int = 10_000, rtol: float = 1e-12) -> float:
    """Smallest T with every sin(w_i t) T-periodic, for rationally related wbar."""
    fracs = []
    for v in params.wbar:
        f = Fraction(float(v)).limit_denominator(max_denominator)
        if abs(float(f) - v) > rtol * abs(v):
            raise ProbeError(f"base frequency {v} is not rational within tolerance")
        fracs.append(f)
    num_gcd = reduce(math.gcd, (f.numerator for f in fracs))
    den_lcm = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in fracs))
    return 2.0 * math.pi * den_lcm / (params.w * num_gcd)


def average_consistency_probe(
    state: SwarmState,
    params: SeekerParams,
    graph: CommGraph,
    game,
    samples: Optional[int] = None,
) -> float:
    """Largest gap between the period-averaged strategy drift and the averaged model.

    The full right-hand side is averaged over one common dither period at a
    frozen state using the periodic trapezoid rule, which is exact for the
    trigonometric polynomials that smooth games produce.
    """
    system = SeekerSystem(params, graph, game)
    T = common_period(params)
    if samples is None:
        harmonics = params.frequencies.max() * T / (2.0 * math.pi)
        samples = int(16 * math.ceil(harmonics) + 64)
    y = state.data
    ts = (np.arange(samples) + 0.5) * (T / samples) + state.t
    mean = np.zeros(system.n)
    for t in ts:
        mean += system.rhs(t, y)[XHAT]
    mean /= samples
    avg = system.averaged_rhs(state.t, y)[XHAT]
    return float(np.max(np.abs(mean - avg)))
