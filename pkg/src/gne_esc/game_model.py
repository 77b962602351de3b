"""Game definitions: black-box cost oracles, quadratic games and exact penalties.

Players are indexed from 0 inside the library. The seeker only ever calls
the *value* evaluators; gradient oracles exist for verification models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

CostFn = Callable[[np.ndarray], float]
ScalarFn = Callable[[float], float]

DEFAULT_PENALTY = 10.0

# Cournot network used in the simulation study.
COURNOT_ALPHAS = (2.0, 4.0, 6.0, 8.0)
COURNOT_BETAS = (7.5, 9.0, 12.0, 15.0)
COURNOT_P0 = 5.0
COURNOT_C = 0.04
COURNOT_BOUNDS = ((1.0, 7.0), (2.0, 6.0), (2.0, 5.0), (0.0, 4.0))
COURNOT_DEMANDS = (4.0, 4.0, 4.0, 4.0)


class GameError(ValueError):
    """Invalid game construction."""


class EvaluationError(RuntimeError):
    """An evaluator returned a non-finite value."""

    def __init__(self, player: int, point, value):
        self.player = player
        self.point = np.asarray(point, dtype=float).copy()
        self.value = value
        super().__init__(
            f"player {player} evaluator returned {value!r} at x={self.point.tolist()}"
        )


class CapabilityError(RuntimeError):
    """The game lacks an oracle needed by the requested operation."""


@dataclass(frozen=True, eq=False)
class GameSpec:
    """N-player game seen through value oracles.

    ``cost_evaluators[i](x)`` returns J_i at the full strategy vector ``x``;
    ``constraint_evaluators[i][j](x_i)`` returns g_ij(x_i), feasible when <= 0.
    Gradient oracles are optional and never used by the seeker itself.
    ``batch_auxiliary`` is an optional vectorised evaluator returning every
    player's auxiliary cost at once; it must agree with the per-player path.
    """

    cost_evaluators: Sequence[CostFn]
    constraint_evaluators: Sequence[Sequence[ScalarFn]]
    penalty_coeffs: np.ndarray
    demands: np.ndarray
    cost_gradients: Optional[Sequence[CostFn]] = None
    constraint_gradients: Optional[Sequence[Sequence[ScalarFn]]] = None
    batch_auxiliary: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, repr=False
    )

    def __post_init__(self):
        n = len(self.cost_evaluators)
        object.__setattr__(self, "cost_evaluators", tuple(self.cost_evaluators))
        object.__setattr__(
            self,
            "constraint_evaluators",
            tuple(tuple(gs) for gs in self.constraint_evaluators),
        )
        pen = np.array(self.penalty_coeffs, dtype=float).reshape(-1)
        dem = np.array(self.demands, dtype=float).reshape(-1)
        pen.setflags(write=False)
        dem.setflags(write=False)
        object.__setattr__(self, "penalty_coeffs", pen)
        object.__setattr__(self, "demands", dem)
        if n < 2:
            raise GameError("a game needs at least two players")
        if len(self.constraint_evaluators) != n or pen.size != n or dem.size != n:
            raise GameError("cost, constraint, penalty and demand sequences must all have length N")
        if not np.all(pen > 0):
            raise GameError("penalty coefficients must be strictly positive")
        if self.cost_gradients is not None:
            object.__setattr__(self, "cost_gradients", tuple(self.cost_gradients))
            if len(self.cost_gradients) != n:
                raise GameError("need one cost gradient per player")
        if self.constraint_gradients is not None:
            grads = tuple(tuple(gs) for gs in self.constraint_gradients)
            if [len(g) for g in grads] != [len(g) for g in self.constraint_evaluators]:
                raise GameError("constraint gradients must mirror constraint evaluators")
            object.__setattr__(self, "constraint_gradients", grads)

    @property
    def n_players(self) -> int:
        return len(self.cost_evaluators)

    @property
    def has_gradients(self) -> bool:
        return self.cost_gradients is not None and self.constraint_gradients is not None


def _check_index(game: GameSpec, i: int) -> None:
    if not 0 <= i < game.n_players:
        raise IndexError(f"player index {i} out of range for {game.n_players} players")


def _check_point(game: GameSpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (game.n_players,):
        raise ValueError(f"strategy vector must have length {game.n_players}, got shape {x.shape}")
    return x


def _finite(value, i: int, x) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise EvaluationError(i, x, value)
    return value


def cost(game: GameSpec, i: int, x) -> float:
    """Return J_i(x)."""
    _check_index(game, i)
    x = _check_point(game, x)
    return _finite(game.cost_evaluators[i](x), i, x)


def constraint_violation(game: GameSpec, i: int, xi: float) -> float:
    """Sum of positive parts of player ``i``'s local constraint residuals."""
    total = 0.0
    for g in game.constraint_evaluators[i]:
        r = float(g(xi))
        if r > 0.0:
            total += r
    return total


def auxiliary_cost(game: GameSpec, i: int, x) -> float:
    """Exact-penalty cost J_i(x) + p_i * sum_j max(0, g_ij(x_i))."""
    value = cost(game, i, x)
    x = np.asarray(x, dtype=float)
    if game.constraint_evaluators[i]:
        value += game.penalty_coeffs[i] * constraint_violation(game, i, float(x[i]))
    return _finite(value, i, x)


def auxiliary_costs(game: GameSpec, x) -> np.ndarray:
    """Every player's auxiliary cost at the same profile, one evaluation each."""
    x = np.asarray(x, dtype=float)
    if game.batch_auxiliary is not None:
        values = np.asarray(game.batch_auxiliary(x), dtype=float)
        if not np.all(np.isfinite(values)):
            bad = int(np.flatnonzero(~np.isfinite(values))[0])
            raise EvaluationError(bad, x, values[bad])
        return values
    return np.array([auxiliary_cost(game, i, x) for i in range(game.n_players)])


def penalty_gradient(game: GameSpec, i: int, x) -> float:
    """Derivative of the auxiliary cost in the player's own strategy.

    Only strictly violated constraints contribute, so at g_ij = 0 this is the
    one-sided derivative from the feasible side.
    """
    if not game.has_gradients:
        raise CapabilityError("penalty_gradient needs cost and constraint gradient oracles")
    _check_index(game, i)
    x = _check_point(game, x)
    xi = float(x[i])
    grad = _finite(game.cost_gradients[i](x), i, x)
    for g, dg in zip(game.constraint_evaluators[i], game.constraint_gradients[i]):
        if float(g(xi)) > 0.0:
            grad += game.penalty_coeffs[i] * float(dg(xi))
    return _finite(grad, i, x)


def pseudo_gradient(game: GameSpec, x) -> np.ndarray:
    """Stacked own-strategy derivatives of the auxiliary costs."""
    return np.array([penalty_gradient(game, i, x) for i in range(game.n_players)])


@dataclass(frozen=True, eq=False)
class QuadraticGame:
    """Players with costs 0.5 x^T D^i x + b^i . x + c^i.

    ``D`` has shape (N, N, N) with ``D[i]`` the symmetric matrix of player i,
    ``b`` has shape (N, N) and ``c`` shape (N,). ``strict=False`` skips the
    positive-curvature requirement, for degenerate test games.
    """

    D: np.ndarray
    b: np.ndarray
    c: np.ndarray
    demands: np.ndarray
    strict: bool = True

    def __post_init__(self):
        D = np.array(self.D, dtype=float)
        n = D.shape[0]
        b = np.array(self.b, dtype=float)
        c = np.array(self.c, dtype=float).reshape(-1)
        d = np.array(self.demands, dtype=float).reshape(-1)
        if n < 2:
            raise GameError("a game needs at least two players")
        if D.shape != (n, n, n) or b.shape != (n, n) or c.shape != (n,) or d.shape != (n,):
            raise GameError("D must be (N,N,N), b (N,N), c and demands (N,)")
        if not np.all(np.isfinite(D)) or not np.all(np.isfinite(b)) or not np.all(np.isfinite(c)):
            raise GameError("game coefficients must be finite")
        if not np.array_equal(D, np.transpose(D, (0, 2, 1))):
            raise GameError("each D^i must be symmetric")
        own = D[np.arange(n), np.arange(n), np.arange(n)]
        if self.strict and not np.all(own > 0):
            raise GameError("each D^i must have a positive own-strategy curvature D^i_ii")
        for arr in (D, b, c, d):
            arr.setflags(write=False)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "demands", d)

    @property
    def n_players(self) -> int:
        return self.D.shape[0]

    def cost(self, i: int, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.D[i] @ x + self.b[i] @ x + self.c[i])

    def costs(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return 0.5 * ((self.D @ x) @ x) + self.b @ x + self.c

    def own_gradient(self, i: int, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.D[i, i] @ x + self.b[i, i])

    def pseudo_gradient(self, x) -> np.ndarray:
        return reduced_matrix(self) @ np.asarray(x, dtype=float) + self.linear_own()

    def linear_own(self) -> np.ndarray:
        """The own-strategy linear coefficients b^i_i."""
        return np.diagonal(self.b).copy()


def reduced_matrix(qg: QuadraticGame) -> np.ndarray:
    """Matrix whose row i is row i of D^i; the Jacobian of the pseudo-gradient."""
    n = qg.n_players
    return qg.D[np.arange(n), np.arange(n), :].copy()


def is_strictly_diagonally_dominant(M) -> bool:
    M = np.asarray(M, dtype=float)
    diag = np.abs(np.diag(M))
    off = np.abs(M).sum(axis=1) - diag
    return bool(np.all(off < diag))


class _QuadCost:
    def __init__(self, qg: QuadraticGame, i: int):
        self.Di, self.bi, self.ci = qg.D[i], qg.b[i], float(qg.c[i])

    def __call__(self, x):
        return float(0.5 * x @ self.Di @ x + self.bi @ x + self.ci)


class _QuadOwnGrad:
    def __init__(self, qg: QuadraticGame, i: int):
        self.row, self.bii = qg.D[i, i], float(qg.b[i, i])

    def __call__(self, x):
        return float(self.row @ x + self.bii)


class _Upper:
    """g(x) = x - hi."""

    def __init__(self, hi: float):
        self.hi = hi

    def __call__(self, xi):
        return xi - self.hi


class _Lower:
    """g(x) = lo - x."""

    def __init__(self, lo: float):
        self.lo = lo

    def __call__(self, xi):
        return self.lo - xi


def _const(v: float) -> ScalarFn:
    return lambda _xi: v


def to_game_spec(
    qg: QuadraticGame,
    local_bounds: Optional[Sequence[Optional[tuple]]] = None,
    penalties=DEFAULT_PENALTY,
) -> GameSpec:
    """Wrap a quadratic game as a black-box game with optional interval bounds.

    Each interval ``(lo, hi)`` becomes the affine pair ``x - hi`` and
    ``lo - x``; either end may be ``None``.
    """
    n = qg.n_players
    bounds = list(local_bounds) if local_bounds is not None else [None] * n
    if len(bounds) != n:
        raise GameError("need one bound entry per player")
    pen = np.broadcast_to(np.asarray(penalties, dtype=float), (n,)).copy()

    cons, cons_grad = [], []
    lo_arr = np.full(n, -np.inf)
    hi_arr = np.full(n, np.inf)
    for i, bd in enumerate(bounds):
        gs, dgs = [], []
        if bd is not None:
            lo, hi = bd
            if lo is not None and hi is not None and lo > hi:
                raise GameError(f"player {i}: empty interval [{lo}, {hi}]")
            if hi is not None:
                gs.append(_Upper(float(hi)))
                dgs.append(_const(1.0))
                hi_arr[i] = hi
            if lo is not None:
                gs.append(_Lower(float(lo)))
                dgs.append(_const(-1.0))
                lo_arr[i] = lo
        cons.append(gs)
        cons_grad.append(dgs)

    def batch(x):
        over = np.maximum(0.0, x - hi_arr) + np.maximum(0.0, lo_arr - x)
        return qg.costs(x) + pen * over

    return GameSpec(
        cost_evaluators=[_QuadCost(qg, i) for i in range(n)],
        constraint_evaluators=cons,
        penalty_coeffs=pen,
        demands=qg.demands,
        cost_gradients=[_QuadOwnGrad(qg, i) for i in range(n)],
        constraint_gradients=cons_grad,
        batch_auxiliary=batch,
    )


def cournot_game(
    alphas=COURNOT_ALPHAS,
    betas=COURNOT_BETAS,
    p0: float = COURNOT_P0,
    c: float = COURNOT_C,
    demands=COURNOT_DEMANDS,
) -> QuadraticGame:
    """Cournot competition with J_i = x_i^2 + alpha_i x_i + beta_i - (p0 - c sum x) x_i."""
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    n = alphas.size
    D = np.zeros((n, n, n))
    b = np.zeros((n, n))
    for i in range(n):
        D[i, i, :] = c
        D[i, :, i] = c
        D[i, i, i] = 2.0 + 2.0 * c
        b[i, i] = alphas[i] - p0
    return QuadraticGame(D=D, b=b, c=betas.copy(), demands=np.asarray(demands, dtype=float))


def cournot_spec(bounds=COURNOT_BOUNDS, penalties=DEFAULT_PENALTY, **kwargs) -> GameSpec:
    return to_game_spec(cournot_game(**kwargs), bounds, penalties)
