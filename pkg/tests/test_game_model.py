import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_quadratic
from gne_esc.game_model import (
    CapabilityError,
    EvaluationError,
    GameError,
    GameSpec,
    QuadraticGame,
    auxiliary_cost,
    auxiliary_costs,
    constraint_violation,
    cost,
    cournot_game,
    cournot_spec,
    is_strictly_diagonally_dominant,
    penalty_gradient,
    pseudo_gradient,
    reduced_matrix,
    to_game_spec,
)


def scalar_game(p=5.0):
    return GameSpec(
        cost_evaluators=[lambda x: x[0] ** 2, lambda x: 0.0],
        constraint_evaluators=[[lambda xi: xi - 1.0], []],
        penalty_coeffs=[p, 1.0],
        demands=[0.0, 0.0],
        cost_gradients=[lambda x: 2 * x[0], lambda x: 0.0],
        constraint_gradients=[[lambda xi: 1.0], []],
    )


def central_fd(game, i, x, h=1e-6):
    xp, xm = np.array(x, float), np.array(x, float)
    xp[i] += h
    xm[i] -= h
    return (auxiliary_cost(game, i, xp) - auxiliary_cost(game, i, xm)) / (2 * h)


def test_cournot_cost_at_uniform_profile():
    spec = cournot_spec()
    assert cost(spec, 0, [4, 4, 4, 4]) == pytest.approx(16 + 2 * 4 + 7.5 - (5 - 0.04 * 16) * 4)
    assert cost(spec, 0, [4, 4, 4, 4]) == pytest.approx(14.06)


def test_constant_cost():
    n = 3
    qg = QuadraticGame(D=np.zeros((n, n, n)), b=np.zeros((n, n)),
                       c=np.full(n, 3.0), demands=np.ones(n), strict=False)
    spec = to_game_spec(qg)
    for x in ([0, 0, 0], [1.5, -2, 7]):
        assert cost(spec, 1, x) == 3.0


def test_quadratic_cost_matches_term_by_term_sum(rng):
    qg = random_quadratic(rng, 3)
    spec = to_game_spec(qg)
    for _ in range(20):
        x = rng.normal(size=3)
        i = 1
        direct = qg.c[i]
        for j in range(3):
            direct += qg.b[i, j] * x[j]
            for k in range(3):
                direct += 0.5 * qg.D[i, j, k] * x[j] * x[k]
        assert cost(spec, i, x) == pytest.approx(direct, rel=1e-12, abs=1e-12)


def test_cournot_expansion_agrees_with_market_form(rng):
    qg = cournot_game()
    al, be = (2, 4, 6, 8), (7.5, 9, 12, 15)
    M = reduced_matrix(qg)
    assert np.allclose(np.diag(M), 2.08)
    assert np.allclose(M[~np.eye(4, dtype=bool)], 0.04)
    for _ in range(100):
        x = rng.uniform(0, 8, 4)
        market = [x[i] ** 2 + al[i] * x[i] + be[i] - (5 - 0.04 * x.sum()) * x[i] for i in range(4)]
        assert np.allclose(qg.costs(x), market, rtol=1e-12)


def test_auxiliary_cost_adds_violation():
    spec = cournot_spec()
    x = [8, 4, 4, 4]
    assert auxiliary_cost(spec, 0, x) == pytest.approx(cost(spec, 0, x) + 10.0)
    assert constraint_violation(spec, 0, 8.0) == pytest.approx(1.0)


def test_auxiliary_cost_equals_cost_when_feasible_or_unconstrained():
    spec = cournot_spec()
    x = [3, 3, 3, 3]
    for i in range(4):
        assert auxiliary_cost(spec, i, x) == cost(spec, i, x)
    free = to_game_spec(cournot_game())
    assert auxiliary_cost(free, 0, [50, 0, 0, 0]) == cost(free, 0, [50, 0, 0, 0])


def test_batch_path_matches_per_player(rng):
    spec = cournot_spec()
    plain = GameSpec(spec.cost_evaluators, spec.constraint_evaluators, spec.penalty_coeffs, spec.demands)
    for _ in range(50):
        x = rng.uniform(-2, 10, 4)
        assert np.allclose(auxiliary_costs(spec, x), auxiliary_costs(plain, x), rtol=1e-13, atol=1e-12)


def test_penalty_gradient_cournot_violated_bound():
    spec = cournot_spec()
    x = [8.0, 4.0, 4.0, 4.0]
    assert penalty_gradient(spec, 0, x) == pytest.approx(24.12)
    assert penalty_gradient(spec, 0, x) == pytest.approx(central_fd(spec, 0, x), rel=1e-6)


def test_penalty_gradient_feasible_is_plain_gradient(cournot):
    spec = cournot_spec()
    x = np.array([3.0, 3.0, 3.0, 3.0])
    assert np.allclose(pseudo_gradient(spec, x), cournot.pseudo_gradient(x))


def test_penalty_gradient_scalar_example():
    g = scalar_game()
    assert penalty_gradient(g, 0, [2.0, 0.0]) == pytest.approx(9.0)
    assert penalty_gradient(g, 0, [2.0, 0.0]) == pytest.approx(central_fd(g, 0, [2.0, 0.0]), rel=1e-6)


def test_penalty_gradient_requires_oracles():
    g = scalar_game()
    bare = GameSpec(g.cost_evaluators, g.constraint_evaluators, g.penalty_coeffs, g.demands)
    with pytest.raises(CapabilityError):
        penalty_gradient(bare, 0, [0.0, 0.0])


def test_pseudo_gradient_is_reduced_matrix_affine(rng):
    qg = random_quadratic(rng, 5)
    M = reduced_matrix(qg)
    for _ in range(10):
        x = rng.normal(size=5)
        assert np.allclose(qg.pseudo_gradient(x), M @ x + qg.linear_own())


def test_errors():
    spec = cournot_spec()
    with pytest.raises(IndexError):
        cost(spec, 4, [1, 1, 1, 1])
    bad = GameSpec([lambda x: np.nan, lambda x: 0.0], [[], []], [1, 1], [0, 0])
    with pytest.raises(EvaluationError) as info:
        cost(bad, 0, [1.0, 2.0])
    assert info.value.player == 0
    with pytest.raises(GameError):
        GameSpec([lambda x: 0.0, lambda x: 0.0], [[], []], [1, 0], [0, 0])
    D = np.zeros((2, 2, 2))
    D[0] = [[1, 0], [0, 0]]
    D[1] = [[0, 0], [0, -1]]
    with pytest.raises(GameError):
        QuadraticGame(D=D, b=np.zeros((2, 2)), c=np.zeros(2), demands=np.ones(2))


def test_diagonal_dominance():
    assert is_strictly_diagonally_dominant(reduced_matrix(cournot_game()))
    assert not is_strictly_diagonally_dominant(np.array([[1.0, 2.0], [0.0, 1.0]]))
    assert not is_strictly_diagonally_dominant(np.array([[1.0, 1.0], [0.0, 1.0]]))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=4, max_size=4), st.integers(0, 3))
def test_auxiliary_cost_bounds_cost_from_above(x, i):
    spec = cournot_spec()
    assert auxiliary_cost(spec, i, x) >= cost(spec, i, x)


def test_diagonal_two_player_game():
    D = np.zeros((2, 2, 2))
    D[0, 0, 0] = D[1, 1, 1] = 1.0
    spec = to_game_spec(QuadraticGame(D=D, b=np.zeros((2, 2)), c=np.zeros(2), demands=np.ones(2)))
    x = [1.5, -3.0]
    assert cost(spec, 0, x) == pytest.approx(0.5 * 1.5 ** 2)
    assert cost(spec, 1, x) == pytest.approx(0.5 * 9.0)
