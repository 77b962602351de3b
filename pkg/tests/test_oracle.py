import itertools

import numpy as np
import pytest
import scipy.linalg

from conftest import random_quadratic
from gne_esc.dynamics import SeekerParams
from gne_esc.game_model import QuadraticGame, cournot_game, reduced_matrix, to_game_spec, cost
from gne_esc.oracle import (
    GENERAL_RULES,
    QUADRATIC_RULES,
    NoUniqueGNEError,
    best_response_stubborn,
    check_frequencies,
    check_gains,
    check_quadratic_conditions,
    monotonicity_probe,
    penalty_is_exact,
    solve_box_gne,
    solve_lyapunov,
    solve_quadratic_gne,
)

COURNOT_X = (5.470588, 4.490196, 3.509804, 2.529412)


def diag_game(diag, demands):
    n = len(diag)
    D = np.zeros((n, n, n))
    for i, v in enumerate(diag):
        D[i, i, i] = v
    return QuadraticGame(D=D, b=np.zeros((n, n)), c=np.zeros(n), demands=np.asarray(demands, float))


def brute_frequencies(w, tol=1e-9):
    close = lambda a, b: abs(a - b) <= tol * max(abs(a), abs(b))
    out = set()
    n = len(w)
    for i, j in itertools.permutations(range(n), 2):
        if i < j and close(w[i], w[j]):
            out.add(("w_i = w_j", (i, j)))
        if close(w[i], 2 * w[j]):
            out.add(("w_i = 2w_j", (i, j)))
    for i, j, k in itertools.permutations(range(n), 3):
        if j < k and close(w[i], w[j] + w[k]):
            out.add(("w_i = w_j + w_k", (i, j, k)))
        if j < k and close(2 * w[i], w[j] + w[k]):
            out.add(("2w_i = w_j + w_k", (i, j, k)))
        if close(w[i], 2 * w[j] + w[k]):
            out.add(("w_i = 2w_j + w_k", (i, j, k)))
    return out


def test_cournot_gne():
    sol = solve_quadratic_gne(cournot_game())
    assert np.allclose(sol.x_star, COURNOT_X, atol=1e-6)
    assert sol.mu_bar == pytest.approx(-8.8)
    assert sol.x_star.sum() == pytest.approx(16.0)
    # hand elimination: 2.04 x_i = 4.36 - alpha_i - mu
    alphas = np.array([2, 4, 6, 8.0])
    assert np.allclose(2.04 * sol.x_star, 4.36 - alphas - sol.mu_bar)


def test_symmetric_two_player():
    sol = solve_quadratic_gne(diag_game([2.0, 2.0], [1.0, 1.0]))
    assert np.allclose(sol.x_star, [1.0, 1.0])
    assert sol.mu_bar == pytest.approx(-2.0)


def test_random_instances_satisfy_kkt_by_finite_differences(rng):
    for _ in range(20):
        qg = random_quadratic(rng, 6)
        sol = solve_quadratic_gne(qg)
        assert sol.kkt_residual <= 1e-10
        spec = to_game_spec(qg)
        h = 1e-5
        for i in range(6):
            xp, xm = sol.x_star.copy(), sol.x_star.copy()
            xp[i] += h
            xm[i] -= h
            fd = (cost(spec, i, xp) - cost(spec, i, xm)) / (2 * h)
            assert fd + sol.mu_bar == pytest.approx(0.0, abs=1e-6)


def test_singular_system_is_rejected():
    D = np.zeros((2, 2, 2))
    D[0] = [[1.0, 1.0], [1.0, 0.0]]
    D[1] = [[0.0, 1.0], [1.0, 1.0]]
    qg = QuadraticGame(D=D, b=np.zeros((2, 2)), c=np.zeros(2), demands=np.ones(2))
    with pytest.raises(NoUniqueGNEError):
        solve_quadratic_gne(qg)


def test_stubborn_empty_equals_gne(cournot):
    a = best_response_stubborn(cournot, {})
    b = solve_quadratic_gne(cournot)
    assert np.array_equal(a.x_star, b.x_star)


def test_stubborn_cournot(cournot):
    br = best_response_stubborn(cournot, {0: 5.0})
    assert br.x_star[0] == 5.0
    assert br.x_star[1:].sum() == pytest.approx(11.0)
    # seekers' rows hold with a common multiplier
    F = cournot.pseudo_gradient(br.x_star)
    assert np.allclose(F[1:] + br.mu_bar, 0.0)
    # cross-check: the Cournot Jacobian is symmetric, so the best response
    # minimises the potential over the seekers' demand hyperplane
    M = reduced_matrix(cournot)
    lin = cournot.linear_own()
    best, centre, width = None, np.array([4.0, 4.0]), 4.0
    for _ in range(8):
        g = np.linspace(-width, width, 81)
        X2, X3 = np.meshgrid(centre[0] + g, centre[1] + g, indexing="ij")
        pts = np.stack([np.full(X2.size, 5.0), X2.ravel(), X3.ravel(), 11.0 - X2.ravel() - X3.ravel()], axis=1)
        pot = 0.5 * np.einsum("ki,ij,kj->k", pts, M, pts) + pts @ lin
        best = pts[np.argmin(pot)]
        centre, width = best[1:3], width / 8
    assert np.allclose(best, br.x_star, atol=1e-3)


def test_all_stubborn_returns_fixed_profile(cournot):
    br = best_response_stubborn(cournot, {0: 1.0, 1: 2.0, 2: 3.0, 3: 4.0})
    assert np.array_equal(br.x_star, [1.0, 2.0, 3.0, 4.0])
    assert np.isnan(br.mu_bar)


def test_box_gne_with_inactive_bounds_matches_kkt(cournot):
    box = solve_box_gne(cournot, [(1, 7), (2, 6), (2, 5), (0, 4)])
    assert np.allclose(box.x_star, COURNOT_X, atol=1e-6)
    assert np.all(box.bound_multipliers == 0)


def test_box_gne_tightened_bound(cournot):
    box = solve_box_gne(cournot, [(1, 5), (2, 6), (2, 5), (0, 4)])
    assert box.x_star[0] == pytest.approx(5.0)
    assert box.x_star.sum() == pytest.approx(16.0)
    assert penalty_is_exact([10.0] * 4, box.bound_multipliers)
    assert box.active[0] == "hi"


def test_frequency_examples():
    assert check_frequencies((100, 101, 103, 98)) == []
    quad = {(v.rule, v.indices) for v in check_frequencies((1, 2, 3), rules=QUADRATIC_RULES)}
    assert quad == {("w_i = 2w_j", (1, 0)), ("w_i = w_j + w_k", (2, 0, 1))}
    general = {(v.rule, v.indices) for v in check_frequencies((1, 2, 3))}
    assert quad < general
    assert ("2w_i = w_j + w_k", (1, 0, 2)) in general
    ap = check_frequencies((5, 7, 9))
    assert [(v.rule, v.indices) for v in ap] == [("2w_i = w_j + w_k", (1, 0, 2))]
    assert ap[0].describe() == "2*w2 = w1 + w3"


def test_frequencies_match_brute_force(rng):
    for _ in range(500):
        n = int(rng.integers(2, 7))
        w = [float(v) for v in rng.integers(1, 13, size=n)]
        got = {(v.rule, v.indices) for v in check_frequencies(w, rules=GENERAL_RULES)}
        assert got == brute_frequencies(w)


def test_gain_example():
    p = SeekerParams(k=3.0, b=1, wl=1, wh=1, wbar=(1.0, 2.5, 4.1, 7.3), alpha=10.0, m_assumed=1.0, phi=1.0)
    g = check_gains(p, 0.2, lambda2=2.0)
    assert g.k_min == pytest.approx(0.12)
    assert g.k_required == pytest.approx(1.0)
    assert g.k_margin < 0 and not g.ok
    assert g.alpha_required == pytest.approx(1.25)
    assert g.alpha_margin == pytest.approx(8.75)


def test_gain_formula_structure():
    p = SeekerParams(k=3.0, b=1, wl=1, wh=1, wbar=(1.0, 2.5), alpha=10.0, m_assumed=1.0, phi=1.0)
    reqs = [check_gains(p, 0.2, 2.0, phi=phi) for phi in (1.0, 10.0, 100.0)]
    assert reqs[0].k_required > reqs[1].k_required > reqs[2].k_required > 0
    assert reqs[0].alpha_required < reqs[1].alpha_required < reqs[2].alpha_required
    a = check_gains(p, 0.2, 2.0).alpha_required
    assert check_gains(p, 0.2, 4.0).alpha_required == pytest.approx(a / 2)
    assert not check_gains(p, 0.2, 2.0, phi=0.4).phi_ok


def test_lyapunov_closed_form():
    P = solve_lyapunov(-np.eye(2), np.eye(2))
    assert np.allclose(P, 0.5 * np.eye(2))


def test_lyapunov_matches_scipy(rng):
    for _ in range(50):
        n = int(rng.integers(2, 7))
        A = rng.normal(size=(n, n)) - (n + 1) * np.eye(n)
        Q = np.eye(n)
        P = solve_lyapunov(A, Q)
        ref = scipy.linalg.solve_continuous_lyapunov(A.T, -Q)
        assert np.allclose(P, ref, atol=1e-10)
        assert np.max(np.abs(A.T @ P + P @ A + Q)) <= 1e-10


def test_condition_report_for_identity_game():
    qg = diag_game([2.0, 2.0], [1.0, 1.0])
    p = SeekerParams(k=1.0, b=1, wl=1, wh=1, wbar=(1.0, 2.5), alpha=10.0)
    rep = check_quadratic_conditions(qg, p, 1.0, lambda2=2.0)
    assert rep.theorem2_ok
    assert rep.kP_norm == pytest.approx(0.25)
    assert rep.lambda_min_Q == pytest.approx(1.0)
    assert rep.q_margin == pytest.approx(0.25)
    assert rep.gains is None and rep.notes


def test_condition_report_non_dominant():
    D = np.zeros((2, 2, 2))
    D[0] = [[1.0, 3.0], [3.0, 0.0]]
    D[1] = [[0.0, 0.5], [0.5, 1.0]]
    qg = QuadraticGame(D=D, b=np.zeros((2, 2)), c=np.zeros(2), demands=np.ones(2))
    p = SeekerParams(k=1.0, b=1, wl=1, wh=1, wbar=(1.0, 2.5))
    rep = check_quadratic_conditions(qg, p, 1.0, lambda2=2.0)
    assert not rep.diag_dominant


def test_condition_report_cournot(cournot):
    p = SeekerParams(k=3.0, b=1, wl=0.5, wh=5, wbar=(100, 101, 103, 98), delta=0.05, alpha=5.0,
                     m_assumed=2.04, phi=2.5)
    rep = check_quadratic_conditions(cournot, p, 0.2, lambda2=2.0)
    assert rep.freq_ok and rep.diag_dominant and rep.gains_ok
    assert rep.theorem2_ok and rep.lyapunov_residual <= 1e-10


def test_monotonicity(cournot):
    ok, worst = monotonicity_probe(cournot, 2.04)
    assert ok and worst >= 2.04 - 1e-9
    assert not monotonicity_probe(cournot, 2.1)[0]
    assert monotonicity_probe(cournot, 0.0)[0]
    skew = np.array([[0.0, 1.0], [-1.0, 0.0]])
    ok, worst = monotonicity_probe(skew, 0.1)
    assert not ok and worst == pytest.approx(0.0, abs=1e-12)
