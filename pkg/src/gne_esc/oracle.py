"""Analytic ground truth and parameter-condition checks for quadratic games."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .dynamics import SeekerParams
from .game_model import (
    QuadraticGame,
    is_strictly_diagonally_dominant,
    reduced_matrix,
)

KKT_TOL = 1e-10


class NoUniqueGNEError(np.linalg.LinAlgError):
    pass


class LyapunovError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True, eq=False)
class GneSolution:
    x_star: np.ndarray
    mu_bar: float
    kkt_residual: float

    def as_dict(self) -> dict:
        return {
            "x_star": [float(v) for v in self.x_star],
            "mu_bar": float(self.mu_bar),
            "kkt_residual": float(self.kkt_residual),
        }


def _bordered_solve(M, rhs, total):
    n = M.shape[0]
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = M
    A[:n, n] = 1.0
    A[n, :n] = 1.0
    r = np.append(rhs, total)
    if np.linalg.cond(A) > 1e12:
        raise NoUniqueGNEError("KKT system is singular; the GNE is not unique")
    sol = np.linalg.solve(A, r)
    return sol[:n], float(sol[n])


def kkt_residual(qg: QuadraticGame, x, mu_bar: float) -> float:
    x = np.asarray(x, dtype=float)
    stationarity = qg.pseudo_gradient(x) + mu_bar
    coupling = x.sum() - qg.demands.sum()
    return float(max(np.max(np.abs(stationarity)), abs(coupling)))


def solve_quadratic_gne(qg: QuadraticGame) -> GneSolution:
    """Variational GNE of a quadratic game under the coupled equality constraint."""
    M = reduced_matrix(qg)
    x, mu = _bordered_solve(M, -qg.linear_own(), qg.demands.sum())
    res = kkt_residual(qg, x, mu)
    if res > KKT_TOL * max(1.0, np.abs(x).max(), abs(mu)):
        raise NoUniqueGNEError(f"KKT solve is ill-conditioned (residual {res:.3g})")
    return GneSolution(x, mu, res)


def best_response_stubborn(qg: QuadraticGame, stubborn: Mapping[int, float]) -> GneSolution:
    """Seekers' joint best response with stubborn strategies held fixed.

    Seekers satisfy their KKT rows with a common multiplier and must cover the
    residual demand sum(d) - sum(fixed). With no seekers the fixed profile is
    returned with a NaN multiplier.
    """
    n = qg.n_players
    fixed = {int(i): float(v) for i, v in stubborn.items()}
    if not fixed:
        return solve_quadratic_gne(qg)
    S = [i for i in range(n) if i not in fixed]
    T = sorted(fixed)
    x = np.zeros(n)
    x[T] = [fixed[j] for j in T]
    if not S:
        return GneSolution(x, float("nan"), 0.0)
    M = reduced_matrix(qg)
    rhs = -(qg.linear_own()[S] + M[np.ix_(S, T)] @ x[T])
    total = qg.demands.sum() - x[T].sum()
    x[S], mu = _bordered_solve(M[np.ix_(S, S)], rhs, total)
    F = qg.pseudo_gradient(x)
    res = float(max(np.max(np.abs(F[S] + mu)), abs(x.sum() - qg.demands.sum())))
    return GneSolution(x, mu, res)


@dataclass(frozen=True, eq=False)
class BoxGneSolution:
    x_star: np.ndarray
    mu_bar: float
    bound_multipliers: np.ndarray
    active: tuple


def solve_box_gne(qg: QuadraticGame, bounds: Sequence[Optional[tuple]], tol: float = 1e-9) -> BoxGneSolution:
    """Variational GNE with interval bounds by active-set enumeration.

    Each player is free, at its lower bound or at its upper bound; every
    pattern with at least one free player is solved exactly and checked for
    primal feasibility and complementarity. ``bound_multipliers`` holds the
    magnitude of each player's bound multiplier.
    """
    n = qg.n_players
    lo = np.array([(-np.inf if b is None or b[0] is None else b[0]) for b in bounds], dtype=float)
    hi = np.array([(np.inf if b is None or b[1] is None else b[1]) for b in bounds], dtype=float)
    M = reduced_matrix(qg)
    lin = qg.linear_own()
    total = qg.demands.sum()
    choices = []
    for i in range(n):
        opts = ["free"]
        if np.isfinite(lo[i]):
            opts.append("lo")
        if np.isfinite(hi[i]):
            opts.append("hi")
        choices.append(opts)
    for pattern in itertools.product(*choices):
        free = [i for i, s in enumerate(pattern) if s == "free"]
        if not free:
            continue
        held = [i for i, s in enumerate(pattern) if s != "free"]
        x = np.zeros(n)
        for i in held:
            x[i] = lo[i] if pattern[i] == "lo" else hi[i]
        rhs = -(lin[free] + M[np.ix_(free, held)] @ x[held])
        try:
            x[free], mu = _bordered_solve(M[np.ix_(free, free)], rhs, total - x[held].sum())
        except np.linalg.LinAlgError:
            continue
        if np.any(x[free] < lo[free] - tol) or np.any(x[free] > hi[free] + tol):
            continue
        slack = M @ x + lin + mu
        ok = all(
            (slack[i] >= -tol) if pattern[i] == "lo" else (slack[i] <= tol) for i in held
        )
        if ok:
            eta = np.zeros(n)
            eta[held] = np.abs(slack[held])
            return BoxGneSolution(x, mu, eta, pattern)
    raise NoUniqueGNEError("no active set satisfies the KKT conditions")


def penalty_is_exact(penalties, bound_multipliers) -> bool:
    """True when every penalty coefficient exceeds its local multipliers."""
    return bool(np.all(np.asarray(penalties, dtype=float) > np.asarray(bound_multipliers, dtype=float)))


@dataclass(frozen=True, order=True)
class FrequencyViolation:
    rule: str
    indices: tuple

    def describe(self, freqs=None) -> str:
        idx = [i + 1 for i in self.indices]
        pattern = {
            "w_i = w_j": "w{0} = w{1}",
            "w_i = 2w_j": "w{0} = 2*w{1}",
            "w_i = w_j + w_k": "w{0} = w{1} + w{2}",
            "2w_i = w_j + w_k": "2*w{0} = w{1} + w{2}",
            "w_i = 2w_j + w_k": "w{0} = 2*w{1} + w{2}",
        }[self.rule]
        return pattern.format(*idx)


GENERAL_RULES = ("w_i = w_j", "w_i = 2w_j", "w_i = w_j + w_k", "2w_i = w_j + w_k", "w_i = 2w_j + w_k")
QUADRATIC_RULES = ("w_i = w_j", "w_i = 2w_j", "w_i = w_j + w_k")


def _close(lhs, rhs, tol):
    return np.abs(lhs - rhs) <= tol * np.maximum(np.abs(lhs), np.abs(rhs))


def check_frequencies(w_list, tol: float = 1e-9, rules: Sequence[str] = GENERAL_RULES) -> list:
    """Resonances among dither frequencies that would spoil averaging.

    Indices are distinct; symmetric relations are reported once with the
    symmetric indices in increasing order. ``QUADRATIC_RULES`` is the
    reduced set that suffices for quadratic costs.
    """
    w = np.asarray(w_list, dtype=float)
    n = w.size
    I, J, K = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
    distinct3 = (I != J) & (J != K) & (I != K)
    wi, wj, wk = w[I], w[J], w[K]
    found = set()

    def add(rule, hits, key):
        for idx in zip(*np.nonzero(hits)):
            found.add(FrequencyViolation(rule, key(*idx)))

    pair_i, pair_j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    distinct2 = pair_i != pair_j
    if "w_i = w_j" in rules:
        add("w_i = w_j", distinct2 & (pair_i < pair_j) & _close(w[pair_i], w[pair_j], tol),
            lambda i, j: (int(i), int(j)))
    if "w_i = 2w_j" in rules:
        add("w_i = 2w_j", distinct2 & _close(w[pair_i], 2 * w[pair_j], tol),
            lambda i, j: (int(i), int(j)))
    if "w_i = w_j + w_k" in rules:
        add("w_i = w_j + w_k", distinct3 & (J < K) & _close(wi, wj + wk, tol),
            lambda i, j, k: (int(i), int(j), int(k)))
    if "2w_i = w_j + w_k" in rules:
        add("2w_i = w_j + w_k", distinct3 & (J < K) & _close(2 * wi, wj + wk, tol),
            lambda i, j, k: (int(i), int(j), int(k)))
    if "w_i = 2w_j + w_k" in rules:
        add("w_i = 2w_j + w_k", distinct3 & _close(wi, 2 * wj + wk, tol),
            lambda i, j, k: (int(i), int(j), int(k)))
    return sorted(found)


@dataclass(frozen=True)
class GainMargins:
    k_min: float
    k_required: float
    k_margin: float
    alpha_required: float
    alpha_margin: float
    phi_ok: bool

    @property
    def ok(self) -> bool:
        return self.phi_ok and self.k_margin > 0 and self.alpha_margin > 0


def check_gains(params: SeekerParams, amps, lambda2: float, m: Optional[float] = None,
                phi: Optional[float] = None) -> GainMargins:
    """Margins of the gain and consensus conditions at the given amplitudes.

    The effective gain is min_i k_i a_i^2; it needs to exceed 1/(2 phi m - 1)
    and alpha needs to exceed (4 + phi^2 m) / (2 lambda2), with phi > 1/(2m).
    """
    m = params.m_assumed if m is None else m
    phi = params.phi if phi is None else phi
    if m is None or phi is None:
        raise ValueError("check_gains needs the monotonicity constant m and phi")
    amps = np.broadcast_to(np.asarray(amps, dtype=float), params.k.shape)
    k_min = float(np.min(params.k * amps ** 2))
    phi_ok = phi > 1.0 / (2.0 * m)
    k_required = 1.0 / (2.0 * phi * m - 1.0) if phi_ok else float("inf")
    alpha_required = (4.0 + phi ** 2 * m) / (2.0 * lambda2) if lambda2 > 0 else float("inf")
    return GainMargins(
        k_min=k_min,
        k_required=k_required,
        k_margin=k_min - k_required,
        alpha_required=alpha_required,
        alpha_margin=params.alpha - alpha_required,
        phi_ok=phi_ok,
    )


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve A^T P + P A = -Q through the Kronecker-vectorised linear system."""
    A = np.asarray(A, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = A.shape[0]
    eye = np.eye(n)
    # vec(A^T P) = (I kron A^T) vec(P); vec(P A) = (A^T kron I) vec(P), column-major vec.
    op = np.kron(eye, A.T) + np.kron(A.T, eye)
    try:
        vp = np.linalg.solve(op, -Q.reshape(-1, order="F"))
    except np.linalg.LinAlgError as exc:
        raise LyapunovError("Lyapunov operator is singular") from exc
    P = vp.reshape(n, n, order="F")
    return 0.5 * (P + P.T)


def theorem2_matrix(qg: QuadraticGame, params: SeekerParams, amps) -> np.ndarray:
    amps = np.broadcast_to(np.asarray(amps, dtype=float), params.k.shape)
    return -0.5 * (params.k * amps)[:, None] * reduced_matrix(qg)


@dataclass(frozen=True, eq=False)
class ConditionReport:
    freq_ok: bool
    freq_violations: list
    gains_ok: Optional[bool]
    gains: Optional[GainMargins]
    diag_dominant: bool
    theorem2_ok: Optional[bool] = None
    lambda_min_Q: Optional[float] = None
    kP_norm: Optional[float] = None
    q_margin: Optional[float] = None
    alpha2_margin: Optional[float] = None
    lyapunov_residual: Optional[float] = None
    lyapunov_error: Optional[str] = None
    notes: list = field(default_factory=list)

    def as_dict(self, freqs=None) -> dict:
        out = {
            "freq_ok": self.freq_ok,
            "freq_violations": [v.describe() for v in self.freq_violations],
            "gains_ok": self.gains_ok,
            "diag_dominant": self.diag_dominant,
            "theorem2_ok": self.theorem2_ok,
            "lambda_min_Q": self.lambda_min_Q,
            "kP_norm": self.kP_norm,
            "q_margin": self.q_margin,
            "alpha2_margin": self.alpha2_margin,
            "lyapunov_residual": self.lyapunov_residual,
            "lyapunov_error": self.lyapunov_error,
            "notes": list(self.notes),
        }
        if self.gains is not None:
            g = self.gains
            out["gains"] = {
                "k_min": g.k_min,
                "k_required": g.k_required,
                "k_margin": g.k_margin,
                "alpha_required": g.alpha_required,
                "alpha_margin": g.alpha_margin,
                "phi_ok": g.phi_ok,
            }
        return out


def check_quadratic_conditions(qg: QuadraticGame, params: SeekerParams, amps, lambda2: float) -> ConditionReport:
    """Frequency, gain, dominance and Lyapunov-based conditions for a quadratic game."""
    violations = check_frequencies(params.frequencies)
    notes = []
    gains = None
    if params.m_assumed is not None and params.phi is not None:
        gains = check_gains(params, amps, lambda2)
    else:
        notes.append("gain check skipped: m_assumed and phi not set")
    M = reduced_matrix(qg)
    dominant = is_strictly_diagonally_dominant(M)
    report = dict(
        freq_ok=not violations,
        freq_violations=violations,
        gains_ok=None if gains is None else gains.ok,
        gains=gains,
        diag_dominant=dominant,
        notes=notes,
    )
    A = theorem2_matrix(qg, params, amps)
    if np.max(np.linalg.eigvals(A).real) >= 0:
        report["theorem2_ok"] = False
        report["lyapunov_error"] = "A is not Hurwitz; no positive definite Lyapunov solution"
        return ConditionReport(**report)
    Q = np.eye(qg.n_players)
    P = solve_lyapunov(A, Q)
    amps_b = np.broadcast_to(np.asarray(amps, dtype=float), params.k.shape)
    kmat = 0.5 * np.diag(params.k * amps_b ** 2)
    kP = float(np.linalg.norm(kmat.T @ P, 2))
    lam_q = float(np.linalg.eigvalsh(Q).min())
    q_margin = lam_q - (0.5 + kP)
    a_margin = params.alpha * lambda2 - (2.0 + kP)
    report.update(
        theorem2_ok=bool(q_margin > 0 and a_margin > 0 and np.linalg.eigvalsh(P).min() > 0),
        lambda_min_Q=lam_q,
        kP_norm=kP,
        q_margin=q_margin,
        alpha2_margin=a_margin,
        lyapunov_residual=float(np.max(np.abs(A.T @ P + P @ A + Q))),
    )
    return ConditionReport(**report)


def monotonicity_probe(game, m_claimed: float, trials: int = 200, rng: Optional[np.random.Generator] = None,
                       scale: float = 10.0):
    """Check strong monotonicity of the pseudo-gradient with constant ``m_claimed``.

    ``game`` is a QuadraticGame or a bare Jacobian matrix. Returns
    ``(ok, worst_ratio)`` where ``worst_ratio`` is the smallest observed
    (x-y).(F(x)-F(y)) / |x-y|^2 over the random pairs.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    rng = np.random.default_rng(0) if rng is None else rng
    if isinstance(game, QuadraticGame):
        M = reduced_matrix(game)
        F = game.pseudo_gradient
    else:
        M = np.asarray(game, dtype=float)
        F = lambda v: M @ v
    n = M.shape[0]
    worst = np.inf
    for _ in range(trials):
        x = rng.uniform(-scale, scale, n)
        y = rng.uniform(-scale, scale, n)
        diff = x - y
        nrm = diff @ diff
        if nrm == 0:
            continue
        worst = min(worst, float(diff @ (F(x) - F(y)) / nrm))
    lam = float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())
    tol = 1e-12 * max(1.0, abs(m_claimed))
    ok = lam >= m_claimed - tol and worst >= m_claimed - 1e-9 * max(1.0, abs(m_claimed))
    return bool(ok), worst
