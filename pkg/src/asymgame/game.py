"""Game instances and the Hamiltonian of the infinitesimal game.

A game couples a finite-state jump chain (one K x K generator per pure action
pair) with a bounded payoff table and a discount rate.  Base action sets are
finite; both players mix over them, which makes the one-shot minimax value
exist exactly and gives every solve a checkable duality-gap certificate.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import _kernels

GAP_TOL = 1e-9
_ROWSUM_TOL = 1e-12
_BELIEF_TOL = 1e-10


class InvalidGameError(ValueError):
    def __init__(self, violations):
        self.violations = violations
        lines = "; ".join(str(v) for v in violations[:8])
        super().__init__(f"{len(violations)} game constraint violation(s): {lines}")


class MatrixGameError(RuntimeError):
    def __init__(self, gap):
        self.gap = gap
        super().__init__(f"matrix game solve missed the gap certificate: gap={gap:.3e}")


@dataclass(frozen=True)
class Violation:
    location: str
    constraint: str
    observed: float

    def __str__(self):
        return f"{self.constraint} at {self.location} (observed {self.observed:.6g})"


@dataclass(frozen=True)
class GameSpec:
    """Finite-state game instance: states, actions, rates, payoff, discount."""

    n_states: int
    actions_u: tuple
    actions_v: tuple
    rates: np.ndarray      # (m, l, K, K), generator per action pair
    payoff: np.ndarray     # (K, m, l), values in [0, 1]
    discount: float

    def __post_init__(self):
        rates = np.ascontiguousarray(self.rates, dtype=float)
        payoff = np.ascontiguousarray(self.payoff, dtype=float)
        rates.setflags(write=False)
        payoff.setflags(write=False)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "payoff", payoff)

    @property
    def m(self):
        return len(self.actions_u)

    @property
    def l(self):
        return len(self.actions_v)

    def max_exit_rate(self):
        return float(np.abs(np.diagonal(self.rates, axis1=2, axis2=3)).max())


def game_spec(rates, payoff, discount, actions_u=None, actions_v=None):
    """Build a GameSpec from raw arrays, inventing action labels if absent."""
    rates = np.asarray(rates, dtype=float)
    payoff = np.asarray(payoff, dtype=float)
    m, l, K, K2 = rates.shape
    if K != K2 or payoff.shape != (K, m, l):
        raise ValueError(f"inconsistent shapes: rates {rates.shape}, payoff {payoff.shape}")
    if actions_u is None:
        actions_u = tuple(f"u{i}" for i in range(m))
    if actions_v is None:
        actions_v = tuple(f"v{j}" for j in range(l))
    return GameSpec(K, tuple(actions_u), tuple(actions_v), rates, payoff, float(discount))


def spec_violations(spec):
    """All constraint violations of a GameSpec, with locations."""
    out = []
    K = spec.n_states
    if not spec.discount > 0:
        out.append(Violation("discount", "discount positive", spec.discount))
    for u in range(spec.m):
        for v in range(spec.l):
            R = spec.rates[u, v]
            for i in range(K):
                row = R[i]
                s = row.sum()
                if abs(s) > _ROWSUM_TOL:
                    out.append(Violation(f"rates[{u}][{v}] row {i}", "row sum zero", s))
                for j in range(K):
                    if i != j and row[j] < 0:
                        out.append(Violation(
                            f"rates[{u}][{v}][{i}][{j}]", "off-diagonal rate nonnegative", row[j]))
    bad = np.argwhere((spec.payoff < 0) | (spec.payoff > 1))
    for k, u, v in bad:
        out.append(Violation(f"payoff[{k}][{u}][{v}]", "payoff range [0,1]",
                             spec.payoff[k, u, v]))
    return out


def validate_spec(spec):
    """Return the spec unchanged if valid, else raise with the violation list."""
    violations = spec_violations(spec)
    if violations:
        raise InvalidGameError(violations)
    return spec


@dataclass(frozen=True)
class MixedAction:
    weights: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=float)
        if w.ndim != 1 or (w < -1e-12).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"not a probability vector: {w}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def _weights(a):
    return a.weights if isinstance(a, MixedAction) else np.asarray(a, dtype=float)


def check_belief(p, tol=_BELIEF_TOL):
    p = np.asarray(p, dtype=float)
    if (p < -tol).any() or abs(p.sum() - 1.0) > tol:
        raise ValueError(f"point outside the belief simplex: {p}")
    return p


@dataclass(frozen=True)
class HamiltonianQuery:
    p: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", check_belief(self.p))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))


def mix_generator(spec, mu, nu):
    """Generator averaged under mixed actions: sum_{u,v} mu_u nu_v R[u][v]."""
    return np.einsum("u,v,uvij->ij", _weights(mu), _weights(nu), spec.rates)


def mix_payoff(spec, p, mu, nu):
    """Expected stage payoff sum_k p_k g(k, mu, nu)."""
    p = check_belief(p)
    return float(np.einsum("k,kuv,u,v->", p, spec.payoff, _weights(mu), _weights(nu)))


def _game_lp(A):
    """Matrix game by LP (HiGHS): variables (mu, w), maximize w."""
    m, l = A.shape
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-A.T, np.ones((l, 1))])
    A_eq = np.hstack([np.ones((1, m)), np.zeros((1, 1))])
    bounds = [(0, None)] * m + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(l), A_eq=A_eq, b_eq=[1.0],
                  bounds=bounds, method="highs")
    if not res.success:
        raise MatrixGameError(np.inf)
    mu = np.clip(res.x[:m], 0.0, None)
    mu /= mu.sum()
    nu = np.clip(-res.ineqlin.marginals, 0.0, None)
    s = nu.sum()
    nu = np.full(l, 1.0 / l) if s <= 0 else nu / s
    return -res.fun, mu, nu


def duality_gap_of(A, mu, nu):
    """Certificate: how far (mu, nu) is from a saddle of the matrix game."""
    return float((A @ nu).max() - (mu @ A).min())


@dataclass(frozen=True)
class MatrixGameSolution:
    value: float
    mu: np.ndarray
    nu: np.ndarray
    gap: float


def matrix_game_value(A):
    """Fast path used inside value iteration; value only, no certificate."""
    m, l = A.shape
    if m == 1:
        return float(A[0].min())
    if l == 1:
        return float(A[:, 0].max())
    try:
        value, _, _ = _kernels.matrix_game(A)
        return value
    except RuntimeError:
        value, _, _ = _game_lp(A)
        return value


def solve_matrix_game(A, gap_tol=GAP_TOL, canonical=False):
    """Solve a matrix game over mixed extensions with a gap certificate.

    Tries the tableau kernel first and falls back to the LP solver; the
    returned saddle always satisfies gap <= gap_tol or the call raises.
    With ``canonical=True`` the optimizers are re-selected to have the
    lexicographically smallest support (deterministic across solvers).
    """
    A = np.asarray(A, dtype=float)
    m, l = A.shape
    if m == 1 and l == 1:
        sol = MatrixGameSolution(float(A[0, 0]), np.ones(1), np.ones(1), 0.0)
        return sol
    if m == 1:
        j = int(np.argmin(A[0]))
        nu = np.zeros(l)
        nu[j] = 1.0
        return MatrixGameSolution(float(A[0, j]), np.ones(1), nu, 0.0)
    if l == 1:
        i = int(np.argmax(A[:, 0]))
        mu = np.zeros(m)
        mu[i] = 1.0
        return MatrixGameSolution(float(A[i, 0]), mu, np.ones(1), 0.0)

    value = mu = nu = None
    try:
        value, mu, nu = _kernels.matrix_game(A)
    except RuntimeError:
        pass
    if value is None or duality_gap_of(A, mu, nu) > gap_tol:
        value, mu, nu = _game_lp(A)
    gap = duality_gap_of(A, mu, nu)
    if gap > gap_tol:
        raise MatrixGameError(gap)
    if canonical:
        mu = _lex_min_mixed(A, value, rows=True) or mu
        nu = _lex_min_mixed(A, value, rows=False) or nu
        gap = max(gap, duality_gap_of(A, mu, nu))
        if gap > gap_tol:
            raise MatrixGameError(gap)
    return MatrixGameSolution(float(value), np.asarray(mu), np.asarray(nu), gap)


def _support_subsets(n):
    """Nonempty subsets of range(n) in lexicographic order of sorted tuples."""
    subsets = []

    def grow(prefix, start):
        for i in range(start, n):
            cur = prefix + (i,)
            subsets.append(cur)
            grow(cur, i + 1)

    grow((), 0)
    return subsets


def _lex_min_mixed(A, value, rows, tol=1e-9):
    """Optimal mixed action with lexicographically smallest support.

    Enumerates candidate supports in lex order and takes the first one that
    carries an optimal strategy with all its mass strictly inside.  Only
    attempted for small action sets.
    """
    M = A if rows else -A.T
    n = M.shape[0]
    if n > 10:
        return None
    scale = max(1.0, np.abs(A).max())
    otol = tol * scale
    target = value if rows else -value
    for S in _support_subsets(n):
        k = len(S)
        # variables: weights on S, then eps; maximize eps.
        c = np.zeros(k + 1)
        c[-1] = -1.0
        A_ub = []
        b_ub = []
        for j in range(M.shape[1]):
            A_ub.append(np.concatenate([-M[list(S), j], [0.0]]))
            b_ub.append(-(target - otol))
        for i in range(k):
            row = np.zeros(k + 1)
            row[i] = -1.0
            row[-1] = 1.0
            A_ub.append(row)
            b_ub.append(0.0)
        A_eq = np.concatenate([np.ones(k), [0.0]])[None, :]
        res = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub),
                      A_eq=A_eq, b_eq=[1.0],
                      bounds=[(0, None)] * k + [(0, None)], method="highs")
        if res.success and -res.fun > 1e-9:
            w = np.zeros(n)
            w[list(S)] = res.x[:k]
            w = np.clip(w, 0.0, None)
            return w / w.sum()
    return None


def stage_payoff_matrix(spec, p, z):
    """Pure-action payoffs <R(u,v)^T p, z> + r g(p, u, v)."""
    p = check_belief(p)
    z = np.asarray(z, dtype=float)
    drift = np.einsum("k,uvkj,j->uv", p, spec.rates, z)
    return drift + spec.discount * np.einsum("k,kuv->uv", p, spec.payoff)


def hamiltonian(spec, query, gap_tol=GAP_TOL, canonical=True):
    """Value of the infinitesimal game at (p, z) with a certified saddle."""
    if not isinstance(query, HamiltonianQuery):
        query = HamiltonianQuery(*query)
    A = stage_payoff_matrix(spec, query.p, query.z)
    return solve_matrix_game(A, gap_tol=gap_tol, canonical=canonical)


@dataclass(frozen=True)
class IsaacsReport:
    pure_supinf: float
    pure_infsup: float
    gap: float
    holds_in_pure: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "holds_in_pure", bool(self.gap <= 1e-12))


def isaacs_report(spec, query):
    """Pure-action sup-inf vs inf-sup of the infinitesimal game.

    The solver itself always works on the mixed extension, where the gap is
    zero; this reports whether the instance happens to satisfy the condition
    in pure actions as well.
    """
    if not isinstance(query, HamiltonianQuery):
        query = HamiltonianQuery(*query)
    A = stage_payoff_matrix(spec, query.p, query.z)
    supinf = float(A.min(axis=1).max())
    infsup = float(A.max(axis=0).min())
    return IsaacsReport(supinf, infsup, infsup - supinf)


def hamiltonian_lipschitz_envelope(spec):
    """Explicit constant C with |H(p,z)-H(p',z')| <= C(|z-z'| + |z||p-p'|).

    Not claimed tight; an upper envelope assembled from the rate and payoff
    bounds.
    """
    K = spec.n_states
    rnorm = float(np.abs(spec.rates).sum(axis=3).max())
    return rnorm * np.sqrt(K) + spec.discount * np.sqrt(K)
