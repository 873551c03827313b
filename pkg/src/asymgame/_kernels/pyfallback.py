"""Pure-Python engine for the hot kernels.

Defines the reference semantics: the compiled engine in ``_core.pyx`` mirrors
these routines operation for operation, including the order in which uniforms
are consumed, so that both engines produce bitwise-identical results from the
same random stream.
"""

import math

import numpy as np

ENGINE = "python"

_SIMPLEX_TOL = 1e-11
_PIVOT_TOL = 1e-12
_MAX_PIVOTS = 10000


class SimplexFailure(RuntimeError):
    """Tableau simplex did not terminate cleanly; caller should fall back."""


def matrix_game(A):
    """Value and optimal mixed actions of the zero-sum matrix game A.

    Row player maximizes, column player minimizes.  Solves the classical
    reciprocal linear program (shift payoffs positive, maximize sum of the
    scaled column strategy subject to A'y <= 1) with a dense tableau simplex
    using Bland's rule.  Returns (value, mu, nu).
    """
    A = np.asarray(A, dtype=np.float64)
    m, n = A.shape
    shift = 1.0 - A.min()
    As = A + shift

    # Tableau: columns [y (n) | slacks (m) | rhs], objective row appended.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = As
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = 1.0
    T[m, :n] = -1.0
    basis = np.arange(n, n + m)

    for _ in range(_MAX_PIVOTS):
        enter = -1
        for j in range(n + m):
            if T[m, j] < -_SIMPLEX_TOL:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best = math.inf
        for i in range(m):
            a = T[i, enter]
            if a > _PIVOT_TOL:
                ratio = T[i, -1] / a
                if leave < 0 or ratio < best - _PIVOT_TOL:
                    best = ratio
                    leave = i
                elif ratio < best + _PIVOT_TOL and basis[i] < basis[leave]:
                    if ratio < best:
                        best = ratio
                    leave = i
        if leave < 0:
            raise SimplexFailure("unbounded game tableau")
        piv = T[leave, enter]
        T[leave, :] /= piv
        for i in range(m + 1):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    T[i, :] -= f * T[leave, :]
        basis[leave] = enter
    else:
        raise SimplexFailure("pivot limit exceeded")

    y = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            y[basis[i]] = T[i, -1]
    x = T[m, n:n + m].copy()
    sy = y.sum()
    sx = x.sum()
    if sy <= 0.0 or sx <= 0.0:
        raise SimplexFailure("degenerate game tableau")
    nu = y / sy
    mu = x / sx
    value = 1.0 / sy - shift
    return value, mu, nu


def _pick(cum, xi, n):
    """Smallest index k < n with xi < cum[k], else n - 1."""
    k = 0
    while k < n - 1 and xi >= cum[k]:
        k += 1
    return k


def _jump_to(jc_row, xi, K):
    return _pick(jc_row, xi, K)


def final_state(breaks, lam, jc, x0, t_end, gen):
    """State at time t_end of a jump chain with piecewise-constant rates.

    breaks:  interval boundaries, breaks[0] == 0, increasing.
    lam:     (I, K) exit rate per interval and state.
    jc:      (I, K, K) cumulative jump distribution per interval and state.
    Exact simulation: exponential holding times, memoryless restart at each
    interval boundary.
    """
    state = x0
    I = len(breaks) - 1
    for i in range(I):
        t = breaks[i]
        stop = breaks[i + 1]
        if stop > t_end:
            stop = t_end
        if stop <= t:
            break
        while True:
            rate = lam[i, state]
            if rate <= 0.0:
                break
            u = gen.random()
            hold = math.inf if u <= 0.0 else -math.log(u) / rate
            if t + hold >= stop:
                break
            t += hold
            state = _jump_to(jc[i, state], gen.random(), jc.shape[2])
        if breaks[i + 1] >= t_end:
            break
    return state


def _chain_payoff_piece(state, u, v, t0, t1, r, lam, jc, gtab, gen):
    """Simulate the chain on (t0, t1] under constant actions, accumulating
    the discounted payoff integral.  Returns (payoff, final_state)."""
    payoff = 0.0
    t = t0
    K = jc.shape[3]
    while True:
        rate = lam[u, v, state]
        if rate <= 0.0:
            payoff += gtab[state, u, v] * (math.exp(-r * t) - math.exp(-r * t1))
            break
        xi = gen.random()
        hold = math.inf if xi <= 0.0 else -math.log(xi) / rate
        if t + hold >= t1:
            payoff += gtab[state, u, v] * (math.exp(-r * t) - math.exp(-r * t1))
            break
        payoff += gtab[state, u, v] * (math.exp(-r * t) - math.exp(-r * (t + hold)))
        t += hold
        state = _jump_to(jc[u, v, state], gen.random(), K)
    return payoff, state


def payoff_open_loop(breaks, u_sched, v_sched, p_cum, r, lam, jc, gtab, gen):
    """Discounted payoff of one path under an open-loop control schedule."""
    state = _pick(p_cum, gen.random(), len(p_cum))
    payoff = 0.0
    for i in range(len(u_sched)):
        piece, state = _chain_payoff_piece(
            state, u_sched[i], v_sched[i], breaks[i], breaks[i + 1], r, lam, jc, gtab, gen
        )
        payoff += piece
    return payoff


def rollout(n_steps, tau, r, v_sched, tail_const, p_cum, g0,
            off, xcond_cum, mu_cum, pure_u, next_idx, absorbing,
            lam, jc, gtab, gen):
    """One path of the grid-stationary revealing strategy against a fixed
    opponent schedule.

    Per grid step: pick the splitting component at the current belief grid
    point conditional on the true state (one uniform, skipped when the plan
    is trivial), realize the component's mixed action (one uniform, skipped
    when pure), simulate the chain for one step while integrating the
    discounted payoff, then move the belief index through the transport
    table.  When the (plan, action, opponent) triple is provably stationary
    the remaining horizon is merged into a single constant-control piece.
    """
    K = len(p_cum)
    state = _pick(p_cum, gen.random(), K)
    gidx = g0
    payoff = 0.0
    for s in range(n_steps):
        v = v_sched[s]
        lo = off[gidx]
        nc = off[gidx + 1] - lo
        if nc == 1:
            c = lo
        else:
            xi = gen.random()
            c = lo
            while c < off[gidx + 1] - 1 and xi >= xcond_cum[c, state]:
                c += 1
        if pure_u[c] >= 0:
            u = pure_u[c]
        else:
            u = _pick(mu_cum[c], gen.random(), mu_cum.shape[1])
        merged = (
            nc == 1
            and pure_u[c] >= 0
            and absorbing[c, v]
            and tail_const[s]
        )
        t0 = s * tau
        t1 = n_steps * tau if merged else t0 + tau
        piece, state = _chain_payoff_piece(state, u, v, t0, t1, r, lam, jc, gtab, gen)
        payoff += piece
        if merged:
            break
        gidx = next_idx[c, v]
    return payoff
