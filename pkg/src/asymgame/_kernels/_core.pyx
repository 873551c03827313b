# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled engine for the hot kernels.

Mirrors ``pyfallback`` operation for operation, consuming uniforms from the
same bit generator in the same order, so both engines are bitwise
interchangeable.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log, INFINITY

import numpy as np

from numpy.random cimport bitgen_t

ENGINE = "compiled"

DEF SIMPLEX_TOL = 1e-11
DEF PIVOT_TOL = 1e-12
DEF MAX_PIVOTS = 10000


class SimplexFailure(RuntimeError):
    pass


cdef inline bitgen_t *_bg(object gen) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(
        gen.bit_generator.capsule, "BitGenerator")


cdef inline double _next(bitgen_t *bg) noexcept:
    return bg.next_double(bg.state)


cdef inline int _pick(const double[:] cum, double xi, int n) noexcept:
    cdef int k = 0
    while k < n - 1 and xi >= cum[k]:
        k += 1
    return k


def matrix_game(A_in):
    """Tableau-simplex solution of a zero-sum matrix game (see pyfallback)."""
    A = np.ascontiguousarray(A_in, dtype=np.float64)
    cdef int m = A.shape[0]
    cdef int n = A.shape[1]
    cdef double shift = 1.0 - A.min()

    T_arr = np.zeros((m + 1, n + m + 1))
    T_arr[:m, :n] = A + shift
    T_arr[:m, n:n + m] = np.eye(m)
    T_arr[:m, n + m] = 1.0
    T_arr[m, :n] = -1.0
    basis_arr = np.arange(n, n + m, dtype=np.int32)

    cdef double[:, ::1] T = T_arr
    cdef int[::1] basis = basis_arr
    cdef int ncols = n + m + 1
    cdef int it, i, j, enter, leave
    cdef double a, ratio, best, piv, f

    for it in range(MAX_PIVOTS):
        enter = -1
        for j in range(n + m):
            if T[m, j] < -SIMPLEX_TOL:
                enter = j
                break
        if enter < 0:
            break
        leave = -1
        best = INFINITY
        for i in range(m):
            a = T[i, enter]
            if a > PIVOT_TOL:
                ratio = T[i, ncols - 1] / a
                if leave < 0 or ratio < best - PIVOT_TOL:
                    best = ratio
                    leave = i
                elif ratio < best + PIVOT_TOL and basis[i] < basis[leave]:
                    if ratio < best:
                        best = ratio
                    leave = i
        if leave < 0:
            raise SimplexFailure("unbounded game tableau")
        piv = T[leave, enter]
        for j in range(ncols):
            T[leave, j] = T[leave, j] / piv
        for i in range(m + 1):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    for j in range(ncols):
                        T[i, j] = T[i, j] - f * T[leave, j]
        basis[leave] = enter
    else:
        raise SimplexFailure("pivot limit exceeded")

    y = np.zeros(n)
    for i in range(m):
        if basis[i] < n:
            y[basis[i]] = T[i, ncols - 1]
    x = np.asarray(T_arr[m, n:n + m]).copy()
    cdef double sy = y.sum()
    cdef double sx = x.sum()
    if sy <= 0.0 or sx <= 0.0:
        raise SimplexFailure("degenerate game tableau")
    return 1.0 / sy - shift, x / sx, y / sy


def final_state(const double[:] breaks, const double[:, ::1] lam,
                const double[:, :, ::1] jc, int x0, double t_end, object gen):
    cdef bitgen_t *bg = _bg(gen)
    cdef int state = x0
    cdef int I = breaks.shape[0] - 1
    cdef int K = jc.shape[2]
    cdef int i
    cdef double t, stop, rate, u, hold
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
            u = _next(bg)
            hold = INFINITY if u <= 0.0 else -log(u) / rate
            if t + hold >= stop:
                break
            t += hold
            state = _pick(jc[i, state], _next(bg), K)
        if breaks[i + 1] >= t_end:
            break
    return state


cdef double _chain_payoff_piece(int *state_io, int u, int v,
                                double t0, double t1, double r,
                                const double[:, :, ::1] lam,
                                const double[:, :, :, ::1] jc,
                                const double[:, :, ::1] gtab,
                                bitgen_t *bg) noexcept:
    cdef double payoff = 0.0
    cdef double t = t0
    cdef int state = state_io[0]
    cdef int K = jc.shape[3]
    cdef double rate, xi, hold
    while True:
        rate = lam[u, v, state]
        if rate <= 0.0:
            payoff += gtab[state, u, v] * (exp(-r * t) - exp(-r * t1))
            break
        xi = _next(bg)
        hold = INFINITY if xi <= 0.0 else -log(xi) / rate
        if t + hold >= t1:
            payoff += gtab[state, u, v] * (exp(-r * t) - exp(-r * t1))
            break
        payoff += gtab[state, u, v] * (exp(-r * t) - exp(-r * (t + hold)))
        t += hold
        state = _pick(jc[u, v, state], _next(bg), K)
    state_io[0] = state
    return payoff


def payoff_open_loop(const double[:] breaks, const int[:] u_sched,
                     const int[:] v_sched, const double[:] p_cum, double r,
                     const double[:, :, ::1] lam, const double[:, :, :, ::1] jc,
                     const double[:, :, ::1] gtab, object gen):
    cdef bitgen_t *bg = _bg(gen)
    cdef int state = _pick(p_cum, _next(bg), p_cum.shape[0])
    cdef double payoff = 0.0
    cdef int i
    for i in range(u_sched.shape[0]):
        payoff += _chain_payoff_piece(&state, u_sched[i], v_sched[i],
                                      breaks[i], breaks[i + 1], r,
                                      lam, jc, gtab, bg)
    return payoff


def rollout(int n_steps, double tau, double r, const int[:] v_sched,
            const unsigned char[:] tail_const, const double[:] p_cum, int g0,
            const int[:] off, const double[:, ::1] xcond_cum,
            const double[:, ::1] mu_cum, const int[:] pure_u,
            const int[:, ::1] next_idx, const unsigned char[:, ::1] absorbing,
            const double[:, :, ::1] lam, const double[:, :, :, ::1] jc,
            const double[:, :, ::1] gtab, object gen):
    cdef bitgen_t *bg = _bg(gen)
    cdef int K = p_cum.shape[0]
    cdef int state = _pick(p_cum, _next(bg), K)
    cdef int gidx = g0
    cdef double payoff = 0.0
    cdef int s, v, lo, nc, c, u
    cdef bint merged
    cdef double xi, t0, t1
    for s in range(n_steps):
        v = v_sched[s]
        lo = off[gidx]
        nc = off[gidx + 1] - lo
        if nc == 1:
            c = lo
        else:
            xi = _next(bg)
            c = lo
            while c < off[gidx + 1] - 1 and xi >= xcond_cum[c, state]:
                c += 1
        if pure_u[c] >= 0:
            u = pure_u[c]
        else:
            u = _pick(mu_cum[c], _next(bg), mu_cum.shape[1])
        merged = (nc == 1 and pure_u[c] >= 0
                  and absorbing[c, v] and tail_const[s])
        t0 = s * tau
        t1 = n_steps * tau if merged else t0 + tau
        payoff += _chain_payoff_piece(&state, u, v, t0, t1, r,
                                      lam, jc, gtab, bg)
        if merged:
            break
        gidx = next_idx[c, v]
    return payoff
