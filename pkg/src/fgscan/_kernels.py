# Compiled inner loops. Inputs are in canonical (descending-time) order.
#
# Linear-time kernels: a backward pass (ascending time) accumulates the
# competing-event sums sum_{X_k < X_i, status 2} a_k / G(X_k), then a
# forward pass (descending time) accumulates sum_{X_k >= X_i} a_k together
# with the outer sum over primary events.  All running sums use Neumaier
# compensation.

import numpy as np
from numba import njit


@njit(cache=True, nogil=True, inline="always")
def _nadd(s, c, x):
    t = s + x
    if abs(s) >= abs(x):
        c += (s - t) + x
    else:
        c += (x - t) + s
    return t, c


@njit(cache=True, nogil=True)
def scan_loglik(eta, e, event, G, bfac, group_end, D, b0):
    """Log-pseudo-likelihood; writes risk-set denominators into D at events.

    ``b0`` is caller-owned workspace of length n + 1.
    """
    n = e.shape[0]
    s, c = 0.0, 0.0
    b0[n] = 0.0
    for k in range(n - 1, -1, -1):
        if bfac[k] != 0.0:
            s, c = _nadd(s, c, e[k] * bfac[k])
        b0[k] = s + c
    f, fc = 0.0, 0.0
    ll, llc = 0.0, 0.0
    upto = -1
    for i in range(n):
        if not event[i]:
            continue
        ge = group_end[i]
        while upto < ge:
            upto += 1
            f, fc = _nadd(f, fc, e[upto])
        d = (f + fc) + G[i] * b0[ge + 1]
        D[i] = d
        if not d > 0.0:
            return np.nan
        ll, llc = _nadd(ll, llc, eta[i] - np.log(d))
    return ll + llc


@njit(cache=True, nogil=True)
def scan_coordinate(eta, e, x, event, G, bfac, group_end, work):
    """(loglik, score_j, hessian_jj) for one covariate column x.

    ``work`` is caller-owned workspace of shape (3, n + 1).
    """
    n = e.shape[0]
    b0 = work[0]
    b1 = work[1]
    b2 = work[2]
    s0, c0, s1, c1, s2, c2 = 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    b0[n] = 0.0
    b1[n] = 0.0
    b2[n] = 0.0
    for k in range(n - 1, -1, -1):
        if bfac[k] != 0.0:
            a = e[k] * bfac[k]
            xa = a * x[k]
            s0, c0 = _nadd(s0, c0, a)
            s1, c1 = _nadd(s1, c1, xa)
            s2, c2 = _nadd(s2, c2, xa * x[k])
        b0[k] = s0 + c0
        b1[k] = s1 + c1
        b2[k] = s2 + c2
    f0, g0, f1, g1, f2, g2 = 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    ll, llc, sc, scc, hs, hsc = 0.0, 0.0, 0.0, 0.0, 0.0, 0.0
    upto = -1
    for i in range(n):
        if not event[i]:
            continue
        ge = group_end[i]
        while upto < ge:
            upto += 1
            a = e[upto]
            xa = a * x[upto]
            f0, g0 = _nadd(f0, g0, a)
            f1, g1 = _nadd(f1, g1, xa)
            f2, g2 = _nadd(f2, g2, xa * x[upto])
        gi = G[i]
        d = (f0 + g0) + gi * b0[ge + 1]
        if not d > 0.0:
            return np.nan, np.nan, np.nan
        r1 = ((f1 + g1) + gi * b1[ge + 1]) / d
        r2 = ((f2 + g2) + gi * b2[ge + 1]) / d
        ll, llc = _nadd(ll, llc, eta[i] - np.log(d))
        sc, scc = _nadd(sc, scc, x[i] - r1)
        hs, hsc = _nadd(hs, hsc, r2 - r1 * r1)
    return ll + llc, sc + scc, hs + hsc


# Quadratic reference kernels: every risk set is enumerated from its
# definition, with no use of the ordering or of group boundaries.

@njit(cache=True, nogil=True)
def naive_loglik(time, status, eta, e, Gx):
    n = e.shape[0]
    ll = 0.0
    for i in range(n):
        if status[i] != 1:
            continue
        ti = time[i]
        d = 0.0
        for k in range(n):
            if time[k] >= ti:
                d += e[k]
            elif status[k] == 2:
                d += e[k] * Gx[i] / Gx[k]
        if not d > 0.0:
            return np.nan
        ll += eta[i] - np.log(d)
    return ll


@njit(cache=True, nogil=True)
def naive_coordinate(time, status, eta, e, x, Gx):
    n = e.shape[0]
    ll = 0.0
    sc = 0.0
    hs = 0.0
    for i in range(n):
        if status[i] != 1:
            continue
        ti = time[i]
        d = 0.0
        n1 = 0.0
        n2 = 0.0
        for k in range(n):
            if time[k] >= ti:
                a = e[k]
            elif status[k] == 2:
                a = e[k] * Gx[i] / Gx[k]
            else:
                continue
            d += a
            n1 += a * x[k]
            n2 += a * x[k] * x[k]
        if not d > 0.0:
            return np.nan, np.nan, np.nan
        r1 = n1 / d
        ll += eta[i] - np.log(d)
        sc += x[i] - r1
        hs += n2 / d - r1 * r1
    return ll, sc, hs
