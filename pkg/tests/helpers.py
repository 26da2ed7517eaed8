"""Shared test helpers."""

import math

import numpy as np

from fgscan.dataset import from_arrays
from fgscan.sim import SimConfig, simulate


def random_instance(rng, n=None, p=None, ties=False, umax=None):
    """Censored two-cause data with both causes present."""
    n = int(rng.integers(5, 120)) if n is None else n
    p = int(rng.integers(1, 6)) if p is None else p
    b1 = rng.uniform(-0.8, 0.8, p)
    b2 = rng.uniform(-0.8, 0.8, p)
    umax = rng.uniform(1.0, 3.0) if umax is None else umax
    while True:
        cfg = SimConfig(n=n, beta1=b1, beta2=b2, u_max=umax, seed=int(rng.integers(2**32)))
        ds = simulate(cfg)
        counts = ds.status_counts()
        if counts[1] > 0 and counts[2] > 0:
            break
    if ties:
        t = np.round(ds.time, 1) + 0.1
        ds = from_arrays(t, ds.status, ds.Z)
    return ds


# ---------------------------------------------------------------------------
# Reference implementation written straight from the definitions, with its
# own product-limit loop; shares no code with the package.


def ref_censoring_survival(time, status):
    """Left-limit KM of censoring; events at a shared time leave first."""
    time = np.asarray(time, dtype=float)
    status = np.asarray(status)
    cens_times = sorted(set(time[status == 0].tolist()))
    factors = []
    for c in cens_times:
        d = sum(1 for t, s in zip(time, status) if t == c and s == 0)
        y = sum(1 for t in time if t > c) + d
        factors.append((c, 1.0 - d / y))

    def G(t):
        out = 1.0
        for c, f in factors:
            if c < t:
                out *= f
        return out

    return G


def ref_quantities(time, status, Z, beta):
    time = np.asarray(time, dtype=float)
    Z = np.asarray(Z, dtype=float)
    n, p = Z.shape
    G = ref_censoring_survival(time, status)
    eta = [sum(Z[k, j] * beta[j] for j in range(p)) for k in range(n)]
    ll, grad, hess = 0.0, [0.0] * p, [0.0] * p
    for i in range(n):
        if status[i] != 1:
            continue
        s0, s1, s2 = 0.0, [0.0] * p, [0.0] * p
        for k in range(n):
            if time[k] >= time[i]:
                w = 1.0
            elif status[k] == 2:
                w = G(time[i]) / G(time[k])
            else:
                continue
            a = w * math.exp(eta[k])
            s0 += a
            for j in range(p):
                s1[j] += a * Z[k, j]
                s2[j] += a * Z[k, j] ** 2
        ll += eta[i] - math.log(s0)
        for j in range(p):
            grad[j] += Z[i, j] - s1[j] / s0
            hess[j] += s2[j] / s0 - (s1[j] / s0) ** 2
    return ll, np.array(grad), np.array(hess)


def close(a, b, tol):
    """|a - b| <= tol * max(1, |b|), componentwise."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return bool(np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(b))))
