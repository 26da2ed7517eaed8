"""Log-pseudo-likelihood, score and Hessian diagonal of the Fine-Gray model.

The risk set of a primary event at X_i is every subject still under
observation (X_k >= X_i) plus every competing event that happened
earlier.  The first part is a running sum over the descending-time order,
the second a running sum over the ascending order scaled by G(X_i), so
each quantity costs two O(n) passes.  :func:`brute_force` enumerates the
risk sets directly and serves as the quadratic reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dataset import CAUSE1, CAUSE2, Dataset
from .errors import DataError, ScanOverflowError, ZeroDenominatorError
from .ipcw import WeightSet, precompute_weights

ETA_BOUND = 500.0
BRUTE_FORCE_CAP = 5000
NAIVE_ENGINE_CAP = 20000


@dataclass(frozen=True)
class ScanOutput:
    loglik: float
    gradient: np.ndarray
    hessian_diag: np.ndarray
    ops: int = 0


class LinearPredictorState:
    """Coefficients with their linear predictor and its exponential.

    Owned by a single fit; :func:`update_eta` mutates it in place.
    """

    def __init__(self, ds: Dataset, beta):
        beta = np.array(beta, dtype=np.float64).reshape(-1)
        if beta.shape[0] != ds.p:
            raise DataError(f"beta has length {beta.shape[0]}, expected {ds.p}")
        if not np.all(np.isfinite(beta)):
            raise DataError("beta must be finite")
        self.ds = ds
        self.beta = beta
        self.eta = _check_eta(ds.Z @ beta)
        self.exp_eta = np.exp(self.eta)

    def copy(self) -> "LinearPredictorState":
        new = object.__new__(LinearPredictorState)
        new.ds = self.ds
        new.beta = self.beta.copy()
        new.eta = self.eta.copy()
        new.exp_eta = self.exp_eta.copy()
        return new

    def restore(self, other: "LinearPredictorState") -> None:
        self.beta[:] = other.beta
        self.eta[:] = other.eta
        self.exp_eta[:] = other.exp_eta


def _check_eta(eta):
    m = float(np.max(np.abs(eta))) if eta.size else 0.0
    if not m <= ETA_BOUND:
        raise ScanOverflowError(
            f"|linear predictor| reached {m:.4g} (bound {ETA_BOUND:g}); "
            "rescale the covariates")
    return eta


def update_eta(state: LinearPredictorState, j: int, delta: float) -> LinearPredictorState:
    """Add ``delta`` to coefficient j, updating eta in O(n).

    The state is left untouched if the move would overflow.
    """
    if not np.isfinite(delta):
        raise DataError("delta must be finite")
    if delta == 0.0:
        return state
    eta = _check_eta(state.eta + state.ds.Z[:, j] * delta)
    state.eta[:] = eta
    np.exp(eta, out=state.exp_eta)
    state.beta[j] += delta
    return state


class ScanEngine:
    """Linear-time evaluation via forward and backward scans."""

    name = "scan"

    def __init__(self, ds: Dataset, weights: WeightSet | None = None):
        if weights is None:
            weights = precompute_weights(ds)
        self.ds = ds
        self.weights = weights
        self.event = np.ascontiguousarray(ds.status == CAUSE1)
        self.G = np.ascontiguousarray(weights.G_at_X)
        self.bfac = np.ascontiguousarray(weights.backward_factor)
        self.group_end = np.ascontiguousarray(ds.group_end)
        # reused across calls; an engine belongs to one fit at a time
        self._work = np.empty((3, ds.n + 1))
        self._D = np.empty(ds.n)
        self.ops = 0

    def loglik(self, state: LinearPredictorState) -> float:
        ll = _kernels.scan_loglik(state.eta, state.exp_eta, self.event, self.G,
                                  self.bfac, self.group_end, self._D, self._work[0])
        self.ops += 2 * self.ds.n
        if np.isnan(ll):
            raise ZeroDenominatorError("risk-set denominator is zero")
        return float(ll)

    def denominators(self, state: LinearPredictorState) -> np.ndarray:
        """Risk-set sums at primary-event positions (NaN elsewhere)."""
        D = np.full(self.ds.n, np.nan)
        ll = _kernels.scan_loglik(state.eta, state.exp_eta, self.event, self.G,
                                  self.bfac, self.group_end, D, self._work[0])
        self.ops += 2 * self.ds.n
        if np.isnan(ll):
            raise ZeroDenominatorError("risk-set denominator is zero")
        return D

    def coordinate(self, state: LinearPredictorState, j: int):
        """Return (loglik, g_j, h_j) at the current state."""
        ll, g, h = _kernels.scan_coordinate(state.eta, state.exp_eta, self.ds.Z[:, j],
                                            self.event, self.G, self.bfac, self.group_end,
                                            self._work)
        self.ops += 2 * self.ds.n
        if np.isnan(ll):
            raise ZeroDenominatorError("risk-set denominator is zero")
        return float(ll), float(g), float(h)

    def evaluate(self, state: LinearPredictorState) -> ScanOutput:
        p = self.ds.p
        grad = np.zeros(p)
        hess = np.zeros(p)
        start = self.ops
        ll = self.loglik(state) if p == 0 else 0.0
        for j in range(p):
            ll, grad[j], hess[j] = self.coordinate(state, j)
        return ScanOutput(ll, grad, hess, self.ops - start)


class NaiveEngine(ScanEngine):
    """Quadratic engine with the same interface; the reference for timings."""

    name = "naive"

    def __init__(self, ds: Dataset, weights: WeightSet | None = None, force: bool = False):
        if ds.n > NAIVE_ENGINE_CAP and not force:
            raise DataError(
                f"naive engine refuses n={ds.n} > {NAIVE_ENGINE_CAP} without force")
        super().__init__(ds, weights)
        self.time = np.ascontiguousarray(ds.time)
        self.status = np.ascontiguousarray(ds.status)

    def loglik(self, state):
        ll = _kernels.naive_loglik(self.time, self.status, state.eta, state.exp_eta, self.G)
        self.ops += self.ds.n * self.ds.n
        if np.isnan(ll):
            raise ZeroDenominatorError("risk-set denominator is zero")
        return float(ll)

    def coordinate(self, state, j):
        ll, g, h = _kernels.naive_coordinate(self.time, self.status, state.eta,
                                             state.exp_eta, self.ds.Z[:, j], self.G)
        self.ops += self.ds.n * self.ds.n
        if np.isnan(ll):
            raise ZeroDenominatorError("risk-set denominator is zero")
        return float(ll), float(g), float(h)


ENGINES = {"scan": ScanEngine, "naive": NaiveEngine}


def make_engine(name: str, ds: Dataset, weights: WeightSet | None = None, **kw):
    try:
        cls = ENGINES[name]
    except KeyError:
        raise ValueError(f"unknown engine {name!r}; choose from {sorted(ENGINES)}") from None
    return cls(ds, weights, **kw)


def scan_all(ds: Dataset, w: WeightSet, beta) -> ScanOutput:
    """Log-pseudo-likelihood, score and Hessian diagonal in O(n p)."""
    return ScanEngine(ds, w).evaluate(LinearPredictorState(ds, beta))


def scan_coordinate(ds: Dataset, w: WeightSet, state: LinearPredictorState, j: int):
    """(g_j, h_j) for one coordinate in O(n)."""
    _, g, h = ScanEngine(ds, w).coordinate(state, j)
    return g, h


def brute_force(ds: Dataset, w: WeightSet, beta, cap: int = BRUTE_FORCE_CAP) -> ScanOutput:
    """Direct double-sum evaluation of the three quantities.

    Each risk set is built from its definition and weighted with the
    censoring survival function evaluated afresh; nothing here relies on
    the sorted order.
    """
    if ds.n > cap:
        raise DataError(f"brute_force refuses n={ds.n} > cap {cap}")
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    X, eps, Z = ds.time, ds.status, ds.Z
    eta = Z @ beta
    e = np.exp(eta)
    G = w.G
    ll = 0.0
    grad = np.zeros(ds.p)
    hess = np.zeros(ds.p)
    for i in range(ds.n):
        if eps[i] != CAUSE1:
            continue
        in_R = (X >= X[i]) | ((X <= X[i]) & (eps == CAUSE2))
        wt = G(X[i]) / G(np.minimum(X[i], X[in_R]))
        a = wt * e[in_R]
        zr = Z[in_R]
        s0 = a.sum()
        s1 = a @ zr
        s2 = a @ (zr * zr)
        ll += eta[i] - np.log(s0)
        grad += Z[i] - s1 / s0
        hess += s2 / s0 - (s1 / s0) ** 2
    return ScanOutput(float(ll), grad, hess, ds.n * ds.n)
