"""Baseline subdistribution hazard, predicted CIF and bootstrap intervals/bands.

Intervals and bands are built on the ``m(x) = log(-log(x))`` scale and
mapped back with ``m^-1(y) = exp(-exp(y))``.  The variance of the
transformed replicate curves uses denominator B; the band critical value
is the nearest-rank (1 - alpha) quantile of the replicate sup-statistics.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import norm

from .bootstrap import BootstrapControl, run_replicates
from .dataset import CAUSE1, Dataset
from .errors import DataError, NumericalError
from .fit import FitResult, fit_unpenalized
from .ipcw import WeightSet, precompute_weights
from .scan import LinearPredictorState, ScanEngine

log = logging.getLogger(__name__)

F_CEILING = 1.0 - 1e-15
SIGMA_FLOOR = 1e-12


@dataclass(frozen=True)
class BaselineHazard:
    event_times: np.ndarray  # ascending, distinct
    increments: np.ndarray
    cumulative: np.ndarray

    def __call__(self, t):
        """Right-continuous step evaluation of the cumulative hazard."""
        idx = np.searchsorted(self.event_times, np.asarray(t, dtype=np.float64), side="right")
        return np.concatenate(([0.0], self.cumulative))[idx]


@dataclass(frozen=True)
class CifEstimate:
    times: np.ndarray
    values: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    band_lower: np.ndarray | None = None
    band_upper: np.ndarray | None = None
    grid: np.ndarray | None = None  # times at which intervals/bands are defined
    sigma: np.ndarray | None = None
    critical_value: float | None = None
    alpha: float | None = None
    transform: str = "loglog"

    def __call__(self, t):
        idx = np.searchsorted(self.times, np.asarray(t, dtype=np.float64), side="right")
        return np.concatenate(([0.0], self.values))[idx]


def m_transform(x):
    return np.log(-np.log(x))


def m_inverse(y):
    return np.exp(-np.exp(y))


def breslow_baseline(ds: Dataset, w: WeightSet | None, beta) -> BaselineHazard:
    """Breslow-type cumulative baseline subdistribution hazard.

    Each primary event contributes ``1 / D_i``, where ``D_i`` is the
    weighted risk-set sum ``sum_k w_ik exp(z_k'beta)`` from the scan.
    """
    if w is None:
        w = precompute_weights(ds)
    eng = ScanEngine(ds, w)
    D = eng.denominators(LinearPredictorState(ds, beta))
    ev = ds.status == CAUSE1
    if not ev.any():
        return BaselineHazard(np.empty(0), np.empty(0), np.empty(0))
    t_ev = ds.time[ev][::-1]
    inc = (1.0 / D[ev])[::-1]
    times, start = np.unique(t_ev, return_index=True)
    increments = np.add.reduceat(inc, start)
    return BaselineHazard(times, increments, np.cumsum(increments))


def predict_cif(baseline: BaselineHazard, beta, z0) -> CifEstimate:
    """``F1(t; z0) = 1 - exp(-exp(z0'beta) * H10(t))`` at the baseline jump times."""
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    z0 = np.asarray(z0, dtype=np.float64).reshape(-1)
    if z0.shape != beta.shape:
        raise DataError(f"z0 has length {z0.size}, expected {beta.size}")
    r = math.exp(float(z0 @ beta)) if abs(float(z0 @ beta)) < 700 else math.inf
    if not math.isfinite(r):
        raise NumericalError("exp(z0'beta) is not finite")
    F = np.minimum(-np.expm1(-r * baseline.cumulative), F_CEILING)
    return CifEstimate(times=baseline.event_times.copy(), values=F)


def _point(ds, fit_beta, z0, w=None):
    return predict_cif(breslow_baseline(ds, w, fit_beta), fit_beta, z0)


def _validate_window(ds: Dataset, tL, tU):
    tmax = float(ds.time[ds.status == CAUSE1].max())
    if not (0 < tL < tU):
        raise ValueError(f"need 0 < tL < tU, got tL={tL}, tU={tU}")
    if tU > tmax:
        raise ValueError(f"tU={tU} exceeds the largest primary event time {tmax:g}")


def evaluation_grid(ds: Dataset, tL: float, tU: float) -> np.ndarray:
    t = np.unique(ds.time[ds.status == CAUSE1])
    return t[(t >= tL) & (t <= tU)]


def cif_replicates(ds: Dataset, z0, control: BootstrapControl, grid, fit: FitResult | None = None,
                   fit_options: dict | None = None) -> np.ndarray:
    """Bootstrap CIF curves evaluated on ``grid`` (rows are replicates)."""
    opts = dict(fit_options or {})
    if fit is not None:
        opts.setdefault("init", fit.coefficients)

    def stat(rep):
        f = fit_unpenalized(rep, **opts)
        return _point(rep, f.coefficients, z0)(grid)

    curves, _ = run_replicates(ds, control, stat)
    return np.vstack(curves)


def _prepare(ds, z0, control, alpha, tL, tU, fit, replicates, fit_options):
    _validate_window(ds, tL, tU)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if fit is None:
        fit = fit_unpenalized(ds, **(fit_options or {}))
    point = _point(ds, fit.coefficients, z0)
    grid = evaluation_grid(ds, tL, tU)
    if replicates is None:
        replicates = cif_replicates(ds, z0, control, grid, fit, fit_options)
    replicates = np.atleast_2d(np.asarray(replicates, dtype=np.float64))
    if replicates.shape[1] != grid.size:
        raise ValueError("replicate curves do not match the evaluation grid")
    Fhat = point(grid)
    ok = (Fhat > 0) & (Fhat < 1) & np.all((replicates > 0) & (replicates < 1), axis=0)
    if not ok.all():
        warnings.warn(f"dropping {int((~ok).sum())} grid points where the CIF is 0 or 1",
                      RuntimeWarning, stacklevel=3)
    if not ok.any():
        raise NumericalError("CIF is 0 or 1 at every grid point; transform undefined")
    grid, Fhat, replicates = grid[ok], Fhat[ok], replicates[:, ok]
    m_hat = m_transform(Fhat)
    m_rep = m_transform(replicates)
    # shifting by the first replicate makes identical replicates give exactly 0
    s = m_rep - m_rep[0]
    sigma = np.sqrt(np.mean((s - s.mean(axis=0)) ** 2, axis=0))
    return point, grid, m_hat, m_rep, sigma


def _interval(F, m_center, half):
    a = m_inverse(m_center - half)
    b = m_inverse(m_center + half)
    # pin the ends to F where rounding in m^-1(m(F)) would cross it
    lo = np.where(half > 0, np.minimum(np.minimum(a, b), F), F)
    hi = np.where(half > 0, np.maximum(np.maximum(a, b), F), F)
    return lo, hi


def cif_pointwise_interval(ds: Dataset, z0, control: BootstrapControl, alpha: float = 0.05,
                           tL: float = None, tU: float = None, fit: FitResult | None = None,
                           replicates=None, fit_options: dict | None = None) -> CifEstimate:
    """Pointwise ``m^-1[m(F) +/- z_{1-alpha/2} sigma(t)]`` intervals on [tL, tU]."""
    point, grid, m_hat, _, sigma = _prepare(ds, z0, control, alpha, tL, tU, fit,
                                            replicates, fit_options)
    lo, hi = _interval(point(grid), m_hat, norm.ppf(1 - alpha / 2) * sigma)
    return replace(point, lower=lo, upper=hi, grid=grid, sigma=sigma, alpha=alpha)


def sup_statistics(m_rep, m_hat, sigma) -> np.ndarray:
    """Per-replicate sup_t |m(F_b) - m(F)| / sigma(t) over points with sigma > floor."""
    keep = sigma > SIGMA_FLOOR
    if not keep.any():
        return np.zeros(m_rep.shape[0])
    return np.max(np.abs(m_rep[:, keep] - m_hat[keep]) / sigma[keep], axis=1)


def nearest_rank_quantile(values, q: float) -> float:
    v = np.sort(np.asarray(values, dtype=np.float64))
    if v.size == 0:
        raise ValueError("quantile of an empty set")
    # tolerance keeps e.g. 0.95 * 100 from rounding up to rank 96
    k = min(max(int(math.ceil(q * v.size - 1e-9)), 1), v.size)
    return float(v[k - 1])


def cif_band(ds: Dataset, z0, control: BootstrapControl, alpha: float = 0.05,
             tL: float = None, tU: float = None, fit: FitResult | None = None,
             replicates=None, fit_options: dict | None = None) -> CifEstimate:
    """Pointwise intervals plus the simultaneous band on [tL, tU]."""
    point, grid, m_hat, m_rep, sigma = _prepare(ds, z0, control, alpha, tL, tU, fit,
                                                replicates, fit_options)
    lo, hi = _interval(point(grid), m_hat, norm.ppf(1 - alpha / 2) * sigma)
    crit = nearest_rank_quantile(sup_statistics(m_rep, m_hat, sigma), 1 - alpha)
    blo, bhi = _interval(point(grid), m_hat, crit * sigma)
    return replace(point, lower=lo, upper=hi, band_lower=blo, band_upper=bhi, grid=grid,
                   sigma=sigma, critical_value=crit, alpha=alpha)
