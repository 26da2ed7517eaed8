"""Nonparametric bootstrap: resampling, coefficient covariance, Wald intervals.

Replicate b draws from its own generator seeded by ``(seed, b, attempt)``,
so results depend only on the master seed and the replicate index, never
on how many workers ran or in which order they finished.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .dataset import Dataset, from_arrays
from .errors import BootstrapError, NoPrimaryEventsError
from .fit import fit_unpenalized

log = logging.getLogger(__name__)

MAX_REDRAWS = 10
MAX_SKIP_FRACTION = 0.2


@dataclass(frozen=True)
class BootstrapControl:
    B: int = 100
    seed: int = 2019
    sample_fraction: float = 1.0
    jobs: int = 1

    def __post_init__(self):
        if self.B < 2:
            raise ValueError("B must be at least 2")
        if not 0 < self.sample_fraction <= 1:
            raise ValueError("sample_fraction must lie in (0, 1]")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass(frozen=True)
class CovarianceEstimate:
    matrix: np.ndarray
    replicate_coefs: np.ndarray
    skipped: int = 0


def replicate_rng(seed: int, b: int, attempt: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), b, attempt]))


def resample(ds: Dataset, rng: np.random.Generator, sample_fraction: float = 1.0,
             require_primary: bool = True) -> Dataset:
    """Draw subjects with replacement and return the canonicalized resample."""
    m = max(1, int(round(sample_fraction * ds.n)))
    idx = rng.integers(0, ds.n, size=m)
    return from_arrays(ds.time[idx], ds.status[idx], ds.Z[idx], names=ds.names,
                       require_primary=require_primary)


def draw_replicate(ds: Dataset, control: BootstrapControl, b: int) -> Dataset | None:
    """Resample for replicate b, redrawing when no primary event is drawn.

    Returns None after ``MAX_REDRAWS`` failed redraws.
    """
    for attempt in range(MAX_REDRAWS + 1):
        try:
            return resample(ds, replicate_rng(control.seed, b, attempt), control.sample_fraction)
        except NoPrimaryEventsError:
            continue
    log.warning("bootstrap replicate %d skipped: no primary events in %d draws",
                b, MAX_REDRAWS + 1)
    return None


def map_replicates(func, B: int, jobs: int = 1) -> list:
    """Evaluate ``func(b)`` for b in range(B); output is ordered by b."""
    if jobs == 1:
        return [func(b) for b in range(B)]
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(func, range(B)))


def run_replicates(ds: Dataset, control: BootstrapControl, statistic) -> tuple[list, int]:
    """Apply ``statistic(resample)`` to every usable replicate.

    Returns the non-skipped results (in replicate order) and the skip count;
    raises BootstrapError when more than 20% of replicates are unusable.
    """
    def one(b):
        rep = draw_replicate(ds, control, b)
        return None if rep is None else statistic(rep)

    out = map_replicates(one, control.B, control.jobs)
    kept = [r for r in out if r is not None]
    skipped = control.B - len(kept)
    if skipped > MAX_SKIP_FRACTION * control.B:
        raise BootstrapError(
            f"{skipped} of {control.B} bootstrap replicates had no primary events")
    if len(kept) < 2:
        raise BootstrapError("fewer than two usable bootstrap replicates")
    return kept, skipped


def covariance_from_replicates(coefs) -> np.ndarray:
    """Sample covariance of replicate rows, denominator B - 1."""
    coefs = np.asarray(coefs, dtype=np.float64)
    B = coefs.shape[0]
    dev = coefs - coefs.mean(axis=0)
    cov = dev.T @ dev / (B - 1)
    return 0.5 * (cov + cov.T)


def bootstrap_covariance(ds: Dataset, control: BootstrapControl, fit_options: dict | None = None,
                         init=None) -> CovarianceEstimate:
    """Covariance of coefficient estimates over bootstrap refits.

    ``init`` (typically the full-data estimate) warm-starts every refit.
    """
    opts = dict(fit_options or {})
    if init is not None:
        opts["init"] = init

    def stat(rep):
        return fit_unpenalized(rep, **opts).coefficients

    coefs, skipped = run_replicates(ds, control, stat)
    arr = np.vstack(coefs)
    return CovarianceEstimate(covariance_from_replicates(arr), arr, skipped)


def wald_intervals(coefs, cov, alpha: float = 0.05):
    """``coef +/- z_{1-alpha/2} * sqrt(diag(cov))`` as (lower, upper) arrays."""
    coefs = np.asarray(coefs, dtype=np.float64)
    var = np.diag(np.atleast_2d(np.asarray(cov, dtype=np.float64)))
    if np.any(var < 0):
        raise ValueError("negative variance on covariance diagonal")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    half = norm.ppf(1 - alpha / 2) * np.sqrt(var)
    return coefs - half, coefs + half
