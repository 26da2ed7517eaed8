"""Kaplan-Meier censoring survival and inverse-probability-of-censoring weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import CAUSE2, CENSORED, Dataset
from .errors import ZeroDenominatorError


@dataclass(frozen=True)
class CensoringSurvival:
    """Step function G(t) = estimated Pr(C >= t).

    ``values[k]`` is the value on ``(jump_times[k-1], jump_times[k]]`` with
    ``jump_times[-1] := 0``; ``values[0] == 1``.  Evaluation uses the strict
    product over censoring times ``c < t``, so each piece is closed on the
    right.
    """

    jump_times: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.values[np.searchsorted(self.jump_times, t, side="left")]


def censoring_km(ds: Dataset) -> CensoringSurvival:
    """Product-limit estimate of the censoring survival function.

    Censorings are the events; primary and competing events act as
    censored-for-G.  At a time shared by events and censorings the events
    leave the censoring risk set first.
    """
    t_asc = ds.time[::-1]
    cens = t_asc[ds.status[::-1] == CENSORED]
    if cens.size == 0:
        return CensoringSurvival(np.empty(0), np.ones(1))
    c, d = np.unique(cens, return_counts=True)
    # subjects with time > c_j, plus the d_j censored at c_j
    at_risk = t_asc.size - np.searchsorted(t_asc, c, side="right") + d
    factors = (at_risk - d) / at_risk  # exact integer ratio, correctly rounded
    values = np.concatenate(([1.0], np.cumprod(factors)))
    return CensoringSurvival(c, values)


@dataclass(frozen=True)
class WeightSet:
    """Per-subject factors making the IPCW weights separable.

    For an event at position i and a competing event k with X_k < X_i,
    the weight is ``G_at_X[i] * inv_G_at_X[k]``.  ``inv_G_at_X`` is NaN for
    subjects without a competing event; ``backward_factor`` is the same
    array with zeros there, which is what the scans consume.
    """

    G_at_X: np.ndarray
    inv_G_at_X: np.ndarray
    G: CensoringSurvival

    @property
    def backward_factor(self) -> np.ndarray:
        return np.nan_to_num(self.inv_G_at_X, nan=0.0)

    def weight(self, ds: Dataset, i: int, k: int) -> float:
        """IPCW weight of subject k in the risk set of position i (0 outside it)."""
        if ds.time[k] >= ds.time[i]:
            return 1.0
        if ds.status[k] == CAUSE2:
            return float(self.G_at_X[i] * self.inv_G_at_X[k])
        return 0.0


def precompute_weights(ds: Dataset, G: CensoringSurvival | None = None) -> WeightSet:
    if G is None:
        G = censoring_km(ds)
    g = G(ds.time)
    c2 = ds.status == CAUSE2
    if np.any(g[c2] <= 0.0):
        k = int(np.flatnonzero(c2 & (g <= 0.0))[0])
        raise ZeroDenominatorError(
            f"censoring survival is zero at competing event time {ds.time[k]:g}; "
            "no censoring-time support beyond it")
    inv = np.full(ds.n, np.nan)
    inv[c2] = 1.0 / g[c2]
    g.setflags(write=False)
    inv.setflags(write=False)
    return WeightSet(G_at_X=g, inv_G_at_X=inv, G=G)
