import math

import numpy as np
import pytest
from scipy.optimize import bisect

from fgscan.dataset import from_arrays
from fgscan.errors import DegenerateColumnError, NoPrimaryEventsError
from fgscan.fit import FitResult, fit_unpenalized, format_summary, newton_sweep, null_loglik, summarize
from fgscan.ipcw import precompute_weights
from fgscan.scan import LinearPredictorState, scan_all
from fgscan.sim import BETA_STAR, simulate, toy_config

from helpers import random_instance, ref_quantities


def test_three_subject_root(three_subjects):
    ds = three_subjects
    fit = fit_unpenalized(ds, tol=1e-10)
    assert fit.converged

    def score(b):
        return ref_quantities(ds.time, ds.status, ds.Z, [b])[1][0]

    root = bisect(score, -10.0, 0.0, xtol=1e-13)
    assert abs(fit.coefficients[0] - root) <= 1e-5
    assert abs(score(fit.coefficients[0])) <= 1e-6


def test_null_loglik(three_subjects):
    assert null_loglik(three_subjects) == pytest.approx(-math.log(6), abs=1e-12)
    fit = fit_unpenalized(three_subjects)
    assert fit.null_loglik == null_loglik(three_subjects)
    assert fit.loglik >= fit.null_loglik - 1e-8


def test_zero_column():
    rng = np.random.default_rng(0)
    base = random_instance(rng, n=200, p=2)
    ds = from_arrays(base.time, base.status, np.column_stack([base.Z, np.zeros(base.n)]))
    fit = fit_unpenalized(ds)
    assert fit.coefficients[2] == 0.0


def test_score_small_at_optimum():
    rng = np.random.default_rng(1)
    for _ in range(5):
        ds = random_instance(rng, n=300, p=4)
        fit = fit_unpenalized(ds)
        assert fit.converged
        g = scan_all(ds, precompute_weights(ds), fit.coefficients).gradient
        assert np.max(np.abs(g)) <= 1e-4
        assert fit.loglik >= fit.null_loglik - 1e-8


def test_monotone_ascent():
    rng = np.random.default_rng(2)
    ds = random_instance(rng, n=400, p=5)
    fit = fit_unpenalized(ds, tol=1e-9)
    tr = np.array(fit.loglik_trace)
    assert np.all(np.diff(tr) >= 0)
    assert tr[0] == fit.null_loglik and tr[-1] == fit.loglik


def test_permutation_invariance():
    rng = np.random.default_rng(3)
    ds = random_instance(rng, n=300, p=3)
    fit = fit_unpenalized(ds)
    perm = rng.permutation(ds.n)
    shuffled = from_arrays(ds.time[perm], ds.status[perm], ds.Z[perm])
    fit2 = fit_unpenalized(shuffled)
    assert np.max(np.abs(fit.coefficients - fit2.coefficients)) <= 1e-10


def test_scaling_covariance():
    rng = np.random.default_rng(4)
    ds = random_instance(rng, n=300, p=3)
    fit = fit_unpenalized(ds, tol=1e-12)
    for c in (0.1, 7.5):
        Z = ds.Z.copy()
        Z[:, 1] *= c
        fit2 = fit_unpenalized(from_arrays(ds.time, ds.status, Z), tol=1e-12)
        expect = fit.coefficients.copy()
        expect[1] /= c
        assert np.allclose(fit2.coefficients, expect, rtol=0, atol=1e-8)


def test_engines_agree():
    rng = np.random.default_rng(5)
    ds = random_instance(rng, n=400, p=4)
    a = fit_unpenalized(ds, engine="scan")
    b = fit_unpenalized(ds, engine="naive")
    assert np.max(np.abs(a.coefficients - b.coefficients)) <= 1e-6


def test_not_converged_flag():
    rng = np.random.default_rng(6)
    ds = random_instance(rng, n=200, p=4)
    fit = fit_unpenalized(ds, max_iter=1)
    assert not fit.converged and fit.iterations == 1
    assert np.all(np.isfinite(fit.coefficients))


def test_warm_start_same_fixed_point():
    rng = np.random.default_rng(7)
    ds = random_instance(rng, n=300, p=3)
    cold = fit_unpenalized(ds, tol=1e-10)
    warm = fit_unpenalized(ds, tol=1e-10, init=cold.coefficients + 0.05)
    assert np.allclose(cold.coefficients, warm.coefficients, atol=1e-8)


def test_errors():
    ds = from_arrays([1.0, 2.0], [0, 2], [[0.0], [1.0]], require_primary=False)
    with pytest.raises(NoPrimaryEventsError):
        fit_unpenalized(ds)
    ds = from_arrays([1.0, 2.0], [1, 2], np.zeros((2, 0)))
    with pytest.raises(ValueError):
        fit_unpenalized(ds)


class _FlatEngine:
    """Engine stub reporting zero curvature with a nonzero score."""

    def __init__(self, ds):
        self.ds = ds

    def coordinate(self, state, j):
        return -1.0, 0.5, 0.0


def test_degenerate_column_named():
    ds = from_arrays([1.0, 2.0], [1, 1], [[0.0], [1.0]], names=["age"])
    state = LinearPredictorState(ds, [0.0])
    with pytest.raises(DegenerateColumnError, match="age"):
        newton_sweep(_FlatEngine(ds), state, [0], -1.0)


def _fit(coef, se):
    coef = np.atleast_1d(np.asarray(coef, dtype=float))
    cov = np.diag(np.atleast_1d(se) ** 2)
    return FitResult(coef, -1.0, -2.0, 3, True, tuple(f"z{j+1}" for j in range(coef.size)), cov)


def test_summary_arithmetic():
    (r,) = summarize(_fit(0.0, 1.0))
    assert r.z == 0.0 and r.p_value == 1.0
    (r,) = summarize(_fit(1.96, 1.0))
    assert r.p_value == pytest.approx(0.05, abs=1e-4)
    (r,) = summarize(_fit(0.5, 0.1), alpha=0.05)
    assert r.lower == pytest.approx(0.5 - 1.959964 * 0.1, abs=1e-6)
    assert r.upper == pytest.approx(0.5 + 1.959964 * 0.1, abs=1e-6)
    assert round(r.lower, 3) == 0.304 and round(r.upper, 3) == 0.696
    assert r.exp_coef == pytest.approx(math.exp(0.5))
    text = format_summary(_fit(0.5, 0.1), [r])
    assert "Pseudo Log-likelihood" in text and "Null Pseudo Log-likelihood" in text


def test_summary_requires_covariance():
    fit = FitResult(np.array([0.1]), -1.0, -2.0, 1, True, ("z1",))
    with pytest.raises(ValueError, match="covariance"):
        summarize(fit)
    (r,) = summarize(fit, se=False)
    assert r.se is None and r.coef == 0.1


@pytest.mark.slow
def test_monte_carlo_calibration():
    reps = 100
    est = np.array([fit_unpenalized(simulate(toy_config(500, seed=s))).coefficients
                    for s in range(reps)])
    truth = np.array(BETA_STAR)
    # joint 95% band from the replicate estimates (Bonferroni over ten coefficients)
    a = 0.05 / truth.size
    lo, hi = np.quantile(est, [a / 2, 1 - a / 2], axis=0)
    assert np.all((lo <= truth) & (truth <= hi))
