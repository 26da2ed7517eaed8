"""Unpenalized maximum pseudo-likelihood estimation by cyclic coordinate Newton."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import norm

from .dataset import Dataset
from .errors import DegenerateColumnError, NoPrimaryEventsError, NumericalError
from .ipcw import WeightSet, precompute_weights
from .scan import LinearPredictorState, _check_eta, make_engine

log = logging.getLogger(__name__)

MAX_HALVINGS = 40


@dataclass
class FitResult:
    coefficients: np.ndarray
    loglik: float
    null_loglik: float
    iterations: int
    converged: bool
    names: tuple[str, ...]
    covariance: np.ndarray | None = None
    loglik_trace: list[float] = field(default_factory=list)
    engine: str = "scan"

    def with_covariance(self, cov) -> "FitResult":
        return replace(self, covariance=np.asarray(cov, dtype=np.float64))


def newton_sweep(engine, state: LinearPredictorState, coords, ll: float):
    """One pass of coordinate Newton steps with step halving.

    Returns (max absolute coefficient change, loglik after the pass).
    """
    max_delta = 0.0
    names = engine.ds.names
    for j in coords:
        ll, g, h = engine.coordinate(state, j)
        if not h > 0.0:
            if abs(g) > 1e-10 * max(1.0, abs(ll)):
                raise DegenerateColumnError(
                    f"covariate {names[j]!r} has zero curvature but score {g:.3g}")
            continue
        step = g / h
        saved = state.copy()
        for _ in range(MAX_HALVINGS):
            try:
                state.beta[j] = saved.beta[j] + step
                state.eta[:] = saved.eta + engine.ds.Z[:, j] * step
                _guard(state)
                new_ll = engine.loglik(state)
            except NumericalError:
                new_ll = -np.inf
            if new_ll >= ll:
                ll = new_ll
                max_delta = max(max_delta, abs(step))
                break
            step *= 0.5
        else:
            state.restore(saved)
    return max_delta, ll


def _guard(state):
    _check_eta(state.eta)
    np.exp(state.eta, out=state.exp_eta)


def null_loglik(ds: Dataset, weights: WeightSet | None = None) -> float:
    """Log-pseudo-likelihood at beta = 0."""
    engine = make_engine("scan", ds, weights)
    return engine.loglik(LinearPredictorState(ds, np.zeros(ds.p)))


def fit_unpenalized(ds: Dataset, tol: float = 1e-6, max_iter: int = 1000, init=None,
                    engine: str = "scan", weights: WeightSet | None = None,
                    force: bool = False) -> FitResult:
    """Maximize the log-pseudo-likelihood.

    One iteration is a full sweep over the coordinates.  Iteration stops
    once the largest coefficient change within a sweep drops below ``tol``;
    hitting ``max_iter`` returns the last iterate with ``converged=False``.
    """
    if ds.n_primary == 0:
        raise NoPrimaryEventsError()
    if ds.p < 1:
        raise ValueError("need at least one covariate")
    if weights is None:
        weights = precompute_weights(ds)
    kw = {"force": force} if engine == "naive" else {}
    eng = make_engine(engine, ds, weights, **kw)
    beta0 = np.zeros(ds.p) if init is None else np.asarray(init, dtype=np.float64)
    null_state = LinearPredictorState(ds, np.zeros(ds.p))
    ll0 = eng.loglik(null_state)
    state = null_state if init is None else LinearPredictorState(ds, beta0)
    ll = ll0 if init is None else eng.loglik(state)
    trace = [ll]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        delta, ll = newton_sweep(eng, state, range(ds.p), ll)
        trace.append(ll)
        if delta < tol:
            converged = True
            break
    if not converged:
        log.warning("fit did not converge in %d sweeps", max_iter)
    return FitResult(
        coefficients=state.beta.copy(),
        loglik=ll,
        null_loglik=ll0,
        iterations=it,
        converged=converged,
        names=ds.names,
        loglik_trace=trace,
        engine=engine,
    )


@dataclass(frozen=True)
class SummaryRow:
    name: str
    coef: float
    exp_coef: float
    se: float | None = None
    z: float | None = None
    p_value: float | None = None
    lower: float | None = None
    upper: float | None = None


def summarize(fit: FitResult, alpha: float | None = None, se: bool = True) -> list[SummaryRow]:
    """Coefficient table; se/z/p need a covariance, CIs need ``alpha``."""
    cov = fit.covariance
    if (se or alpha is not None) and cov is None:
        raise ValueError("fit has no covariance; run the bootstrap first")
    rows = []
    zcrit = norm.ppf(1 - alpha / 2) if alpha is not None else None
    for j, name in enumerate(fit.names):
        b = float(fit.coefficients[j])
        row = dict(name=name, coef=b, exp_coef=float(np.exp(b)))
        if cov is not None and se:
            s = float(np.sqrt(cov[j, j]))
            z = b / s if s > 0 else (0.0 if b == 0 else np.copysign(np.inf, b))
            row.update(se=s, z=z, p_value=float(2 * norm.sf(abs(z))))
            if zcrit is not None:
                row.update(lower=b - zcrit * s, upper=b + zcrit * s)
        rows.append(SummaryRow(**row))
    return rows


def format_summary(fit: FitResult, rows: list[SummaryRow]) -> str:
    lines = [f"Fine-Gray regression ({fit.engine} engine), "
             f"{'converged' if fit.converged else 'stopped'} after {fit.iterations} iterations."]
    head = f"{'':>10} {'coef':>10} {'exp(coef)':>10}"
    if rows and rows[0].se is not None:
        head += f" {'se(coef)':>10} {'z':>9} {'p-value':>9}"
    if rows and rows[0].lower is not None:
        head += f" {'lower':>10} {'upper':>10}"
    lines.append(head)
    for r in rows:
        s = f"{r.name:>10} {r.coef:10.5f} {r.exp_coef:10.3f}"
        if r.se is not None:
            s += f" {r.se:10.4f} {r.z:9.4f} {r.p_value:9.2g}"
        if r.lower is not None:
            s += f" {r.lower:10.5f} {r.upper:10.5f}"
        lines.append(s)
    lines.append("")
    lines.append(f"Pseudo Log-likelihood = {fit.loglik:.6g}")
    lines.append(f"Null Pseudo Log-likelihood = {fit.null_loglik:.6g}")
    return "\n".join(lines)
