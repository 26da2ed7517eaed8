"""Penalized Fine-Gray regression along a lambda path.

The objective is ``-l(beta)/n + sum_j pen(|beta_j|)``, minimized by cyclic
coordinate descent.  Each coordinate sees the quadratic model built from
the (scaled) score ``g`` and Hessian diagonal ``h`` and is moved to the
penalized minimizer of that model, ``threshold_update(h*beta_j + g, h)``.
A move that would raise the objective is halved until it does not.

Penalties (gamma is the concavity parameter):

* lasso  ``lam*|b|``
* ridge  ``lam*b**2/2``
* scad   ``lam*|b|`` for ``|b| <= lam``; ``(2*gamma*lam*|b| - b**2 - lam**2)
  / (2*(gamma-1))`` up to ``gamma*lam``; ``lam**2*(gamma+1)/2`` beyond
* mcp    ``lam*|b| - b**2/(2*gamma)`` up to ``gamma*lam``; ``gamma*lam**2/2``
  beyond
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import Dataset
from .errors import DataError, NoPrimaryEventsError, NumericalError
from .ipcw import WeightSet, precompute_weights
from .scan import LinearPredictorState, _check_eta, make_engine

log = logging.getLogger(__name__)

PENALTIES = ("lasso", "ridge", "scad", "mcp")
DEFAULT_GAMMA = {"scad": 3.7, "mcp": 3.0}
FULL_SWEEP_EVERY = 10
MAX_HALVINGS = 40
NONCONVEX_MARGIN = 1.1


@dataclass(frozen=True)
class PenaltySpec:
    kind: str
    lam: float
    gamma: float | None = None

    def __post_init__(self):
        kind = self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in PENALTIES:
            raise ValueError(f"unknown penalty {self.kind!r}; choose from {PENALTIES}")
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.gamma is None and kind in DEFAULT_GAMMA:
            object.__setattr__(self, "gamma", DEFAULT_GAMMA[kind])
        if kind == "scad" and not self.gamma > 2:
            raise ValueError("scad requires gamma > 2")
        if kind == "mcp" and not self.gamma > 1:
            raise ValueError("mcp requires gamma > 1")

    def with_lambda(self, lam: float) -> "PenaltySpec":
        return PenaltySpec(self.kind, lam, self.gamma)


def penalty_value(b: float, pen: PenaltySpec) -> float:
    a = abs(b)
    lam, gam = pen.lam, pen.gamma
    if pen.kind == "lasso":
        return lam * a
    if pen.kind == "ridge":
        return 0.5 * lam * b * b
    if pen.kind == "scad":
        if a <= lam:
            return lam * a
        if a <= gam * lam:
            return (2 * gam * lam * a - a * a - lam * lam) / (2 * (gam - 1))
        return 0.5 * lam * lam * (gam + 1)
    if a <= gam * lam:
        return lam * a - a * a / (2 * gam)
    return 0.5 * gam * lam * lam


def penalty_total(beta, pen: PenaltySpec) -> float:
    return float(sum(penalty_value(float(b), pen) for b in beta))


def _soft(u, lam):
    return math.copysign(max(abs(u) - lam, 0.0), u)


def threshold_update(u: float, h: float, pen: PenaltySpec) -> float:
    """Minimize ``h/2*b**2 - u*b + pen(|b|)`` over b.

    For scad/mcp with curvature too small for the usual closed forms
    (``h <= 1/(gamma-1)`` resp. ``h <= 1/gamma``) the one-dimensional
    problem is nonconvex; the minimizer is then chosen among the
    stationary points of each piece.
    """
    if not h > 0:
        raise ValueError(f"curvature must be positive, got {h}")
    lam, gam = pen.lam, pen.gamma
    if pen.kind == "lasso":
        return _soft(u, lam) / h
    if pen.kind == "ridge":
        return u / (h + lam)
    if pen.kind == "mcp":
        if h > 1.0 / gam:
            if abs(u) <= gam * lam * h:
                return _soft(u, lam) / (h - 1.0 / gam)
            return u / h
    elif pen.kind == "scad":
        if h > 1.0 / (gam - 1):
            if abs(u) <= lam * (1 + h):
                return _soft(u, lam) / h
            if abs(u) <= gam * lam * h:
                return _soft(u, gam * lam / (gam - 1)) / (h - 1.0 / (gam - 1))
            return u / h
    return _nonconvex_min(u, h, pen)


def _nonconvex_min(u, h, pen):
    lam, gam = pen.lam, pen.gamma
    s = 1.0 if u >= 0 else -1.0
    a_u = abs(u)
    cands = [0.0, a_u / h]
    if pen.kind == "mcp":
        cands.append(min(max((a_u - lam) / (h - 1.0 / gam), 0.0), gam * lam)
                     if h != 1.0 / gam else gam * lam)
        cands.append(gam * lam)
    else:
        cands.append(min(max((a_u - lam) / h, 0.0), lam))
        c = h - 1.0 / (gam - 1)
        cands.append(min(max((a_u - gam * lam / (gam - 1)) / c, lam), gam * lam)
                     if c != 0 else gam * lam)
        cands.extend([lam, gam * lam])
    best, best_val = 0.0, 0.0
    for a in cands:
        if not (a >= 0 and math.isfinite(a)):
            continue
        val = 0.5 * h * a * a - a_u * a + penalty_value(a, pen)
        if val < best_val - 1e-300:
            best, best_val = a, val
    return s * best


@dataclass
class PenalizedPath:
    penalty: str
    gamma: float | None
    lambdas: np.ndarray
    coef_matrix: np.ndarray  # p x len(lambdas)
    loglik: np.ndarray
    df: np.ndarray
    bic: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    names: tuple[str, ...]
    n: int
    selected_index: int = -1
    standardized: bool = False
    objective_trace: list[list[float]] = field(default_factory=list, repr=False)

    @property
    def selected_coefficients(self) -> np.ndarray:
        return self.coef_matrix[:, self.selected_index]


def lambda_max(ds: Dataset, weights: WeightSet | None = None) -> float:
    """Smallest lasso lambda at which beta = 0 is optimal."""
    eng = make_engine("scan", ds, weights)
    state = LinearPredictorState(ds, np.zeros(ds.p))
    return max(abs(eng.coordinate(state, j)[1]) for j in range(ds.p)) / ds.n


def log_grid(count: int, lam_min: float, lam_max: float) -> np.ndarray:
    """Descending log-spaced grid from lam_max to lam_min."""
    if count < 1 or not (0 < lam_min <= lam_max):
        raise ValueError("grid needs count >= 1 and 0 < min <= max")
    if count == 1:
        return np.array([lam_max])
    return 10.0 ** np.linspace(np.log10(lam_max), np.log10(lam_min), count)


def _validate_grid(lambdas):
    lambdas = np.asarray(lambdas, dtype=np.float64).reshape(-1)
    if lambdas.size == 0:
        raise ValueError("empty lambda grid")
    if not np.all(np.isfinite(lambdas)) or np.any(lambdas < 0):
        raise ValueError("lambdas must be finite and nonnegative")
    if np.any(lambdas[:-1] == 0):
        raise ValueError("lambda = 0 is only allowed as the last grid point")
    if np.any(np.diff(lambdas) > 0):
        raise ValueError("lambda grid must be sorted in descending order")
    return lambdas


def _curvature(h, pen):
    """Curvature used in the coordinate model.

    For scad/mcp the quadratic model is only convex when h exceeds
    1/(gamma-1) resp. 1/gamma; below that the curvature is raised to
    ``NONCONVEX_MARGIN`` times the floor, which keeps the usual closed-form
    updates (zero whenever |u| <= lam) and shortens the step.  Step halving
    still enforces descent.
    """
    if pen.kind == "mcp":
        return max(h, NONCONVEX_MARGIN / pen.gamma)
    if pen.kind == "scad":
        return max(h, NONCONVEX_MARGIN / (pen.gamma - 1))
    return h


class _Coordinator:
    """Penalized coordinate descent at one lambda, reusing a state."""

    def __init__(self, engine, state, n):
        self.eng = engine
        self.state = state
        self.n = n
        self.Z = engine.ds.Z

    def objective(self, ll, pen):
        return -ll / self.n + penalty_total(self.state.beta, pen)

    def sweep(self, coords, pen, ll, trace=None):
        st, n = self.state, self.n
        max_delta = 0.0
        for j in coords:
            ll, g, h = self.eng.coordinate(st, j)
            g /= n
            h /= n
            bj = st.beta[j]
            if not h > 0.0:
                if abs(g) > 1e-12 and pen.kind != "ridge":
                    raise NumericalError(f"zero curvature for {self.eng.ds.names[j]!r}")
                continue
            h = _curvature(h, pen)
            target = threshold_update(h * bj + g, h, pen)
            step = target - bj
            if step == 0.0:
                continue
            old_pen = penalty_value(bj, pen)
            q_old = -ll / n + old_pen
            saved_eta = st.eta.copy()
            accepted = False
            for _ in range(MAX_HALVINGS):
                new_b = bj + step
                try:
                    st.eta[:] = saved_eta + self.Z[:, j] * step
                    _check_eta(st.eta)
                    np.exp(st.eta, out=st.exp_eta)
                    new_ll = self.eng.loglik(st)
                except NumericalError:
                    new_ll = -np.inf
                if -new_ll / n + penalty_value(new_b, pen) <= q_old:
                    accepted = True
                    break
                step *= 0.5
                # a halved move toward zero keeps the same sign; stop when negligible
                if abs(step) < 1e-15 * max(1.0, abs(bj)):
                    break
            if accepted:
                st.beta[j] = new_b
                ll = new_ll
                max_delta = max(max_delta, abs(step))
            else:
                st.eta[:] = saved_eta
                np.exp(st.eta, out=st.exp_eta)
            if trace is not None:
                trace.append(self.objective(ll, pen))
        return max_delta, ll

    def solve(self, pen, tol, max_iter, ll, trace=None):
        p = self.eng.ds.p
        it = 0
        converged = False
        full = True
        for it in range(1, max_iter + 1):
            if full or it % FULL_SWEEP_EVERY == 0:
                coords = range(p)
                was_full = True
            else:
                coords = np.flatnonzero(self.state.beta != 0.0)
                was_full = False
            delta, ll = self.sweep(coords, pen, ll, trace)
            if delta < tol:
                if was_full:
                    converged = True
                    break
                full = True
            else:
                full = False
        return it, converged, ll


def fit_path(ds: Dataset, penalty: str = "lasso", lambdas=None, gamma: float | None = None,
             tol: float = 1e-6, max_iter: int = 1000, standardize: bool = False,
             engine: str = "scan", weights: WeightSet | None = None,
             record_objective: bool = False) -> PenalizedPath:
    """Fit the penalized model at every lambda, warm-starting down the grid.

    With ``standardize=True`` covariates are scaled to unit standard
    deviation for fitting and coefficients are mapped back to the original
    scale (centering does not change the model).
    """
    if ds.n_primary == 0:
        raise NoPrimaryEventsError()
    lambdas = _validate_grid(lambdas if lambdas is not None else log_grid(25, 0.001, 0.1))
    spec = PenaltySpec(penalty, float(lambdas[0]), gamma)
    work = ds
    scale = np.ones(ds.p)
    if standardize:
        scale = ds.Z.std(axis=0)
        if np.any(scale == 0):
            raise DataError("cannot standardize a constant covariate")
        work = _rescaled(ds, 1.0 / scale)
    if weights is None:
        weights = precompute_weights(work)
    eng = make_engine(engine, work, weights)
    state = LinearPredictorState(work, np.zeros(ds.p))
    ll = eng.loglik(state)
    coord = _Coordinator(eng, state, ds.n)

    L = lambdas.size
    coefs = np.zeros((ds.p, L))
    lls = np.zeros(L)
    iters = np.zeros(L, dtype=np.int64)
    conv = np.zeros(L, dtype=bool)
    traces = []
    for t, lam in enumerate(lambdas):
        pen = spec.with_lambda(float(lam))
        trace = [] if record_objective else None
        iters[t], conv[t], ll = coord.solve(pen, tol, max_iter, ll, trace)
        if not conv[t]:
            log.warning("lambda=%g did not converge in %d iterations", lam, max_iter)
        coefs[:, t] = state.beta / scale
        lls[t] = ll
        if trace is not None:
            traces.append(trace)
    df = np.count_nonzero(coefs, axis=0)
    path = PenalizedPath(
        penalty=spec.kind, gamma=spec.gamma, lambdas=lambdas, coef_matrix=coefs,
        loglik=lls, df=df, bic=-2 * lls + df * np.log(ds.n), iterations=iters,
        converged=conv, names=ds.names, n=ds.n, standardized=standardize,
        objective_trace=traces,
    )
    path.selected_index = bic_select(path)
    return path


def _rescaled(ds: Dataset, factor) -> Dataset:
    Z = np.asfortranarray(ds.Z * factor)
    Z.setflags(write=False)
    return replace(ds, Z=Z)


def bic_select(path: PenalizedPath) -> int:
    """Index minimizing ``-2 loglik + df log n``; ties go to the smallest lambda."""
    bic = np.asarray(path.bic, dtype=np.float64)
    if bic.size == 0:
        raise ValueError("empty path")
    best = bic.min()
    cands = np.flatnonzero(bic == best)
    lams = np.asarray(path.lambdas)[cands]
    return int(cands[np.argmin(lams)])
