"""Two-cause competing-risks generator under the Fine-Gray model.

The cause-1 cumulative incidence is
``F1(t; z) = 1 - (1 - pi*(1 - exp(-t)))**exp(z'b1)``, so
``Pr(cause 1 | z) = 1 - (1 - pi)**exp(z'b1)``.  Given cause 1 the time is
drawn by inverting ``F1(t; z) / F1(inf; z)``; given cause 2 it is
exponential with rate ``exp(z'b2)``.  Censoring is ``U(u_min, u_max)``.

Random numbers come from numpy's PCG64 seeded through ``SeedSequence``;
the design, causes, event times and censoring each get their own child
stream so changing one never shifts another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, from_arrays

ETA_CLAMP = 30.0

# coefficient block used in the package's toy and scaling examples
BETA_STAR = (0.40, -0.40, 0.0, -0.50, 0.0, 0.60, 0.75, 0.0, 0.0, -0.80)


@dataclass(frozen=True)
class SimConfig:
    n: int
    beta1: tuple[float, ...]
    beta2: tuple[float, ...]
    u_min: float = 0.0
    u_max: float = 1.0
    pi: float = 0.5
    seed: int = 0
    rho: float = 0.0
    Z: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta1", tuple(float(b) for b in self.beta1))
        object.__setattr__(self, "beta2", tuple(float(b) for b in self.beta2))
        if self.n < 1:
            raise ValueError("n must be positive")
        if len(self.beta1) != len(self.beta2):
            raise ValueError("beta1 and beta2 must have the same length")
        if not self.u_min < self.u_max:
            raise ValueError("need u_min < u_max")
        if self.u_min < 0:
            raise ValueError("censoring bounds must be nonnegative")
        if not 0 < self.pi < 1:
            raise ValueError("pi must lie in (0, 1)")
        if not -1 < self.rho < 1:
            raise ValueError("rho must lie in (-1, 1)")
        if self.Z is not None:
            Z = np.asarray(self.Z, dtype=np.float64)
            if Z.shape != (self.n, len(self.beta1)):
                raise ValueError(f"Z has shape {Z.shape}, expected ({self.n}, {len(self.beta1)})")
            object.__setattr__(self, "Z", Z)

    @property
    def p(self) -> int:
        return len(self.beta1)


def ar1_design(n: int, p: int, rho: float, rng: np.random.Generator) -> np.ndarray:
    """Standard normal rows with corr(z_i, z_j) = rho**|i-j|."""
    Z = rng.standard_normal((n, p))
    if rho == 0.0 or p == 1:
        return Z
    idx = np.arange(p)
    L = np.linalg.cholesky(rho ** np.abs(idx[:, None] - idx[None, :]))
    return Z @ L.T


def cause1_cdf(t, eta1, pi):
    """Pr(T <= t | cause 1, z) with eta1 = z'beta1."""
    e = np.exp(eta1)
    num = -np.expm1(e * np.log1p(-pi * -np.expm1(-np.asarray(t, dtype=np.float64))))
    den = -np.expm1(e * math.log1p(-pi))
    return num / den


def invert_cause1_cdf(u, eta1, pi):
    """Quantile of the cause-1 conditional time distribution.

    Algebraically ``-log(1 - (1 - (1 - u*(1 - (1-pi)**e))**(1/e)) / pi)``
    with ``e = exp(eta1)``, written with log1p/expm1 to stay accurate when
    e is far from 1.
    """
    u = np.asarray(u, dtype=np.float64)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("u must lie strictly inside (0, 1)")
    e = np.exp(eta1)
    a = -np.expm1(e * math.log1p(-pi))
    inner = -np.expm1(np.log1p(-u * a) / e)
    return -np.log1p(-inner / pi)


def _generate(cfg: SimConfig):
    root = np.random.SeedSequence(cfg.seed)
    s_design, s_cause, s_time, s_cens = (np.random.default_rng(s) for s in root.spawn(4))
    Z = cfg.Z if cfg.Z is not None else ar1_design(cfg.n, cfg.p, cfg.rho, s_design)
    b1 = np.array(cfg.beta1)
    b2 = np.array(cfg.beta2)
    eta1 = Z @ b1
    eta2 = Z @ b2
    clamped = np.abs(eta1) > ETA_CLAMP
    eta1c = np.clip(eta1, -ETA_CLAMP, ETA_CLAMP)

    p2 = np.exp(np.exp(eta1c) * math.log1p(-cfg.pi))
    cause = 1 + (s_cause.random(cfg.n) < p2).astype(np.int64)

    u = s_time.random(cfg.n)
    # random() is in [0, 1); keep the inversion away from u = 0
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    std_exp = s_time.standard_exponential(cfg.n)
    T = np.empty(cfg.n)
    c1 = cause == 1
    T[c1] = invert_cause1_cdf(u[c1], eta1c[c1], cfg.pi)
    T[~c1] = std_exp[~c1] / np.exp(eta2[~c1])
    T = np.maximum(T, np.finfo(float).tiny)
    C = s_cens.uniform(cfg.u_min, cfg.u_max, cfg.n)
    X = np.minimum(T, C)
    status = np.where(T <= C, cause, 0)
    if np.any(X <= 0):
        # only reachable with u_min = 0 and a zero censoring draw
        X = np.maximum(X, np.finfo(float).tiny)
    return X, status, Z, int(np.count_nonzero(clamped))


def simulate(cfg: SimConfig) -> Dataset:
    X, status, Z, _ = _generate(cfg)
    return from_arrays(X, status, Z, require_primary=False)


def simulate_with_report(cfg: SimConfig) -> tuple[Dataset, dict]:
    X, status, Z, clamps = _generate(cfg)
    ds = from_arrays(X, status, Z, require_primary=False)
    report = {
        "n": cfg.n,
        "p": cfg.p,
        "status_counts": {str(k): v for k, v in ds.status_counts().items()},
        "clamp_events": clamps,
        "config": {
            "beta1": list(cfg.beta1),
            "beta2": list(cfg.beta2),
            "u_min": cfg.u_min,
            "u_max": cfg.u_max,
            "pi": cfg.pi,
            "rho": cfg.rho,
            "seed": cfg.seed,
            "design": "supplied" if cfg.Z is not None else "ar1_normal",
        },
    }
    return ds, report


def toy_config(n: int = 500, seed: int = 0, **kw) -> SimConfig:
    """Ten covariates, beta2 = -beta1, U(0, 1) censoring, pi = 0.5."""
    b1 = BETA_STAR
    return SimConfig(n=n, beta1=b1, beta2=tuple(-b for b in b1), seed=seed, **kw)


# U(0, 1.75) gives roughly a third censored under the sparse p = 100 design
SCALING_U_MAX = 1.75


def scaling_config(n: int, p: int = 100, seed: int = 0, sparse: bool = True,
                   u_max: float = SCALING_U_MAX) -> SimConfig:
    """AR(1) design with rho = 0.5.

    ``sparse=True`` puts the ten-coefficient block first and zeros after it;
    otherwise the block is repeated to fill p.
    """
    if sparse:
        b1 = (BETA_STAR + (0.0,) * p)[:p]
    else:
        b1 = tuple(BETA_STAR[j % 10] for j in range(p))
    return SimConfig(n=n, beta1=b1, beta2=tuple(-b for b in b1), u_min=0.0,
                     u_max=u_max, pi=0.5, seed=seed, rho=0.5)
