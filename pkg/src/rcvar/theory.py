"""Monte Carlo checks of the asymptotic claims behind the estimators.

Spurious correlation (extreme sample correlations and their Gumbel limit),
moments of quadratic forms in i.i.d. noise, and normal limit laws of
standardized variance estimates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import stats

from .core import column_correlations, derive_rng
from .errors import ConfigurationError

#: Median of the standard Gumbel law, ``-log(log 2)``.
GUMBEL_MEDIAN = -math.log(math.log(2.0))


def _master(rng: Union[np.random.Generator, int]) -> int:
    return int(rng) if isinstance(rng, (int, np.integer)) else int(rng.integers(2**63))


def max_abs_correlation(X: np.ndarray, eps) -> float:
    """``max_j |corr(X_j, eps)|`` with centered (Pearson) correlations."""
    return float(np.max(np.abs(column_correlations(np.asarray(X, dtype=float), np.asarray(eps, dtype=float)))))


def gumbel_centering(q: float) -> float:
    """``d_q = sqrt(2 log q) - log(sqrt(4 pi log q)) / sqrt(2 log q)``."""
    if q <= 1:
        raise ConfigurationError("Gumbel centering needs q > 1")
    L = math.log(q)
    return math.sqrt(2 * L) - math.log(math.sqrt(4 * math.pi * L)) / math.sqrt(2 * L)


@dataclass(frozen=True)
class GumbelQuantities:
    """Limit-law constants for the maximum absolute correlation of ``p`` noise columns."""

    n: int
    p: int
    d_2p: float

    @property
    def scale(self) -> float:
        """Gumbel scale of ``sqrt(n) * gamma_n``: ``1 / sqrt(2 log 2p)``."""
        return 1.0 / math.sqrt(2 * math.log(2 * self.p))

    def t_transform(self, r):
        """``sqrt(n - 2) r / sqrt(1 - r^2)``, Student-t distributed under independence."""
        r = np.asarray(r, dtype=float)
        return math.sqrt(self.n - 2) * r / np.sqrt(1.0 - r * r)

    def quantile(self, u: float) -> float:
        """Predicted ``u``-quantile of ``gamma_n`` from the Gumbel limit."""
        x = -math.log(-math.log(u))
        return (self.d_2p + x * self.scale) / math.sqrt(self.n)

    @property
    def centering(self) -> float:
        """``d_2p / sqrt(n)``, the leading-order location of ``gamma_n``."""
        return self.d_2p / math.sqrt(self.n)


def gumbel_quantities(n: int, p: int) -> GumbelQuantities:
    if p < 2 or n < 3:
        raise ConfigurationError("need p >= 2 and n >= 3")
    return GumbelQuantities(n, p, gumbel_centering(2 * p))


@dataclass(frozen=True)
class ExtremeCorrSummary:
    n: int
    p: int
    samples: np.ndarray
    d_2p: float
    predicted_scale: float

    @property
    def median(self) -> float:
        return float(np.median(self.samples))

    @property
    def predicted_median(self) -> float:
        return gumbel_quantities(self.n, self.p).quantile(0.5)


def _gamma_draw(n: int, p: int, rng: np.random.Generator) -> float:
    X = rng.standard_normal((n, p))
    eps = rng.standard_normal(n)
    return max_abs_correlation(X, eps)


def extreme_correlations(n: int, p: int, reps: int, rng) -> ExtremeCorrSummary:
    """Draw ``reps`` values of ``gamma_n`` for independent Gaussian columns and noise.

    Replication ``r`` uses ``derive_rng(master, "gamma", r)``.
    """
    if reps < 1:
        raise ConfigurationError("reps must be positive")
    master = _master(rng)
    samples = np.array([_gamma_draw(n, p, derive_rng(master, "gamma", r)) for r in range(reps)])
    g = gumbel_quantities(n, p)
    return ExtremeCorrSummary(n, p, samples, g.d_2p, math.sqrt(2 * math.log(p) / n))


@dataclass(frozen=True)
class TailBoundResult:
    empirical: float
    bound: float
    threshold: float
    margin: float

    @property
    def passed(self) -> bool:
        return self.empirical >= self.bound - self.margin


def tail_bound_check(n: int, p: int, c: float, reps: int, rng) -> TailBoundResult:
    """Empirical ``P{gamma_n > sqrt(log(p/c) / (2n))}`` against ``1 - exp(-c)``.

    Passes when the empirical frequency is at least the bound minus three
    binomial standard errors.
    """
    if c <= 0:
        raise ConfigurationError("c must be positive")
    if math.log(p / c) > n + 2:
        raise ConfigurationError("need log(p/c) <= n + 2")
    if reps < 100:
        raise ConfigurationError("need at least 100 replications")
    summary = extreme_correlations(n, p, reps, rng)
    thr = math.sqrt(max(math.log(p / c), 0.0) / (2 * n))
    bound = 1.0 - math.exp(-c)
    margin = 3.0 * math.sqrt(bound * (1 - bound) / reps)
    return TailBoundResult(float(np.mean(summary.samples > thr)), bound, thr, margin)


# --------------------------------------------------------------------------
# quadratic forms


@dataclass(frozen=True)
class NoiseLaw:
    """Mean-zero i.i.d. noise: ``gaussian`` or a two-point law.

    The two-point law puts mass ``q`` on ``-sigma sqrt((1-q)/q)`` and
    ``1 - q`` on ``sigma sqrt(q/(1-q))``.
    """

    kind: str = "gaussian"
    sigma: float = 1.0
    q: float = 0.5

    def __post_init__(self):
        if self.kind not in ("gaussian", "two-point"):
            raise ConfigurationError(f"unknown noise law {self.kind!r}")
        if self.sigma <= 0 or not 0 < self.q < 1:
            raise ConfigurationError("need sigma > 0 and 0 < q < 1")

    @property
    def support(self) -> tuple:
        s, q = self.sigma, self.q
        return (-s * math.sqrt((1 - q) / q), s * math.sqrt(q / (1 - q)))

    @property
    def probabilities(self) -> tuple:
        return (self.q, 1 - self.q)

    @property
    def variance(self) -> float:
        return self.sigma**2

    @property
    def fourth_moment(self) -> float:
        if self.kind == "gaussian":
            return 3 * self.sigma**4
        return sum(w * v**4 for v, w in zip(self.support, self.probabilities))

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "gaussian":
            return self.sigma * rng.standard_normal(size)
        lo, hi = self.support
        return np.where(rng.random(size) < self.q, lo, hi)


def quadratic_form_exact_variance(P: np.ndarray, law: NoiseLaw) -> float:
    """``(E xi^4 - sigma^4) sum P_ii^2 + 2 sigma^4 sum_{i != j} P_ij^2``."""
    P = np.asarray(P, dtype=float)
    d2 = float(np.sum(np.diag(P) ** 2))
    off = float(np.sum(P * P)) - d2
    s4 = law.variance**2
    return (law.fourth_moment - s4) * d2 + 2 * s4 * off


def quadratic_form_enumerated(P: np.ndarray, law: NoiseLaw) -> tuple:
    """Exact ``(mean, variance)`` of ``xi' P xi`` by enumerating a two-point law."""
    if law.kind != "two-point":
        raise ConfigurationError("enumeration needs a two-point law")
    P = np.asarray(P, dtype=float)
    m = P.shape[0]
    vals, probs = law.support, law.probabilities
    m1 = m2 = 0.0
    for combo in itertools.product((0, 1), repeat=m):
        x = np.array([vals[k] for k in combo])
        w = math.prod(probs[k] for k in combo)
        s = float(x @ P @ x)
        m1 += w * s
        m2 += w * s * s
    return m1, m2 - m1 * m1


@dataclass(frozen=True)
class QuadFormReport:
    mean_emp: float
    var_emp: float
    mean_theory: float
    var_bound: float
    var_exact: float
    reps: int

    @property
    def mean_se(self) -> float:
        return math.sqrt(self.var_exact / self.reps)

    @property
    def passed(self) -> bool:
        mean_ok = abs(self.mean_emp - self.mean_theory) <= 4 * self.mean_se + 1e-12
        return mean_ok and self.var_emp <= self.var_bound * 1.1 + 1e-12


def quadratic_form_moments(P, law: NoiseLaw, reps: int, rng: np.random.Generator) -> QuadFormReport:
    """Empirical mean and variance of ``xi' P xi`` against the exact formulas."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or not np.allclose(P, P.T):
        raise ConfigurationError("P must be a symmetric square matrix")
    if reps < 1000:
        raise ConfigurationError("need at least 1000 replications")
    m = P.shape[0]
    xi = law.sample((reps, m), rng)
    S = np.einsum("ri,ij,rj->r", xi, P, xi)
    return QuadFormReport(
        float(S.mean()),
        float(S.var(ddof=1)),
        law.variance * float(np.trace(P)),
        (law.fourth_moment + law.variance**2) * float(np.trace(P @ P)),
        quadratic_form_exact_variance(P, law),
        reps,
    )


def bias_corrected_naive(sigma2_naive: float, gamma_hat: float) -> float:
    """``sigma_n^2 / (1 - gamma_n^2)``: undoes the spurious-fit share of the naive estimate."""
    if not 0 <= gamma_hat < 1:
        raise ConfigurationError("gamma_hat must lie in [0, 1)")
    return sigma2_naive / (1.0 - gamma_hat**2)


# --------------------------------------------------------------------------
# limit laws


@dataclass(frozen=True)
class LimitLawReport:
    method: str
    n: int
    reps: int
    statistic: float
    pvalue: float
    mean: float
    sd: float
    sd_sigma2: float
    has_limit: bool
    level: float = 0.01

    @property
    def passed(self) -> Optional[bool]:
        """KS acceptance at ``level``; None for estimators without a normal limit."""
        return self.pvalue >= self.level if self.has_limit else None

    @property
    def rejects(self) -> bool:
        return self.pvalue < self.level


def standardized(values, n: int, sigma2: float = 1.0, fourth: float = 3.0) -> np.ndarray:
    """``sqrt(n) (s2 - sigma^2) / sqrt(E eps^4 - sigma^4)``."""
    v = np.asarray(values, dtype=float)
    return math.sqrt(n) * (v - sigma2) / math.sqrt(fourth - sigma2**2)


def limit_law_check(method: str, config, reps: Optional[int] = None, level: float = 0.01) -> LimitLawReport:
    """Kolmogorov-Smirnov test of the standardized estimates against N(0, 1).

    ``config`` is an :class:`~rcvar.harness.ExperimentConfig`; ``method`` a
    method tag it understands. Naive methods carry no limit law and are
    reported without a pass criterion.
    """
    from dataclasses import replace

    from .harness import parse_method, run_experiment

    spec = parse_method(method, config)
    cfg = replace(config, methods=(method,), reps=reps or config.reps)
    result = run_experiment(cfg)
    vals = np.array([r.sigma2 for r in result.records if r.method == spec.tag and r.ok])
    sigma2 = cfg.sigma**2
    z = standardized(vals, cfg.n, sigma2, 3 * sigma2**2)
    ks = stats.kstest(z, "norm")
    return LimitLawReport(
        spec.tag,
        cfg.n,
        int(vals.size),
        float(ks.statistic),
        float(ks.pvalue),
        float(z.mean()),
        float(z.std(ddof=1)),
        float(vals.std(ddof=1)),
        spec.estimator != "naive",
        level,
    )
