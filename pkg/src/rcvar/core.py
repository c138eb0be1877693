"""Data containers, design generation and dense least-squares primitives.

Everything here is immutable after construction and deterministic given
a ``numpy.random.Generator``; the estimators in :mod:`rcvar.estimators`
are assembled from these pieces.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import scipy.linalg
from scipy.signal import lfilter

from .errors import ConfigurationError, DegenerateInputError, SingularFitError

#: Relative singular-value floor below which a design counts as singular.
SINGULAR_RTOL = 1e-10


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def index_set(indices: Iterable[int], p: Optional[int] = None) -> tuple:
    """Normalise ``indices`` into a strictly increasing tuple of ints.

    Raises ConfigurationError on negative indices or indices >= ``p``.
    """
    out = tuple(sorted({int(i) for i in indices}))
    if out and out[0] < 0:
        raise ConfigurationError(f"negative column index {out[0]}")
    if p is not None and out and out[-1] >= p:
        raise ConfigurationError(f"column index {out[-1]} out of range for p={p}")
    return out


@dataclass(frozen=True)
class Dataset:
    """Design matrix ``X`` (n x p, rows are observations) and response ``y``.

    ``keep`` lists columns that selectors must always include.
    """

    X: np.ndarray
    y: np.ndarray
    labels: tuple = ()
    keep: tuple = ()

    def __post_init__(self):
        X = np.array(self.X, dtype=float, order="C")
        y = np.array(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise ConfigurationError("X must be a two-dimensional array")
        if X.shape[0] != y.shape[0]:
            raise ConfigurationError(
                f"X has {X.shape[0]} rows but y has length {y.shape[0]}"
            )
        if X.shape[0] < 2:
            raise ConfigurationError("at least two observations are required")
        labels = tuple(str(s) for s in self.labels) or tuple(
            f"x{j}" for j in range(X.shape[1])
        )
        if len(labels) != X.shape[1]:
            raise ConfigurationError(
                f"{len(labels)} labels given for {X.shape[1]} columns"
            )
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "y", _readonly(y))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "keep", index_set(self.keep, X.shape[1]))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def rows(self, idx) -> "Dataset":
        """Sub-dataset on the given observation rows (labels and keep carried)."""
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(self.X[idx], self.y[idx], self.labels, self.keep)

    def with_response(self, y) -> "Dataset":
        return Dataset(self.X, y, self.labels, self.keep)

    @cached_property
    def constant_columns(self) -> tuple:
        """Columns with zero sample variance (e.g. an intercept column)."""
        X = self.X
        return tuple(np.flatnonzero(np.all(X == X[0], axis=0)).tolist())


@dataclass(frozen=True)
class SplitPlan:
    """Partition of observation rows into two halves."""

    first: np.ndarray
    second: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "first", _readonly(np.asarray(self.first, dtype=np.intp)))
        object.__setattr__(self, "second", _readonly(np.asarray(self.second, dtype=np.intp)))

    def swapped(self) -> "SplitPlan":
        return SplitPlan(self.second, self.first)


@dataclass(frozen=True)
class CovarianceSpec:
    """Covariance family of the Gaussian design: identity, equicorrelated or AR(1)."""

    kind: str = "identity"
    rho: float = 0.0

    KINDS = ("identity", "equicorrelated", "ar1")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(
                f"unknown covariance kind {self.kind!r}; expected one of {self.KINDS}"
            )
        if not -1.0 < self.rho < 1.0:
            raise ConfigurationError(f"rho must lie in (-1, 1), got {self.rho}")
        if self.kind == "identity" and self.rho != 0.0:
            object.__setattr__(self, "rho", 0.0)

    @classmethod
    def identity(cls) -> "CovarianceSpec":
        return cls("identity", 0.0)

    @classmethod
    def equicorrelated(cls, rho: float) -> "CovarianceSpec":
        return cls("equicorrelated", rho) if rho != 0 else cls.identity()

    @classmethod
    def ar1(cls, rho: float) -> "CovarianceSpec":
        return cls("ar1", rho) if rho != 0 else cls.identity()

    def validate(self, p: int) -> None:
        if self.kind == "equicorrelated" and p > 1 and self.rho <= -1.0 / (p - 1):
            raise ConfigurationError(
                f"equicorrelation {self.rho} is not positive definite for p={p}"
            )

    def matrix(self, p: int, indices: Optional[Sequence[int]] = None) -> np.ndarray:
        """Population covariance, optionally restricted to ``indices``."""
        self.validate(p)
        idx = np.arange(p) if indices is None else np.asarray(indices, dtype=int)
        if self.kind == "identity":
            return np.eye(len(idx))
        if self.kind == "equicorrelated":
            S = np.full((len(idx), len(idx)), self.rho)
            np.fill_diagonal(S, 1.0)
            return S
        return self.rho ** np.abs(idx[:, None] - idx[None, :]).astype(float)


@dataclass(frozen=True)
class OlsFit:
    """Least-squares refit of ``y`` on the columns ``indices``.

    ``ridge`` is zero for an ordinary fit and the ridge parameter when the
    singular-design fallback was used.
    """

    indices: tuple
    coefficients: np.ndarray
    rss: float
    df_resid: int
    fitted: np.ndarray
    ridge: float = 0.0
    _gram_inv: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    _r: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    _perm: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def ridge_used(self) -> bool:
        return self.ridge > 0

    @cached_property
    def gram_inverse(self) -> np.ndarray:
        """``(X_M^T X_M)^{-1}`` (ridge-augmented when the fallback was used)."""
        if self._gram_inv is not None:
            return self._gram_inv
        k = len(self.indices)
        if k == 0:
            return np.zeros((0, 0))
        Rinv = scipy.linalg.solve_triangular(self._r, np.eye(k))
        G = Rinv @ Rinv.T
        inv_perm = np.empty(k, dtype=int)
        inv_perm[self._perm] = np.arange(k)
        return G[np.ix_(inv_perm, inv_perm)]


def ridge_parameter(data: Dataset, M: Sequence[int]) -> float:
    """Default ridge level ``1e-6 * trace(X_M^T X_M) / |M|`` for singular refits."""
    M = index_set(M, data.p)
    if not M:
        return 0.0
    XM = data.X[:, M]
    return 1e-6 * float(np.einsum("ij,ij->", XM, XM)) / len(M)


def ols_fit(data: Dataset, M: Iterable[int], ridge: Optional[float] = None) -> OlsFit:
    """Least-squares fit of ``data.y`` on the raw columns ``M``.

    Uses a column-pivoted QR factorisation. When the design is rank
    deficient (smallest singular value below ``1e-10`` times the largest)
    a :class:`SingularFitError` is raised, unless ``ridge`` is given, in
    which case the ridge-regularised solution is returned and flagged.
    """
    M = index_set(M, data.p)
    n, k = data.n, len(M)
    y = data.y
    if k >= n:
        raise ConfigurationError(f"model size {k} must be smaller than n={n}")
    if k == 0:
        return OlsFit((), np.zeros(0), float(y @ y), n, np.zeros(n))
    XM = data.X[:, M]
    if ridge is not None and ridge > 0:
        G = XM.T @ XM + ridge * np.eye(k)
        Ginv = np.linalg.inv(G)
        coef = Ginv @ (XM.T @ y)
        fitted = XM @ coef
        resid = y - fitted
        return OlsFit(M, coef, float(resid @ resid), n - k, fitted, float(ridge), _gram_inv=Ginv)
    Q, R, perm = scipy.linalg.qr(XM, mode="economic", pivoting=True)
    sv = np.linalg.svd(R, compute_uv=False)
    cond = sv[-1] / sv[0] if sv[0] > 0 else 0.0
    if cond < SINGULAR_RTOL:
        raise SingularFitError(M, cond)
    z = scipy.linalg.solve_triangular(R, Q.T @ y)
    coef = np.empty(k)
    coef[perm] = z
    fitted = Q @ (Q.T @ y)
    resid = y - fitted
    return OlsFit(M, coef, float(resid @ resid), n - k, fitted, 0.0, _r=R, _perm=perm)


def split_even(n: int, rng: np.random.Generator) -> SplitPlan:
    """Uniformly random split of ``range(n)`` into halves of sizes ceil(n/2), floor(n/2)."""
    if n < 4:
        raise ConfigurationError(f"cannot split n={n} observations into refittable halves")
    perm = rng.permutation(n)
    h = (n + 1) // 2
    return SplitPlan(np.sort(perm[:h]), np.sort(perm[h:]))


def sample_correlation(x, y) -> float:
    """Centered (Pearson) sample correlation of two vectors."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape or x.size < 2:
        raise ConfigurationError("correlation needs two vectors of equal length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(xc @ xc)
    sy = math.sqrt(yc @ yc)
    if sx == 0 or sy == 0:
        raise DegenerateInputError("correlation of a constant vector is undefined")
    return float(np.clip((xc @ yc) / (sx * sy), -1.0, 1.0))


def column_correlations(X: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Pearson correlation of every column of ``X`` with ``v``; constant columns give 0."""
    v = np.asarray(v, dtype=float)
    vc = v - v.mean()
    sv = math.sqrt(vc @ vc)
    if sv == 0:
        raise DegenerateInputError("correlation with a constant vector is undefined")
    Xc = X - X.mean(axis=0)
    sx = np.sqrt(np.einsum("ij,ij->j", Xc, Xc))
    num = Xc.T @ vc
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(sx > 0, num / (sx * sv), 0.0)
    return np.clip(r, -1.0, 1.0)


def min_eigenvalue_gram(data: Dataset, M: Iterable[int]) -> float:
    """Smallest eigenvalue of ``X_M^T X_M / n`` (refit conditioning diagnostic)."""
    M = index_set(M, data.p)
    if len(M) > data.n:
        raise ConfigurationError(f"model size {len(M)} exceeds n={data.n}")
    if not M:
        return math.inf
    XM = data.X[:, M]
    return float(np.linalg.eigvalsh(XM.T @ XM / data.n)[0])


def generate_design(n: int, p: int, cov: CovarianceSpec, rng: np.random.Generator) -> np.ndarray:
    """Draw an ``n x p`` Gaussian design with unit marginal variances.

    Equicorrelated rows use a shared factor, ``sqrt(rho) Z0 + sqrt(1 - rho) Zj``;
    AR(1) rows use the stationary recursion
    ``X_j = rho X_{j-1} + sqrt(1 - rho^2) Z_j``.
    """
    if n < 1 or p < 1:
        raise ConfigurationError(f"design dimensions must be positive, got {n}x{p}")
    cov.validate(p)
    rho = cov.rho
    if cov.kind == "identity":
        return rng.standard_normal((n, p))
    if cov.kind == "equicorrelated":
        if rho >= 0:
            z0 = rng.standard_normal((n, 1))
            Z = rng.standard_normal((n, p))
            return math.sqrt(rho) * z0 + math.sqrt(1.0 - rho) * Z
        # negative equicorrelation: shrink towards the row mean instead of a shared factor
        Z = rng.standard_normal((n, p))
        t = (-1.0 + math.sqrt(1.0 + p * rho / (1.0 - rho))) / p
        return math.sqrt(1.0 - rho) * (Z + t * Z.sum(axis=1, keepdims=True))
    Z = rng.standard_normal((n, p))
    c = math.sqrt(1.0 - rho * rho)
    Z[:, 0] /= c
    return lfilter([c], [1.0, -rho], Z, axis=1)


def simulate_response(
    X: np.ndarray,
    beta: Mapping[int, float],
    sigma: float,
    rng: np.random.Generator,
    noise: str = "gaussian",
) -> np.ndarray:
    """Return ``y = X beta + eps`` with ``eps`` i.i.d. N(0, sigma^2)."""
    n, p = X.shape
    if noise != "gaussian":
        raise ConfigurationError(f"unsupported noise law {noise!r}")
    if sigma < 0:
        raise ConfigurationError("sigma must be non-negative")
    idx = np.fromiter(beta.keys(), dtype=int, count=len(beta))
    if idx.size and (idx.min() < 0 or idx.max() >= p):
        raise ConfigurationError(f"coefficient index out of range for p={p}")
    signal = X[:, idx] @ np.fromiter(beta.values(), dtype=float, count=len(beta)) if idx.size else np.zeros(n)
    return signal + sigma * rng.standard_normal(n)


def stream_key(name) -> int:
    """Stable integer key for a named random stream."""
    if isinstance(name, (int, np.integer)):
        return int(name)
    return zlib.crc32(str(name).encode())


def derive_rng(seed: int, *key) -> np.random.Generator:
    """Counter-based generator for ``(seed, *key)``.

    The same key always yields the same stream, independent of the order in
    which streams are requested or which worker requests them.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(stream_key(k) for k in key))
    return np.random.default_rng(ss)


def standardize_columns(X: np.ndarray):
    """Center columns and scale them to Euclidean norm sqrt(n).

    Returns ``(Xs, center, scale)`` with ``Xs`` in Fortran order; constant
    columns get ``scale = 0`` and an all-zero standardized column.
    """
    n = X.shape[0]
    center = X.mean(axis=0)
    Xs = np.asfortranarray(X - center)
    scale = np.sqrt(np.einsum("ij,ij->j", Xs, Xs) / n)
    tiny = scale <= 1e-12 * np.maximum(1.0, np.abs(center))
    scale[tiny] = 0.0
    inv = np.where(tiny, 0.0, 1.0 / np.where(tiny, 1.0, scale))
    Xs *= inv
    return Xs, center, scale
