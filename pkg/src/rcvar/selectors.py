"""Stage-one variable selection: SIS, ISIS, forward stepwise, LASSO and SCAD.

Selectors work on standardized columns (centered, norm sqrt(n)); the
implicit intercept this centering introduces is reported on the raw scale.
The LASSO objective is ``(1/n) ||y - X b||^2 + lam * ||b||_1`` and SCAD
minimises ``(1/n) ||y - X b||^2 + 2 * sum_j rho_lam(|b_j|)``; in both cases
``lam`` multiplies standardized coefficients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernels
from .core import Dataset, column_correlations, index_set, standardize_columns
from .errors import ConfigurationError

DEFAULT_TOL = 1e-7
DEFAULT_MAX_ITER = 100_000
DEFAULT_N_LAMBDA = 100
DEFAULT_LAMBDA_RATIO = 1e-3


class SelectionWarning(UserWarning):
    """A selector returned fewer columns than requested."""


# --------------------------------------------------------------------------
# specifications and results


@dataclass(frozen=True)
class SelectorSpec:
    """Closed description of a selection procedure and its tuning.

    Build instances with the class-method constructors (``SelectorSpec.sis(5)``,
    ``SelectorSpec.lasso(folds=10)``, ...). For ``lasso`` and ``scad`` a
    positive ``s`` replaces cross-validation by walking the lambda path to
    the first model with at least ``s`` penalized columns; a fixed ``lam``
    skips tuning altogether.
    """

    kind: str
    s: int = 0
    steps: int = 2
    lambdas: Optional[tuple] = None
    folds: int = 10
    a: float = 3.7
    lam: Optional[float] = None
    indices: tuple = ()

    KINDS = ("sis", "isis", "stepwise", "lasso", "scad", "fixed")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown selector kind {self.kind!r}")
        if self.kind in ("sis", "isis", "stepwise") and self.s < 1:
            raise ConfigurationError(f"{self.kind} needs a model size s >= 1")
        if self.s < 0:
            raise ConfigurationError("model size must be non-negative")
        if self.kind == "isis" and self.steps < 1:
            raise ConfigurationError("isis needs at least one step")
        if self.a <= 2:
            raise ConfigurationError(f"SCAD shape a must exceed 2, got {self.a}")
        if self.lambdas is not None:
            lam = tuple(float(v) for v in self.lambdas)
            if not lam:
                raise ConfigurationError("lambda grid is empty")
            if lam[-1] <= 0 or any(b >= a for a, b in zip(lam, lam[1:])):
                raise ConfigurationError("lambda grid must be positive and strictly decreasing")
            object.__setattr__(self, "lambdas", lam)
        if self.lam is not None and self.lam <= 0:
            raise ConfigurationError("lambda must be positive")
        if self.kind in ("lasso", "scad") and self.folds < 2:
            raise ConfigurationError("cross-validation needs at least two folds")
        object.__setattr__(self, "indices", index_set(self.indices))

    @classmethod
    def sis(cls, s: int) -> "SelectorSpec":
        return cls("sis", s=s)

    @classmethod
    def isis(cls, s: int, steps: int = 2) -> "SelectorSpec":
        return cls("isis", s=s, steps=steps)

    @classmethod
    def stepwise(cls, s: int) -> "SelectorSpec":
        return cls("stepwise", s=s)

    @classmethod
    def lasso(cls, lambdas=None, folds: int = 10, lam=None, s: int = 0) -> "SelectorSpec":
        return cls("lasso", s=s, lambdas=lambdas, folds=folds, lam=lam)

    @classmethod
    def scad(cls, lambdas=None, folds: int = 10, a: float = 3.7, lam=None, s: int = 0) -> "SelectorSpec":
        return cls("scad", s=s, lambdas=lambdas, folds=folds, a=a, lam=lam)

    @classmethod
    def fixed(cls, indices=()) -> "SelectorSpec":
        return cls("fixed", indices=tuple(indices))

    def with_size(self, s: int) -> "SelectorSpec":
        if s == 0 and self.kind in ("sis", "isis", "stepwise"):
            return SelectorSpec.fixed(())
        return replace(self, s=s)


@dataclass(frozen=True)
class LassoFit:
    """Penalized fit at a single lambda, coefficients on the raw column scale."""

    lam: float
    coefficients: np.ndarray
    intercept: float
    support: tuple
    n_iterations: int
    converged: bool
    std_coefficients: np.ndarray = field(repr=False)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return X @ self.coefficients + self.intercept


@dataclass(frozen=True)
class ScadFit(LassoFit):
    """SCAD fit computed by local linear approximation from the LASSO start."""

    a: float = 3.7
    objective_path: tuple = ()
    outer_iterations: int = 0


@dataclass(frozen=True)
class LassoPath:
    lambdas: np.ndarray
    fits: tuple

    def __len__(self):
        return len(self.fits)


@dataclass(frozen=True)
class CvResult:
    """Cross-validated tuning: chosen lambda, refit on all data, CV curve."""

    lam: float
    fit: LassoFit
    lambdas: np.ndarray
    errors: np.ndarray
    fold_ids: np.ndarray

    @property
    def cv_curve(self) -> list:
        return list(zip(self.lambdas.tolist(), self.errors.tolist()))

    @property
    def min_error(self) -> float:
        return float(self.errors.min())


@dataclass(frozen=True)
class Selection:
    """Outcome of :func:`select`: the model plus the penalized fit when there is one."""

    model: tuple
    fit: Optional[LassoFit] = None
    cv: Optional[CvResult] = None
    short: bool = False


# --------------------------------------------------------------------------
# standardized problem


class _Problem:
    """Standardized design, centered response and penalty weights for one dataset."""

    def __init__(self, data: Dataset):
        self.data = data
        self.n, self.p = data.X.shape
        self.Xs, self.center, self.scale = standardize_columns(data.X)
        self.ymean = float(data.y.mean())
        self.yc = data.y - self.ymean
        self.col_sq = (self.scale > 0).astype(float)
        self.weights = np.ones(self.p)
        keep = list(data.keep)
        self.weights[keep] = 0.0
        self.weights[self.scale == 0] = 0.0
        self.unpenalized = [j for j in keep if self.scale[j] > 0]
        const_keep = [j for j in keep if self.scale[j] == 0 and data.X[0, j] != 0]
        self.intercept_col = const_keep[0] if const_keep else None

    def null_residual(self) -> np.ndarray:
        """Residual of the centered response on the unpenalized columns."""
        if not self.unpenalized:
            return self.yc.copy()
        U = self.Xs[:, self.unpenalized]
        coef, *_ = np.linalg.lstsq(U, self.yc, rcond=None)
        return self.yc - U @ coef

    def lambda_max(self) -> float:
        r = self.null_residual()
        g = np.abs(self.Xs.T @ r) * (2.0 / self.n)
        g[self.weights == 0] = 0.0
        return float(g.max()) if g.size else 0.0

    def solve(self, beta, r, half_pen, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
        return _kernels.cd_weighted_lasso(self.Xs, r, beta, half_pen, self.col_sq, max_iter, tol)

    def to_fit(self, lam, beta_std, sweeps, converged, cls=LassoFit, **extra):
        coef = np.divide(beta_std, self.scale, out=np.zeros(self.p), where=self.scale > 0)
        intercept = self.ymean - float(self.center @ coef)
        if self.intercept_col is not None:
            coef[self.intercept_col] = intercept / self.data.X[0, self.intercept_col]
            intercept = 0.0
        support = tuple(np.flatnonzero(coef).tolist())
        return cls(
            lam=float(lam),
            coefficients=coef,
            intercept=intercept,
            support=support,
            n_iterations=int(sweeps),
            converged=bool(converged),
            std_coefficients=beta_std.copy(),
            **extra,
        )

    def objective(self, beta_std, lam, penalty="lasso", a=3.7) -> float:
        r = self.yc - self.Xs @ beta_std
        loss = float(r @ r) / self.n
        pen_idx = self.weights > 0
        if penalty == "lasso":
            return loss + lam * float(np.abs(beta_std[pen_idx]).sum())
        return loss + 2.0 * float(scad_penalty(np.abs(beta_std[pen_idx]), lam, a).sum())


def _problem(data, problem):
    return problem if problem is not None else _Problem(data)


# --------------------------------------------------------------------------
# LASSO


def lambda_max(data: Dataset, penalty: str = "lasso") -> float:
    """Smallest lambda whose penalized fit has no penalized column in the model.

    For the LASSO this is ``(2/n) max_j |X_j^T r|`` over standardized penalized
    columns, ``r`` the centered response after the keep-list columns; the SCAD
    threshold is half of it.
    """
    lm = _Problem(data).lambda_max()
    return lm if penalty == "lasso" else lm / 2.0


def default_lambda_grid(
    data: Dataset,
    penalty: str = "lasso",
    n_lambda: int = DEFAULT_N_LAMBDA,
    ratio: float = DEFAULT_LAMBDA_RATIO,
) -> np.ndarray:
    """``n_lambda`` log-spaced values from lambda_max down to ``ratio * lambda_max``."""
    lm = lambda_max(data, penalty)
    if lm <= 0:
        lm = 1e-8
    return np.geomspace(lm, ratio * lm, n_lambda)


def lasso_fit(
    data: Dataset,
    lam: float,
    weights: Optional[np.ndarray] = None,
    warm_start: Optional[np.ndarray] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    problem: Optional[_Problem] = None,
) -> LassoFit:
    """LASSO solution at ``lam`` by cyclic coordinate descent.

    ``weights`` multiplies the per-column penalty (keep-list columns are
    always unpenalized); ``warm_start`` gives standardized starting
    coefficients.
    """
    if lam <= 0:
        raise ConfigurationError("lambda must be positive")
    pb = _problem(data, problem)
    w = pb.weights if weights is None else pb.weights * np.asarray(weights, dtype=float)
    beta = np.zeros(pb.p) if warm_start is None else np.array(warm_start, dtype=float)
    r = pb.yc - pb.Xs @ beta
    sweeps, conv = pb.solve(beta, r, 0.5 * lam * w, tol, max_iter)
    if not conv:
        warnings.warn(f"coordinate descent did not converge at lambda={lam:.4g}", RuntimeWarning)
    return pb.to_fit(lam, beta, sweeps, conv)


def _stop_path(pb, r, beta, null_dev, prev_dev, max_support):
    dev = float(r @ r)
    if null_dev > 0 and 1.0 - dev / null_dev > 0.999:
        return True, dev
    if np.count_nonzero(beta[pb.weights > 0]) >= max_support:
        return True, dev
    return False, dev


def lasso_path(
    data: Dataset,
    lambdas=None,
    weights: Optional[np.ndarray] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    stop_early: bool = True,
    max_support: Optional[int] = None,
    problem: Optional[_Problem] = None,
) -> LassoPath:
    """Warm-started LASSO fits along a decreasing lambda grid.

    With ``stop_early`` the path is truncated once the fit explains 99.9% of
    the centered response variation or reaches ``max_support`` penalized
    columns (default ``n - 1``).
    """
    pb = _problem(data, problem)
    lambdas = default_lambda_grid(data) if lambdas is None else np.asarray(lambdas, dtype=float)
    w = pb.weights if weights is None else pb.weights * np.asarray(weights, dtype=float)
    max_support = pb.n - 1 if max_support is None else max_support
    beta = np.zeros(pb.p)
    r = pb.yc.copy()
    null_dev = float(pb.null_residual() @ pb.null_residual())
    prev = None
    fits = []
    for lam in lambdas:
        sweeps, conv = pb.solve(beta, r, 0.5 * lam * w, tol, max_iter)
        fits.append(pb.to_fit(lam, beta, sweeps, conv))
        if stop_early:
            stop, prev = _stop_path(pb, r, beta, null_dev, prev, max_support)
            if stop:
                break
    return LassoPath(np.asarray(lambdas[: len(fits)], dtype=float), tuple(fits))


def kkt_violation(data: Dataset, fit: LassoFit, weights: Optional[np.ndarray] = None) -> float:
    """Largest violation of the LASSO optimality conditions of ``fit``.

    On the standardized scale the gradient ``g_j = (2/n) X_j^T (y - X b)``
    must equal ``lam * w_j * sign(b_j)`` on the support and satisfy
    ``|g_j| <= lam * w_j`` elsewhere.
    """
    pb = _Problem(data)
    w = pb.weights if weights is None else pb.weights * np.asarray(weights, dtype=float)
    b = fit.std_coefficients
    r = pb.yc - pb.Xs @ b
    g = (2.0 / pb.n) * (pb.Xs.T @ r)
    bound = fit.lam * w
    on = b != 0
    viol = np.where(on, np.abs(g - bound * np.sign(b)), np.maximum(np.abs(g) - bound, 0.0))
    viol[pb.scale == 0] = 0.0
    return float(viol.max()) if viol.size else 0.0


# --------------------------------------------------------------------------
# SCAD


def scad_penalty(t, lam: float, a: float = 3.7):
    """SCAD penalty rho_lam(t) for t >= 0."""
    t = np.abs(np.asarray(t, dtype=float))
    return np.where(
        t <= lam,
        lam * t,
        np.where(t <= a * lam, (2 * a * lam * t - t * t - lam * lam) / (2 * (a - 1)), (a + 1) * lam * lam / 2),
    )


def scad_penalty_derivative(t, lam: float, a: float = 3.7):
    """rho'_lam(t) = lam for t <= lam, (a lam - t)_+ / (a - 1) beyond."""
    if lam <= 0 or a <= 2:
        raise ConfigurationError("SCAD needs lam > 0 and a > 2")
    t = np.asarray(t, dtype=float)
    out = np.where(t <= lam, lam, np.maximum(a * lam - t, 0.0) / (a - 1))
    return float(out) if out.ndim == 0 else out


def _lla(pb, lam, a, beta, tol, max_iter, max_outer, lla_tol):
    """Run LLA steps in place on ``beta`` (standardized); returns diagnostics."""
    pen = pb.weights > 0
    unpen_half = np.zeros(pb.p)
    r = pb.yc - pb.Xs @ beta
    objective = [pb.objective(beta, lam, "scad", a)]
    sweeps_total = 0
    converged = True
    outer = 0
    for outer in range(1, max_outer + 1):
        old = beta.copy()
        half_pen = np.where(pen, scad_penalty_derivative(np.abs(beta), lam, a), unpen_half)
        sweeps, conv = pb.solve(beta, r, half_pen, tol, max_iter)
        sweeps_total += sweeps
        converged &= conv
        objective.append(pb.objective(beta, lam, "scad", a))
        change = float(np.max(np.abs(beta - old))) if beta.size else 0.0
        same_support = np.array_equal(beta != 0, old != 0)
        if same_support and change < lla_tol * max(1.0, float(np.max(np.abs(beta)))):
            break
    return sweeps_total, converged, tuple(objective), outer


def scad_lla(
    data: Dataset,
    lam: float,
    a: float = 3.7,
    warm_start: Optional[np.ndarray] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    max_outer: int = 20,
    lla_tol: float = 1e-6,
    problem: Optional[_Problem] = None,
) -> ScadFit:
    """SCAD-penalized least squares by local linear approximation.

    Starts from the LASSO solution with the same threshold (``2 * lam`` in
    the LASSO parametrisation) and iterates weighted LASSO solves with
    weights ``rho'_lam(|b_j|) / lam`` until the support and coefficients
    settle (change below ``lla_tol``) or ``max_outer`` steps are taken.
    ``objective_path`` records the SCAD objective at the start and after
    every step; majorization makes it non-increasing.
    """
    if lam <= 0 or a <= 2:
        raise ConfigurationError("SCAD needs lam > 0 and a > 2")
    pb = _problem(data, problem)
    beta = np.zeros(pb.p) if warm_start is None else np.array(warm_start, dtype=float)
    r = pb.yc - pb.Xs @ beta
    sweeps0, conv0 = pb.solve(beta, r, lam * pb.weights, tol, max_iter)
    sweeps, conv, obj, outer = _lla(pb, lam, a, beta, tol, max_iter, max_outer, lla_tol)
    conv = conv and conv0
    if not conv:
        warnings.warn(f"SCAD inner solves did not converge at lambda={lam:.4g}", RuntimeWarning)
    return pb.to_fit(
        lam, beta, sweeps0 + sweeps, conv, cls=ScadFit, a=a, objective_path=obj, outer_iterations=outer
    )


def scad_path(
    data: Dataset,
    lambdas=None,
    a: float = 3.7,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    stop_early: bool = True,
    max_support: Optional[int] = None,
    problem: Optional[_Problem] = None,
) -> LassoPath:
    """SCAD fits along a decreasing grid, each started from the LASSO solution
    at the same threshold (the LASSO chain itself is warm-started)."""
    pb = _problem(data, problem)
    lambdas = default_lambda_grid(data, "scad") if lambdas is None else np.asarray(lambdas, dtype=float)
    max_support = pb.n - 1 if max_support is None else max_support
    lasso_beta = np.zeros(pb.p)
    lasso_r = pb.yc.copy()
    null_dev = float(pb.null_residual() @ pb.null_residual())
    prev = None
    fits = []
    for lam in lambdas:
        s0, c0 = pb.solve(lasso_beta, lasso_r, lam * pb.weights, tol, max_iter)
        beta = lasso_beta.copy()
        s1, c1, obj, outer = _lla(pb, lam, a, beta, tol, max_iter, 20, 1e-6)
        fits.append(
            pb.to_fit(lam, beta, s0 + s1, c0 and c1, cls=ScadFit, a=a, objective_path=obj, outer_iterations=outer)
        )
        if stop_early:
            r = pb.yc - pb.Xs @ beta
            stop, prev = _stop_path(pb, r, beta, null_dev, prev, max_support)
            if stop:
                break
    return LassoPath(np.asarray(lambdas[: len(fits)], dtype=float), tuple(fits))


# --------------------------------------------------------------------------
# cross-validation


def fold_assignment(n: int, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Balanced random fold labels ``0..folds-1`` for ``n`` observations."""
    if not 2 <= folds <= n:
        raise ConfigurationError(f"need 2 <= folds <= n, got folds={folds}, n={n}")
    ids = np.empty(n, dtype=np.intp)
    ids[rng.permutation(n)] = np.arange(n) % folds
    return ids


def _path_for(spec_kind, data, lambdas, a, max_support=None):
    # CV paths stop once the support passes these caps: beyond them the
    # out-of-fold error only rises and the solves slow down sharply.
    if spec_kind == "lasso":
        max_support = data.n // 2 if max_support is None else max_support
        return lasso_path(data, lambdas, max_support=max_support)
    max_support = data.n // 4 if max_support is None else max_support
    return scad_path(data, lambdas, a, max_support=max_support)


def cross_validate_lambda(
    data: Dataset,
    spec: SelectorSpec,
    rng: Optional[np.random.Generator] = None,
    fold_ids: Optional[np.ndarray] = None,
) -> CvResult:
    """K-fold cross-validation of the penalty level for a LASSO or SCAD spec.

    The CV error at each lambda is ``(1/n) sum_k sum_{i in fold k}
    (y_i - yhat_i^{(-k)})^2``; the chosen lambda is the first minimiser on
    the (decreasing) grid and the returned fit is refit on all rows. Paths
    stop once they reach ``n_train // 2`` (LASSO) or ``n_train // 4`` (SCAD)
    penalized columns, or explain 99.9% of the variation; grid points past
    the shortest fold path are dropped.
    """
    if spec.kind not in ("lasso", "scad"):
        raise ConfigurationError(f"cannot cross-validate a {spec.kind} selector")
    lambdas = (
        np.asarray(spec.lambdas, dtype=float)
        if spec.lambdas is not None
        else default_lambda_grid(data, spec.kind)
    )
    if lambdas.size == 0:
        raise ConfigurationError("lambda grid is empty")
    n = data.n
    if fold_ids is None:
        if rng is None:
            raise ConfigurationError("cross-validation needs a random generator or fold ids")
        fold_ids = fold_assignment(n, spec.folds, rng)
    fold_ids = np.asarray(fold_ids, dtype=np.intp)
    sq = np.zeros(lambdas.size)
    length = lambdas.size
    for k in np.unique(fold_ids):
        test = fold_ids == k
        train = data.rows(np.flatnonzero(~test))
        path = _path_for(spec.kind, train, lambdas, spec.a)
        length = min(length, len(path))
        Xt, yt = data.X[test], data.y[test]
        for i, f in enumerate(path.fits[:length]):
            resid = yt - f.predict(Xt)
            sq[i] += float(resid @ resid)
    errors = sq[:length] / n
    lambdas = lambdas[:length]
    best = int(np.argmin(errors))
    full = _path_for(spec.kind, data, lambdas[: best + 1], spec.a)
    fit = full.fits[-1] if len(full) == best + 1 else _single_fit(spec, data, lambdas[best], full)
    return CvResult(float(lambdas[best]), fit, lambdas, errors, fold_ids)


def _single_fit(spec, data, lam, path):
    warm = path.fits[-1].std_coefficients if len(path) else None
    if spec.kind == "lasso":
        return lasso_fit(data, lam, warm_start=warm)
    return scad_lla(data, lam, spec.a, warm_start=warm)


def _fit_at_size(spec: SelectorSpec, data: Dataset, size: int) -> LassoFit:
    """First fit along the default path with at least ``size`` penalized columns."""
    grid = spec.lambdas if spec.lambdas is not None else default_lambda_grid(data, spec.kind)
    pb = _Problem(data)
    pen = pb.weights > 0
    path = (
        lasso_path(data, grid, stop_early=True, max_support=max(size, 1), problem=pb)
        if spec.kind == "lasso"
        else scad_path(data, grid, spec.a, stop_early=True, max_support=max(size, 1), problem=pb)
    )
    for f in path.fits:
        if np.count_nonzero(f.std_coefficients[pen]) >= size:
            return f
    return path.fits[-1]


# --------------------------------------------------------------------------
# screening and greedy selectors


def _rank_desc(score: np.ndarray) -> np.ndarray:
    """Indices by decreasing score; ties go to the lower index."""
    return np.lexsort((np.arange(score.size), -score))


def sis(data: Dataset, s: int) -> tuple:
    """Sure independence screening: the ``s`` columns with largest |corr(X_j, y)|.

    Keep-list columns are added to the result; they only use up budget when
    they are themselves among the top ``s``.
    """
    if not 1 <= s <= data.p:
        raise ConfigurationError(f"SIS size must be in [1, p], got s={s}")
    score = np.abs(column_correlations(data.X, data.y))
    top = _rank_desc(score)[:s]
    return index_set(list(top) + list(data.keep))


def _centered_residual(X, y, cols):
    yc = y - y.mean()
    if not cols:
        return yc
    Xc = X[:, cols] - X[:, cols].mean(axis=0)
    coef, *_ = np.linalg.lstsq(Xc, yc, rcond=None)
    return yc - Xc @ coef


def isis(data: Dataset, s: int, steps: int = 2) -> tuple:
    """Iterated SIS in ``steps`` equal batches (earlier batches take the remainder).

    The first batch ranks columns by correlation with the response; each
    later batch ranks the remaining columns by correlation with the residual
    of the refit (with intercept) on everything chosen so far. Keep-list
    columns are always in the refit and do not count toward ``s``.
    """
    if s < 1 or steps < 1:
        raise ConfigurationError("isis needs s >= 1 and steps >= 1")
    if s >= data.n:
        raise ConfigurationError(f"isis size s={s} must be smaller than n={data.n}")
    keep = list(data.keep)
    sizes = [s // steps + (1 if i < s % steps else 0) for i in range(steps)]
    chosen: list = []
    excluded = np.zeros(data.p, dtype=bool)
    excluded[keep] = True
    for b in sizes:
        if b == 0:
            continue
        r = _centered_residual(data.X, data.y, keep + chosen)
        if not np.any(r):
            break
        score = np.abs(column_correlations(data.X, r))
        score[excluded] = -np.inf
        take = [int(j) for j in _rank_desc(score)[:b] if not excluded[j]]
        chosen.extend(take)
        excluded[take] = True
    if len(chosen) < s:
        warnings.warn(f"isis selected {len(chosen)} of {s} columns", SelectionWarning)
    return index_set(chosen + keep)


def stepwise_forward(data: Dataset, s: int, return_flag: bool = False):
    """Greedy forward selection of ``s`` columns by largest RSS reduction.

    Works on centered columns (so an intercept is implicit) and starts from
    the keep-list. Candidates that would make the fit singular are skipped;
    if no candidate remains the shorter model is returned with a
    :class:`SelectionWarning`.
    """
    if s < 1:
        raise ConfigurationError("stepwise needs s >= 1")
    if s >= data.n:
        raise ConfigurationError(f"stepwise size s={s} must be smaller than n={data.n}")
    X = data.X
    Z = np.asfortranarray(X - X.mean(axis=0))
    r = data.y - data.y.mean()
    orig = np.einsum("ij,ij->j", Z, Z)
    norms = orig.copy()
    floor = 1e-10 * np.maximum(orig, 1e-300)
    available = orig > 0

    def absorb(j):
        nonlocal r, norms
        q = Z[:, j] / math.sqrt(norms[j])
        r = r - q * (q @ r)
        proj = q @ Z
        Z[:, :] -= np.outer(q, proj)
        norms = np.maximum(norms - proj * proj, 0.0)
        available[j] = False

    for j in data.keep:
        if available[j] and norms[j] > floor[j]:
            absorb(j)
        available[j] = False
    chosen = []
    for _ in range(s):
        ok = available & (norms > floor)
        if not ok.any():
            break
        with np.errstate(invalid="ignore", divide="ignore"):
            score = np.where(ok, (Z.T @ r) ** 2 / np.where(ok, norms, 1.0), -np.inf)
        j = int(np.argmax(score))
        chosen.append(j)
        absorb(j)
    short = len(chosen) < s
    if short:
        warnings.warn(f"stepwise selected {len(chosen)} of {s} columns", SelectionWarning)
    model = index_set(chosen + list(data.keep))
    return (model, short) if return_flag else model


# --------------------------------------------------------------------------
# dispatch


def select(data: Dataset, spec: SelectorSpec, rng: Optional[np.random.Generator] = None) -> Selection:
    """Run the selector described by ``spec``; keep-list columns are always included."""
    keep = list(data.keep)
    if spec.kind == "fixed":
        return Selection(index_set(list(spec.indices) + keep, data.p))
    if spec.kind == "sis":
        return Selection(sis(data, min(spec.s, data.p)))
    if spec.kind == "isis":
        return Selection(isis(data, spec.s, spec.steps))
    if spec.kind == "stepwise":
        model, short = stepwise_forward(data, spec.s, return_flag=True)
        return Selection(model, short=short)
    if spec.lam is not None:
        fit = (
            lasso_fit(data, spec.lam)
            if spec.kind == "lasso"
            else scad_lla(data, spec.lam, spec.a)
        )
        return Selection(index_set(list(fit.support) + keep), fit)
    if spec.s > 0:
        fit = _fit_at_size(spec, data, spec.s)
        return Selection(index_set(list(fit.support) + keep), fit)
    cv = cross_validate_lambda(data, spec, rng)
    return Selection(index_set(list(cv.fit.support) + keep), cv.fit, cv)
