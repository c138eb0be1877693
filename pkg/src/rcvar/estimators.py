"""Residual-variance estimators.

Naive two-stage, refitted cross-validation (plain, weighted and repeated),
the oracle, plug-in LASSO and SCAD, and K-fold cross-validated LASSO, plus
the truth-aware diagnostics ``gamma_hat`` and ``vmv``.

Every estimator returns a :class:`VarianceReport`. Refits always use the
raw columns of the design; selectors see standardized columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .core import (
    CovarianceSpec,
    Dataset,
    SplitPlan,
    derive_rng,
    index_set,
    ols_fit,
    ridge_parameter,
    split_even,
)
from .errors import ConfigurationError, DegenerateInputError, RcvarError, SingularFitError
from .selectors import (
    LassoFit,
    Selection,
    SelectorSpec,
    cross_validate_lambda,
    lasso_fit,
    scad_lla,
    select,
)


@dataclass(frozen=True)
class Truth:
    """Simulation truth used by the diagnostics (never by the estimators).

    ``beta`` maps column index to coefficient; ``eps`` is the realized noise.
    """

    beta: Mapping[int, float]
    cov: CovarianceSpec
    sigma: float = 1.0
    eps: Optional[np.ndarray] = None

    @property
    def support(self) -> tuple:
        return index_set(k for k, v in self.beta.items() if v != 0)


@dataclass(frozen=True)
class VarianceReport:
    """An estimate of the residual variance with its provenance.

    Attributes
    ----------
    method : str
        Estimator tag, e.g. ``"naive"``, ``"rcv"``, ``"wrcv"``.
    sigma2 : float
        The estimate.
    df : int
        Degrees of freedom of the divisor (``n`` for oracle and CV).
    models : tuple of tuple
        ``(M,)`` for single-stage methods, ``(M1, M2)`` for RCV.
    gamma_hat : float, optional
        Spurious-correlation statistic (simulation only).
    halves : tuple of float, optional
        ``(sigma1^2, sigma2^2)`` for RCV.
    vmv : float, optional
        Variance of missing variables (simulation only); averaged over halves for RCV.
    ridge_fallback_used : bool
        Whether a singular refit was replaced by the ridge fallback.
    split : SplitPlan, optional
        The data split behind an RCV estimate.
    details : dict
        Method-specific extras (CV result, per-split values, ...).
    """

    method: str
    sigma2: float
    df: int
    models: tuple
    gamma_hat: Optional[float] = None
    halves: Optional[tuple] = None
    vmv: Optional[float] = None
    ridge_fallback_used: bool = False
    split: Optional[SplitPlan] = field(default=None, repr=False, compare=False)
    details: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma2)

    @property
    def model_sizes(self) -> tuple:
        return tuple(len(m) for m in self.models)


# --------------------------------------------------------------------------
# helpers


def _refit(data: Dataset, M, ridge_fallback: bool):
    """OLS refit with the opt-in ridge fallback; returns ``(fit, used_ridge)``."""
    try:
        return ols_fit(data, M), False
    except SingularFitError:
        if not ridge_fallback:
            raise
        return ols_fit(data, M, ridge=ridge_parameter(data, M)), True


def _truth_vmv(truth: Optional[Truth], model) -> Optional[float]:
    if truth is None:
        return None
    chosen = set(model)
    missed = [j for j in truth.support if j not in chosen]
    return vmv(truth.beta, truth.cov, missed, truth.sigma)


def _selection(data, selector, rng, selection):
    if selection is not None:
        return selection
    return select(data, selector, rng)


# --------------------------------------------------------------------------
# diagnostics


def gamma_hat(data: Dataset, M: Sequence[int], eps) -> float:
    """Fraction statistic ``sqrt(eps' P_M eps / eps' eps)`` in ``[0, 1]``.

    ``P_M`` projects onto the raw columns ``M`` (no centering).
    """
    eps = np.asarray(eps, dtype=float).ravel()
    if eps.shape[0] != data.n:
        raise ConfigurationError("noise vector length must equal n")
    M = index_set(M, data.p)
    if len(M) >= data.n:
        raise ConfigurationError(f"model size {len(M)} must be smaller than n={data.n}")
    total = float(eps @ eps)
    if total == 0.0:
        raise DegenerateInputError("noise vector is identically zero")
    if not M:
        return 0.0
    fit = ols_fit(data.with_response(eps), M)
    g2 = (total - fit.rss) / total
    return math.sqrt(min(max(g2, 0.0), 1.0))


def vmv(beta: Mapping[int, float], cov: CovarianceSpec, missed: Sequence[int], sigma: float = 1.0) -> float:
    """Variance of missing variables ``b_S' Sigma_SS b_S / sigma^2``."""
    missed = index_set(missed)
    if not missed:
        return 0.0
    b = np.array([beta.get(j, 0.0) for j in missed], dtype=float)
    S = cov.matrix(max(missed) + 1, missed)
    return float(b @ S @ b) / sigma**2


# --------------------------------------------------------------------------
# estimators


def oracle_variance(data: Dataset, beta: Mapping[int, float]) -> VarianceReport:
    """``(1/n) sum (y_i - x_i' beta*)^2`` with the true coefficients."""
    idx = index_set(beta.keys(), data.p)
    coef = np.array([beta[j] for j in idx], dtype=float)
    resid = data.y - (data.X[:, idx] @ coef if idx else 0.0)
    return VarianceReport("oracle", float(resid @ resid) / data.n, data.n, (idx,))


def naive_two_stage(
    data: Dataset,
    selector: SelectorSpec,
    rng: Optional[np.random.Generator] = None,
    *,
    truth: Optional[Truth] = None,
    selection: Optional[Selection] = None,
    ridge_fallback: bool = True,
) -> VarianceReport:
    """Select and refit on the same data: ``y'(I - P_M)y / (n - |M|)``.

    Pass ``selection`` to reuse a model already computed on ``data``.
    """
    sel = _selection(data, selector, rng, selection)
    M = sel.model
    if len(M) >= data.n:
        raise ConfigurationError(f"selected {len(M)} columns, need fewer than n={data.n}")
    fit, used = _refit(data, M, ridge_fallback)
    g = None
    if truth is not None and truth.eps is not None and len(M) < data.n:
        g = gamma_hat(data, M, truth.eps)
    return VarianceReport(
        "naive",
        fit.rss / fit.df_resid,
        fit.df_resid,
        (M,),
        gamma_hat=g,
        vmv=_truth_vmv(truth, M),
        ridge_fallback_used=used,
        details={"selection": sel},
    )


def rcv(
    data: Dataset,
    selector: SelectorSpec,
    rng: np.random.Generator,
    weighted: bool = False,
    *,
    truth: Optional[Truth] = None,
    split: Optional[SplitPlan] = None,
    selections: Optional[tuple] = None,
    ridge_fallback: bool = True,
) -> VarianceReport:
    """Refitted cross-validation.

    Splits the rows in two, selects on each half and refits the selected
    model on the other half. The unweighted estimate averages the two
    half estimates; ``weighted=True`` pools residual sums of squares and
    degrees of freedom. The generator drives the split first, then the
    selection on half one, then half two. ``split`` and ``selections``
    (one per half, made on that half's rows) let callers reuse work.
    """
    if split is None:
        split = split_even(data.n, rng)
    halves = (data.rows(split.first), data.rows(split.second))
    rss, dfs, models, fits, used, sels = [], [], [], [], False, []
    for sel_half, fit_half in ((0, 1), (1, 0)):
        if selections is not None:
            sel = selections[sel_half]
        else:
            sel = select(halves[sel_half], selector, rng)
        M = sel.model
        m = halves[fit_half].n
        if len(M) >= m:
            raise ConfigurationError(f"selected {len(M)} columns, need fewer than the half size {m}")
        fit, u = _refit(halves[fit_half], M, ridge_fallback)
        used |= u
        rss.append(fit.rss)
        dfs.append(fit.df_resid)
        models.append(M)
        fits.append(fit)
        sels.append(sel)
    parts = (rss[0] / dfs[0], rss[1] / dfs[1])
    pooled = (rss[0] + rss[1]) / (dfs[0] + dfs[1])
    # Equal divisors make the two forms equal; use one expression for both.
    if weighted or dfs[0] == dfs[1]:
        value = pooled
    else:
        value = 0.5 * (parts[0] + parts[1])
    v = None
    if truth is not None:
        v = 0.5 * (_truth_vmv(truth, models[0]) + _truth_vmv(truth, models[1]))
    return VarianceReport(
        "wrcv" if weighted else "rcv",
        value,
        dfs[0] + dfs[1],
        tuple(models),
        halves=parts,
        vmv=v,
        ridge_fallback_used=used,
        split=split,
        details={"fits": tuple(fits), "selections": tuple(sels)},
    )


def repeated_rcv(
    data: Dataset,
    selector: SelectorSpec,
    R: int,
    rng: Union[np.random.Generator, int],
    weighted: bool = False,
    *,
    ridge_fallback: bool = True,
) -> VarianceReport:
    """Average of ``R`` RCV estimates over independent random splits.

    Split ``r`` uses ``derive_rng(master, "rcv-split", r)``, where ``master``
    is ``rng`` itself when an int, else one draw from it. Failing splits are
    skipped and counted in ``details["failed"]``.
    """
    if R < 1:
        raise ConfigurationError("repeated RCV needs R >= 1")
    master = int(rng) if isinstance(rng, (int, np.integer)) else int(rng.integers(2**63))
    values, reports, failed = {}, {}, []
    for r in range(R):
        try:
            rep = rcv(data, selector, derive_rng(master, "rcv-split", r), weighted, ridge_fallback=ridge_fallback)
        except RcvarError as exc:
            failed.append((r, str(exc)))
            continue
        values[r] = rep.sigma2
        reports[r] = rep
    if not values:
        raise ConfigurationError(f"all {R} RCV splits failed: {failed[0][1]}")
    vals = [values[r] for r in sorted(values)]
    first = reports[min(reports)]
    return VarianceReport(
        "repeated-" + first.method,
        math.fsum(vals) / len(vals),
        first.df,
        first.models,
        halves=first.halves,
        ridge_fallback_used=any(rep.ridge_fallback_used for rep in reports.values()),
        split=first.split,
        details={"values": tuple(vals), "failed": tuple(failed), "master_seed": master},
    )


def _plugin(method, data, fit: LassoFit, extra) -> VarianceReport:
    s = len(fit.support)
    if s >= data.n:
        raise ConfigurationError(f"penalized fit has {s} nonzero coefficients, need fewer than n={data.n}")
    resid = data.y - fit.predict(data.X)
    return VarianceReport(method, float(resid @ resid) / (data.n - s), data.n - s, (fit.support,), details=extra)


def plugin_lasso_variance(
    data: Dataset,
    lam: Union[float, SelectorSpec, None] = None,
    rng: Optional[np.random.Generator] = None,
    *,
    truth: Optional[Truth] = None,
    selection: Optional[Selection] = None,
) -> VarianceReport:
    """``||y - X b_L||^2 / (n - s_L)`` with ``b_L`` the LASSO fit.

    ``lam`` is a fixed penalty level or a LASSO :class:`SelectorSpec`
    (cross-validated by default).
    """
    if selection is None:
        if lam is None or isinstance(lam, SelectorSpec):
            spec = lam if lam is not None else SelectorSpec.lasso()
            selection = select(data, spec, rng)
        else:
            selection = Selection((), lasso_fit(data, float(lam)))
    rep = _plugin("plugin-lasso", data, selection.fit, {"selection": selection})
    return _with_vmv(rep, truth)


def plugin_scad_variance(
    data: Dataset,
    lam: Union[float, SelectorSpec, None] = None,
    a: float = 3.7,
    rng: Optional[np.random.Generator] = None,
    *,
    truth: Optional[Truth] = None,
    selection: Optional[Selection] = None,
) -> VarianceReport:
    """``||y - X b_SCAD||^2 / (n - s)`` with ``b_SCAD`` from LLA."""
    if selection is None:
        if lam is None or isinstance(lam, SelectorSpec):
            spec = lam if lam is not None else SelectorSpec.scad(a=a)
            selection = select(data, spec, rng)
        else:
            selection = Selection((), scad_lla(data, float(lam), a))
    rep = _plugin("plugin-scad", data, selection.fit, {"selection": selection})
    return _with_vmv(rep, truth)


def cv_lasso_variance(
    data: Dataset,
    K: int = 10,
    lambdas=None,
    rng: Optional[np.random.Generator] = None,
    *,
    fold_ids: Optional[np.ndarray] = None,
    truth: Optional[Truth] = None,
    penalty: str = "lasso",
) -> VarianceReport:
    """Minimum over the grid of the K-fold out-of-fold mean squared error.

    ``K = n`` gives the leave-one-out estimator. The divisor is ``n``.
    ``penalty="scad"`` gives the SCAD analogue.
    """
    if not 2 <= K <= data.n:
        raise ConfigurationError(f"need 2 <= K <= n, got K={K}, n={data.n}")
    if fold_ids is None and K == data.n:
        fold_ids = np.arange(data.n)
    spec = SelectorSpec(penalty, lambdas=lambdas, folds=K)
    cv = cross_validate_lambda(data, spec, rng, fold_ids=fold_ids)
    rep = VarianceReport(
        "cv-" + penalty,
        cv.min_error,
        data.n,
        (cv.fit.support,),
        details={"cv": cv, "selection": Selection(cv.fit.support, cv.fit, cv)},
    )
    return _with_vmv(rep, truth)


def _with_vmv(rep: VarianceReport, truth: Optional[Truth]) -> VarianceReport:
    if truth is None:
        return rep
    return replace(rep, vmv=_truth_vmv(truth, rep.models[0]))
