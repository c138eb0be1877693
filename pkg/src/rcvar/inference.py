"""Downstream uses of a variance estimate: intervals, joint covariance,
information criteria, R-squared and marginal regressions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.stats import norm

from .core import Dataset, OlsFit, index_set, ols_fit
from .errors import ConfigurationError, DegenerateInputError, InferenceUnavailableError, NumericalError
from .estimators import VarianceReport


@dataclass(frozen=True)
class ConfidenceInterval:
    index: int
    estimate: float
    lower: float
    upper: float
    level: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def normal_quantile(level: float) -> float:
    """Two-sided critical value ``z_{1 - alpha/2}`` for coverage ``level``."""
    if not 0.0 < level < 1.0:
        raise ConfigurationError(f"level must lie in (0, 1), got {level}")
    return float(norm.ppf(0.5 + 0.5 * level))


def ci_coefficients(fit: OlsFit, sigma: float, level: float = 0.95) -> list:
    """Intervals ``b_j +/- z * c_j * sigma`` for every fitted column.

    ``c_j`` is the square root of the j-th diagonal entry of
    ``(X_M' X_M)^{-1}``; ``sigma`` is on the standard-deviation scale.
    """
    if fit.df_resid <= 0:
        raise ConfigurationError("fit has no residual degrees of freedom")
    if sigma < 0:
        raise ConfigurationError("sigma must be non-negative")
    z = normal_quantile(level)
    diag = np.diag(fit.gram_inverse)
    if np.any(diag <= 0) or not np.all(np.isfinite(diag)):
        raise NumericalError("non-positive diagonal in the inverse Gram matrix")
    half = z * np.sqrt(diag) * sigma
    return [
        ConfidenceInterval(j, float(b), float(b - h), float(b + h), level)
        for j, b, h in zip(fit.indices, fit.coefficients, half)
    ]


@dataclass(frozen=True)
class JointEstimate:
    """Coefficients averaged over the two RCV refits and their covariance."""

    indices: tuple
    coefficients: np.ndarray
    covariance: np.ndarray

    def intervals(self, level: float = 0.95) -> list:
        z = normal_quantile(level)
        se = np.sqrt(np.diag(self.covariance))
        return [
            ConfidenceInterval(j, float(b), float(b - z * s), float(b + z * s), level)
            for j, b, s in zip(self.indices, self.coefficients, se)
        ]


def rcv_joint_covariance(data: Dataset, report: VarianceReport, sigma2: Optional[float] = None) -> JointEstimate:
    """Refit both halves on ``M1 & M2`` and combine.

    Returns the averaged coefficients and ``(S1 + S2) * sigma2 / 4`` with
    ``S_h`` the inverse Gram matrix of half ``h`` on the shared model.
    ``sigma2`` defaults to the report's estimate.
    """
    if report.split is None or len(report.models) != 2:
        raise ConfigurationError("joint covariance needs an RCV report with its split")
    shared = index_set(set(report.models[0]) & set(report.models[1]))
    if not shared:
        raise InferenceUnavailableError("the two halves selected disjoint models")
    s2 = report.sigma2 if sigma2 is None else float(sigma2)
    f1 = ols_fit(data.rows(report.split.first), shared)
    f2 = ols_fit(data.rows(report.split.second), shared)
    cov = (f1.gram_inverse + f2.gram_inverse) * s2 / 4.0
    coef = (f1.coefficients + f2.coefficients) / 2.0
    return JointEstimate(shared, coef, cov)


def information_criteria(y, fitted, sigma2: float, df_hat: float, kind: str = "bic") -> float:
    """``||y - mu||^2 / (n sigma2) + c_n * df_hat / n`` with ``c_n`` 2 (AIC) or log n (BIC)."""
    if sigma2 <= 0:
        raise ConfigurationError("sigma2 must be positive")
    if df_hat < 0:
        raise ConfigurationError("df_hat must be non-negative")
    y = np.asarray(y, dtype=float).ravel()
    r = y - np.asarray(fitted, dtype=float).ravel()
    n = y.shape[0]
    if kind == "aic":
        c = 2.0
    elif kind == "bic":
        c = math.log(n)
    else:
        raise ConfigurationError(f"unknown criterion {kind!r}")
    return float(r @ r) / (n * sigma2) + c * df_hat / n


def r_squared(y, fitted) -> float:
    """Share of variation explained, ``1 - RSS / sum (y - ybar)^2``."""
    y = np.asarray(y, dtype=float).ravel()
    r = y - np.asarray(fitted, dtype=float).ravel()
    tss = float(np.sum((y - y.mean()) ** 2))
    if tss == 0.0:
        raise DegenerateInputError("response is constant")
    return 1.0 - float(r @ r) / tss


class MarginalRegression:
    """Per-column simple regressions ``E(y | x_j) = a_j + b_j x_j``.

    Constant columns get slope and intercept 0 and are flagged in
    ``constant``. ``S`` is computed on first access.
    """

    def __init__(self, data: Dataset):
        X, y = data.X, data.y
        self._Xc = X - X.mean(axis=0)
        self._var = np.einsum("ij,ij->j", self._Xc, self._Xc) / (data.n - 1)
        self.constant = self._var <= 1e-12 * np.maximum(1.0, X.mean(axis=0) ** 2)
        cov_xy = self._Xc.T @ (y - y.mean()) / (data.n - 1)
        safe = np.where(self.constant, 1.0, self._var)
        self.slopes = np.where(self.constant, 0.0, cov_xy / safe)
        self.intercepts = np.where(self.constant, 0.0, y.mean() - self.slopes * X.mean(axis=0))
        self.n = data.n

    @cached_property
    def S(self) -> np.ndarray:
        """``S_ij = cov(x_i, x_j) / (var x_i var x_j)``; the slopes have covariance ``sigma^2 S / n``."""
        C = self._Xc.T @ self._Xc / (self.n - 1)
        inv = np.where(self.constant, 0.0, 1.0 / np.where(self.constant, 1.0, self._var))
        return C * inv[:, None] * inv[None, :]

    def z_scores(self, sigma2: float) -> np.ndarray:
        """Slopes divided by their standard errors ``sqrt(sigma2 S_jj / n)``."""
        se = np.sqrt(sigma2 * np.diag(self.S) / self.n)
        return np.divide(self.slopes, se, out=np.zeros_like(self.slopes), where=se > 0)


def marginal_betas(data: Dataset) -> MarginalRegression:
    """Marginal least-squares slopes for every column (see :class:`MarginalRegression`)."""
    return MarginalRegression(data)
