import math

import numpy as np
import pytest

from rcvar.core import Dataset, OlsFit, SplitPlan, derive_rng, ols_fit
from rcvar.errors import ConfigurationError, DegenerateInputError, InferenceUnavailableError, NumericalError
from rcvar.estimators import VarianceReport, rcv
from rcvar.inference import (
    ci_coefficients,
    information_criteria,
    marginal_betas,
    normal_quantile,
    r_squared,
    rcv_joint_covariance,
)
from rcvar.selectors import SelectorSpec


def small_fit(seed=0):
    g = np.random.default_rng(seed)
    X = g.standard_normal((30, 3))
    return ols_fit(Dataset(X, X @ [1.0, 0.0, -2.0] + g.standard_normal(30)), range(3)), X


class TestIntervals:
    def test_quantile(self):
        assert normal_quantile(0.95) == pytest.approx(1.959964, abs=1e-5)
        with pytest.raises(ConfigurationError):
            normal_quantile(1.0)

    def test_zero_sigma(self):
        fit, _ = small_fit()
        for ci in ci_coefficients(fit, 0.0):
            assert ci.lower == ci.upper == ci.estimate
            assert ci.width == 0.0

    def test_formula(self):
        fit, X = small_fit(1)
        cis = ci_coefficients(fit, 0.7, 0.9)
        c = np.sqrt(np.diag(np.linalg.inv(X.T @ X)))
        z = normal_quantile(0.9)
        for ci, b, cj in zip(cis, fit.coefficients, c):
            assert ci.upper - ci.estimate == pytest.approx(z * cj * 0.7)
            assert ci.estimate == b
            assert ci.covers(b)

    def test_bad_gram(self):
        fit = OlsFit((0,), np.array([1.0]), 1.0, 5, np.zeros(6), _gram_inv=np.array([[-1.0]]))
        with pytest.raises(NumericalError):
            ci_coefficients(fit, 1.0)


def paired_report(n=40, seed=2):
    """Both halves share the same orthogonal rows, with X'X = (n/2) I per half."""
    g = np.random.default_rng(seed)
    h = n // 2
    Q = np.linalg.qr(g.standard_normal((h, 3)))[0] * math.sqrt(h)
    X = np.vstack([Q, Q])
    data = Dataset(X, g.standard_normal(n))
    split = SplitPlan(np.arange(h), np.arange(h, n))
    return data, split


class TestJointCovariance:
    def test_identical_orthonormal_halves(self):
        data, split = paired_report()
        rep = VarianceReport("rcv", 1.3, 36, ((0, 1, 2), (0, 1, 2)), split=split)
        joint = rcv_joint_covariance(data, rep)
        assert np.allclose(joint.covariance, 1.3 / data.n * np.eye(3))

    def test_shared_columns_only(self):
        data, split = paired_report()
        rep = VarianceReport("rcv", 1.0, 36, ((0, 1), (1, 2)), split=split)
        joint = rcv_joint_covariance(data, rep)
        assert joint.indices == (1,)
        assert len(joint.intervals(0.95)) == 1

    def test_disjoint(self):
        data, split = paired_report()
        rep = VarianceReport("rcv", 1.0, 36, ((0,), (2,)), split=split)
        with pytest.raises(InferenceUnavailableError):
            rcv_joint_covariance(data, rep)

    def test_swap_symmetry(self):
        g = derive_rng(3)
        X = g.standard_normal((60, 30))
        data = Dataset(X, X[:, 0] - X[:, 1] + g.standard_normal(60))
        rep = rcv(data, SelectorSpec.sis(3), derive_rng(4))
        swapped = VarianceReport(rep.method, rep.sigma2, rep.df, rep.models[::-1], split=rep.split.swapped())
        a, b = rcv_joint_covariance(data, rep), rcv_joint_covariance(data, swapped)
        assert a.indices == b.indices
        assert np.allclose(a.covariance, b.covariance, rtol=1e-13)
        assert np.allclose(a.coefficients, b.coefficients, rtol=1e-13)

    def test_needs_split(self):
        data, _ = paired_report()
        with pytest.raises(ConfigurationError):
            rcv_joint_covariance(data, VarianceReport("naive", 1.0, 10, ((0,),)))


class TestCriteria:
    def test_perfect_fit(self):
        y = np.arange(5.0)
        assert information_criteria(y, y, 1.0, 0, "aic") == 0.0
        assert information_criteria(y, y, 1.0, 0, "bic") == 0.0

    def test_penalty_coefficients(self):
        y = np.zeros(8)
        bic = information_criteria(y, y, 1.0, 1, "bic")
        aic = information_criteria(y, y, 1.0, 1, "aic")
        assert bic == pytest.approx(math.log(8) / 8)
        assert bic == pytest.approx(0.2599, abs=1e-4)
        assert aic == 0.25
        assert bic > aic

    def test_prefers_smaller_support(self):
        g = np.random.default_rng(5)
        y = g.standard_normal(20)
        fitted = y + g.standard_normal(20) * 0.1
        for kind in ("aic", "bic"):
            assert information_criteria(y, fitted, 0.5, 2, kind) < information_criteria(y, fitted, 0.5, 3, kind)

    def test_errors(self):
        with pytest.raises(ConfigurationError):
            information_criteria([1.0], [1.0], 0.0, 0)
        with pytest.raises(ConfigurationError):
            information_criteria([1.0], [1.0], 1.0, 0, "hqc")


class TestRSquared:
    def test_identities(self):
        y = np.array([0.0, 3.0, 1.0, 5.0])
        assert r_squared(y, np.full(4, y.mean())) == 0.0
        assert r_squared(y, y) == 1.0

    def test_toy(self):
        assert r_squared([0, 1, 2], [0.5, 1, 1.5]) == pytest.approx(0.75)

    def test_constant(self):
        with pytest.raises(DegenerateInputError):
            r_squared([2, 2, 2], [1, 2, 3])


class TestMarginal:
    def test_noiseless_slope(self):
        g = np.random.default_rng(6)
        x = g.standard_normal(50)
        X = np.column_stack([x, 2 * x + 1, -x])
        m = marginal_betas(Dataset(X, 3 * x))
        assert np.allclose(m.slopes, [3.0, 1.5, -3.0])

    def test_orthogonal_equals_joint(self):
        g = np.random.default_rng(7)
        A = g.standard_normal((40, 4))
        A -= A.mean(axis=0)
        Q = np.linalg.qr(A)[0]
        y = Q @ [1.0, -2.0, 0.5, 3.0] + 4.0
        m = marginal_betas(Dataset(Q, y))
        joint = ols_fit(Dataset(np.column_stack([Q, np.ones(40)]), y), range(5))
        assert np.allclose(m.slopes, joint.coefficients[:4], atol=1e-10)

    def test_simple_regression_oracle(self):
        g = np.random.default_rng(8)
        X = g.standard_normal((25, 3)) + [1, -2, 5]
        y = g.standard_normal(25)
        m = marginal_betas(Dataset(X, y))
        for j in range(3):
            A = np.column_stack([np.ones(25), X[:, j]])
            a, b = np.linalg.solve(A.T @ A, A.T @ y)
            assert m.slopes[j] == pytest.approx(b, abs=1e-10)
            assert m.intercepts[j] == pytest.approx(a, abs=1e-10)

    def test_constant_column(self):
        g = np.random.default_rng(9)
        X = np.column_stack([g.standard_normal(10), np.full(10, 4.0)])
        m = marginal_betas(Dataset(X, g.standard_normal(10)))
        assert m.slopes[1] == 0.0 and m.constant.tolist() == [False, True]
        assert m.S[1, 1] == 0.0
        assert m.z_scores(1.0)[1] == 0.0

    def test_S_diagonal(self):
        g = np.random.default_rng(10)
        X = g.standard_normal((30, 3)) * [1.0, 2.0, 0.5]
        m = marginal_betas(Dataset(X, g.standard_normal(30)))
        assert np.allclose(np.diag(m.S), 1 / X.var(axis=0, ddof=1))
