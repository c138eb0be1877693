import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcvar.errors import ConfigurationError
from rcvar.harness import ExperimentConfig
from rcvar.theory import (
    NoiseLaw,
    bias_corrected_naive,
    extreme_correlations,
    gumbel_centering,
    gumbel_quantities,
    limit_law_check,
    max_abs_correlation,
    quadratic_form_enumerated,
    quadratic_form_exact_variance,
    quadratic_form_moments,
    tail_bound_check,
)


class TestMaxCorrelation:
    def test_equal_column(self):
        g = np.random.default_rng(0)
        X = g.standard_normal((20, 5))
        assert max_abs_correlation(X, X[:, 3]) == pytest.approx(1.0)

    def test_single_column(self):
        g = np.random.default_rng(1)
        x, e = g.standard_normal(15), g.standard_normal(15)
        assert max_abs_correlation(x[:, None], e) == pytest.approx(abs(np.corrcoef(x, e)[0, 1]))


@settings(max_examples=50, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(1e-3, 1e3),
    shift=st.floats(-1e3, 1e3),
    col=st.integers(0, 7),
)
def test_gamma_affine_invariance(seed, scale, shift, col):
    g = np.random.default_rng(seed)
    X = g.standard_normal((30, 8))
    e = g.standard_normal(30)
    base = max_abs_correlation(X, e)
    X2 = X.copy()
    X2[:, col] = scale * X2[:, col] + shift
    assert max_abs_correlation(X2, e) == pytest.approx(base, abs=1e-9)
    assert max_abs_correlation(X, -scale * e + shift) == pytest.approx(base, abs=1e-9)


class TestGumbel:
    def test_t_transform(self):
        gq = gumbel_quantities(50, 1000)
        assert gq.t_transform(0.0) == 0.0
        assert gq.t_transform(0.6) > gq.t_transform(0.5)

    def test_centering_value(self):
        gq = gumbel_quantities(50, 1000)
        L = math.log(2000)
        assert gq.d_2p == pytest.approx(math.sqrt(2 * L) - math.log(math.sqrt(4 * math.pi * L)) / math.sqrt(2 * L))
        assert gq.d_2p == pytest.approx(3.316, abs=5e-3)
        assert gq.centering == pytest.approx(0.469, abs=1e-3)

    def test_predicted_median(self):
        gq = gumbel_quantities(50, 1000)
        x = -math.log(math.log(2))
        assert gq.quantile(0.5) == pytest.approx((gq.d_2p + x / math.sqrt(2 * math.log(2000))) / math.sqrt(50))

    @given(q=st.floats(1.5, 1e12))
    def test_centering_increasing(self, q):
        assert gumbel_centering(q * 1.01) > gumbel_centering(q)

    def test_invalid(self):
        with pytest.raises(ConfigurationError):
            gumbel_centering(1.0)
        with pytest.raises(ConfigurationError):
            gumbel_quantities(2, 10)

    def test_extreme_correlations_reproducible(self):
        a = extreme_correlations(20, 50, 10, 3)
        b = extreme_correlations(20, 50, 10, 3)
        assert np.array_equal(a.samples, b.samples)
        assert np.all((a.samples > 0) & (a.samples < 1))


class TestTailBound:
    def test_log2(self):
        res = tail_bound_check(50, 1000, math.log(2), 1000, 11)
        assert res.bound == pytest.approx(0.5)
        assert res.passed

    def test_small_c(self):
        res = tail_bound_check(50, 1000, 1e-6, 100, 12)
        assert res.bound < 1e-5
        assert res.passed

    def test_large_c(self):
        res = tail_bound_check(50, 1000, 400.0, 200, 13)
        assert res.bound > 0.99
        assert res.empirical > 0.99
        assert res.passed

    def test_preconditions(self):
        with pytest.raises(ConfigurationError):
            tail_bound_check(50, 1000, 0.0, 100, 0)
        with pytest.raises(ConfigurationError):
            tail_bound_check(50, 1000, 1.0, 10, 0)
        with pytest.raises(ConfigurationError):
            tail_bound_check(2, 10**6, 1e-3, 100, 0)


class TestQuadraticForms:
    def test_zero(self):
        rep = quadratic_form_moments(np.zeros((3, 3)), NoiseLaw(), 1000, np.random.default_rng(0))
        assert rep.mean_emp == 0.0 and rep.var_emp == 0.0

    def test_chi_square(self):
        m = 4
        rep = quadratic_form_moments(np.eye(m), NoiseLaw(), 200_000, np.random.default_rng(1))
        assert rep.mean_theory == m
        assert rep.var_exact == 2 * m
        assert rep.mean_emp == pytest.approx(m, abs=0.03)
        assert rep.var_emp == pytest.approx(2 * m, rel=0.03)
        assert rep.passed

    def test_rank_one(self):
        P = np.full((3, 3), 1 / 3)
        rep = quadratic_form_moments(P, NoiseLaw(), 100_000, np.random.default_rng(2))
        assert rep.var_exact == pytest.approx(2.0)
        assert rep.mean_emp == pytest.approx(1.0, abs=0.03)
        assert rep.var_emp == pytest.approx(2.0, rel=0.05)
        assert rep.passed

    def test_two_point_law(self):
        law = NoiseLaw("two-point", 1.5, 0.2)
        vals, probs = law.support, law.probabilities
        assert sum(p * v for v, p in zip(vals, probs)) == pytest.approx(0.0, abs=1e-12)
        assert sum(p * v * v for v, p in zip(vals, probs)) == pytest.approx(2.25)
        x = law.sample(200_000, np.random.default_rng(3))
        assert set(np.unique(x)) <= set(vals)
        assert x.var() == pytest.approx(2.25, rel=0.02)

    def test_errors(self):
        with pytest.raises(ConfigurationError):
            quadratic_form_moments(np.array([[0, 1], [0, 0]]), NoiseLaw(), 1000, np.random.default_rng(0))
        with pytest.raises(ConfigurationError):
            quadratic_form_moments(np.eye(2), NoiseLaw(), 10, np.random.default_rng(0))
        with pytest.raises(ConfigurationError):
            quadratic_form_enumerated(np.eye(2), NoiseLaw())
        with pytest.raises(ConfigurationError):
            NoiseLaw("laplace")


@settings(max_examples=60, deadline=None)
@given(
    m=st.integers(1, 3),
    q=st.floats(0.05, 0.95),
    sigma=st.floats(0.1, 3.0),
    seed=st.integers(0, 2**32 - 1),
)
def test_exact_variance_matches_enumeration(m, q, sigma, seed):
    A = np.random.default_rng(seed).standard_normal((m, m))
    P = A + A.T
    law = NoiseLaw("two-point", sigma, q)
    mean, var = quadratic_form_enumerated(P, law)
    assert mean == pytest.approx(sigma**2 * np.trace(P), rel=1e-9, abs=1e-9)
    assert var == pytest.approx(quadratic_form_exact_variance(P, law), rel=1e-9, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(m=st.integers(1, 3), q=st.floats(0.05, 0.95), seed=st.integers(0, 2**32 - 1))
def test_variance_bound_holds(m, q, seed):
    # for a projection the exact variance never exceeds (E xi^4 + sigma^4) tr P^2
    A = np.random.default_rng(seed).standard_normal((m + 2, m))
    Q = np.linalg.qr(A)[0]
    P = Q @ Q.T
    law = NoiseLaw("two-point", 1.0, q)
    bound = (law.fourth_moment + 1.0) * np.trace(P @ P)
    assert quadratic_form_exact_variance(P, law) <= bound + 1e-12


def test_bias_correction():
    assert bias_corrected_naive(0.75, 0.5) == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        bias_corrected_naive(1.0, 1.0)


class TestLimitLaw:
    def test_oracle_small(self):
        cfg = ExperimentConfig("null", n=100, p=5, reps=300, seed=4, parallelism=1)
        rep = limit_law_check("oracle", cfg)
        assert rep.reps == 300
        assert rep.passed
        assert rep.sd == pytest.approx(1.0, rel=0.15)

    def test_naive_has_no_criterion(self):
        cfg = ExperimentConfig("null", n=50, p=300, reps=100, seed=5, parallelism=1)
        rep = limit_law_check("naive-sis:s=5", cfg)
        assert rep.passed is None
        assert rep.rejects
