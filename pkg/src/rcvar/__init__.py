"""Residual variance estimation for sparse high-dimensional linear models.

The main entry points are the estimators (:func:`naive_two_stage`,
:func:`rcv`, :func:`repeated_rcv`, :func:`oracle_variance`, the plug-in and
cross-validated penalized estimators), the selectors behind them
(:class:`SelectorSpec`, :func:`select`) and the Monte Carlo harness in
:mod:`rcvar.harness`.
"""

from ._kernels import BACKEND
from .core import (
    CovarianceSpec,
    Dataset,
    OlsFit,
    SplitPlan,
    derive_rng,
    generate_design,
    min_eigenvalue_gram,
    ols_fit,
    sample_correlation,
    simulate_response,
    split_even,
)
from .errors import (
    ConfigurationError,
    DegenerateInputError,
    InferenceUnavailableError,
    NumericalError,
    OutputError,
    RcvarError,
    SingularFitError,
)
from .estimators import (
    Truth,
    VarianceReport,
    cv_lasso_variance,
    gamma_hat,
    naive_two_stage,
    oracle_variance,
    plugin_lasso_variance,
    plugin_scad_variance,
    rcv,
    repeated_rcv,
    vmv,
)
from .inference import (
    ConfidenceInterval,
    ci_coefficients,
    information_criteria,
    marginal_betas,
    r_squared,
    rcv_joint_covariance,
)
from .selectors import (
    SelectorSpec,
    cross_validate_lambda,
    isis,
    lasso_fit,
    scad_lla,
    scad_penalty_derivative,
    select,
    sis,
    stepwise_forward,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
