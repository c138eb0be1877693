"""Exception hierarchy shared by every rcvar module."""


class RcvarError(Exception):
    """Base class for all errors raised by rcvar."""

    code = "rcvar-error"


class ConfigurationError(RcvarError, ValueError):
    """Invalid parameters, designs or experiment configurations."""

    code = "configuration-error"


class DegenerateInputError(RcvarError, ValueError):
    """Input without the variation an operation needs (constant vectors)."""

    code = "degenerate-input"


class SingularFitError(RcvarError, ArithmeticError):
    """Least-squares design is numerically rank deficient.

    Parameters
    ----------
    indices : tuple of int
        The offending model (column indices).
    condition : float
        Ratio of smallest to largest singular value of the design.
    """

    code = "singular-fit"

    def __init__(self, indices, condition):
        self.indices = tuple(int(i) for i in indices)
        self.condition = float(condition)
        super().__init__(
            f"rank-deficient design on model {list(self.indices)} "
            f"(singular value ratio {self.condition:.3g})"
        )


class InferenceUnavailableError(RcvarError):
    """Requested inference is not defined for the given selection."""

    code = "inference-unavailable"


class NumericalError(RcvarError, ArithmeticError):
    code = "numerical-error"


class OutputError(RcvarError, OSError):
    """Results could not be written."""

    code = "output-error"
