"""Exception hierarchy.

The CLI maps the three families onto exit statuses: validation (2),
certification (3) and numeric (4).
"""


class PPassiveError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(PPassiveError, ValueError):
    """Malformed input: bad dimensions, nonpositive components, unknown fields."""

    def __init__(self, message, violations=None):
        self.violations = list(violations or [message])
        super().__init__(message)


class CertificationError(PPassiveError):
    """A certificate could not be produced (which is not a proof of failure)."""


class NotPassiveError(CertificationError):
    """The shifted real-part test fails at the requested rate."""

    def __init__(self, message, min_real_part=None):
        self.min_real_part = min_real_part
        super().__init__(message)


class NoCommonRateError(CertificationError):
    """Two certificates share no rate, so feedback composition does not apply."""


class HypothesisViolatedError(CertificationError):
    """A theorem hypothesis (e.g. Hurwitz network) does not hold."""


class AssumptionViolatedError(CertificationError):
    """The nonlinearity is not stiffening for the requested gain."""


class NumericError(PPassiveError, ArithmeticError):
    """Numerical breakdown."""


class SingularEvaluationError(NumericError):
    """A transfer function was evaluated at one of its poles."""


class DegenerateShiftError(NumericError):
    """The rate places a pole on the shifted imaginary axis."""


class AmbiguousRateError(DegenerateShiftError):
    """The rate coincides with a pole real part, so the pole count is ambiguous."""


class RootFindingError(NumericError):
    """The polynomial root finder did not converge."""


class DivergenceError(NumericError):
    """A simulated state overflowed or became non-finite.

    ``trajectory`` holds the samples computed before the abort.
    """

    def __init__(self, message, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)
