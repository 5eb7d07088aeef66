"""Exception hierarchy.

Validation problems (bad parameters, points outside a domain) derive from
``ValueError``; numerical failures (tolerance not met, count mismatch) derive
from ``NumericalError``.  The CLI maps the former to exit code 1 and the
latter to exit code 2.
"""


class WormValidationError(ValueError):
    """Input violates a documented invariant or precondition."""


class DomainError(WormValidationError):
    """Point lies outside the domain of definition (e.g. ``z_n = 0``)."""


class PreconditionError(WormValidationError):
    pass


class MarginError(WormValidationError):
    """Kernel arguments too close to the edge of the admissible strip."""


class PoleError(WormValidationError):
    """A rational denominator vanishes."""


class ResolutionError(WormValidationError):
    pass


class NumericalError(RuntimeError):
    """Base class for numerical failures."""


class ToleranceError(NumericalError):
    pass


class CountMismatchError(NumericalError):
    pass


class DoublePoleError(NumericalError):
    pass


class DegenerateGradientError(NumericalError):
    pass


class NormDivergenceError(NumericalError):
    pass


class InconclusiveFitError(NumericalError):
    pass
