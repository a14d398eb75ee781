"""Exception hierarchy."""


class HarnackLabError(Exception):
    """Base class for all errors raised by the package."""


class DomainError(HarnackLabError, ValueError):
    """A point lies on the wrong side of a ball or outside a valid range."""


class OutOfRangeError(HarnackLabError, ValueError):
    """A requested value cannot be attained by a scale function."""


class ConfigurationError(HarnackLabError, ValueError):
    """Invalid model or experiment configuration."""


class NumericalError(HarnackLabError, RuntimeError):
    """A quadrature, root finder or solver failed to reach its tolerance."""


class UnboundedError(NumericalError):
    """A linear program turned out to be unbounded."""
