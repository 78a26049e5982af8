"""Exception hierarchy shared by every delayq module."""


class DelayqError(Exception):
    """Base class for all errors raised by delayq."""


class ConfigError(DelayqError):
    """Malformed model description or command-line configuration."""


class PoleError(DelayqError):
    """A transform was evaluated at (or beyond) one of its poles."""


class UnsupportedFamily(DelayqError):
    """The requested operation is not available for this distribution family."""


class OrderError(DelayqError):
    """Two multi-indices are not in the required partial order."""


class RangeError(DelayqError):
    """A batch moment was requested outside the provider's range."""


class NonExponentialDelay(DelayqError):
    """The analytic recursion needs exponential delays with one common rate."""


class DivergenceError(DelayqError):
    """A denominator of the form 1 - L(s) vanished."""


class DimensionError(DelayqError):
    """The model has the wrong number of input types for this operation."""


class RadiusError(DelayqError):
    """A series argument lies outside the region where the tail bound holds."""


class GridMismatch(DelayqError):
    """Grid functions sampled on different time grids were combined."""


class HazardClassError(DelayqError):
    """The interarrival law is neither IFR nor DFR."""


class MultipleRootError(DelayqError):
    """A characteristic root is not simple."""


class NondegeneracyError(DelayqError):
    """A characteristic root coincides with the delay rate."""


class ScopeError(DelayqError):
    """The model lies outside the scope of a closed-form result."""
