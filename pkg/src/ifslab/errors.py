"""Exception types shared across the library."""


class IfsError(Exception):
    """Base class for library errors."""


class IndexOutOfFamilyError(IfsError):
    """A word symbol does not index a map of the family."""


class DomainError(IfsError):
    """A point lies outside the family's domain interval."""


class SummabilityError(IfsError):
    """The potential's sum over the family diverges (s <= theta)."""


class UnboundedDistortionError(IfsError):
    """No Dini modulus bound is available for a non-affine family."""


class ThetaUnknownError(IfsError):
    """The family's tail cannot be classified, so theta is undecidable."""


class NoRootInRangeError(IfsError):
    """The pressure hypothesis fails: no sign change in the search range."""

    def __init__(self, message, psi_low=None, psi_high=None):
        super().__init__(message)
        self.psi_low = psi_low
        self.psi_high = psi_high


class NonConvergenceError(IfsError):
    """An iteration failed to reach its tolerance within max_iter.

    Carries the last rigorous state instead of fabricating a value.
    """

    def __init__(self, message, bracket=None, iterations=None, residual=None):
        super().__init__(message)
        self.bracket = bracket
        self.iterations = iterations
        self.residual = residual


class IrreducibilityError(IfsError):
    """A Perron iterate lost strict positivity at some grid node."""

    def __init__(self, message, node_index=None, node_position=None):
        super().__init__(message)
        self.node_index = node_index
        self.node_position = node_position


class BudgetExceededError(IfsError):
    """A cylinder enumeration exceeded its word budget."""


class ConfigError(IfsError):
    """A run configuration failed strict validation."""
