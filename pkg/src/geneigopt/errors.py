"""Exception types shared across the package."""


class GenEigError(Exception):
    """Base class for all errors raised by this package."""


class InvalidMatrix(GenEigError):
    """Matrix has non-finite entries or an invalid shape."""


class NotPositiveSemidefinite(GenEigError):
    """Matrix failed the tolerance-based PSD test."""


class InvalidEpsilon(GenEigError):
    """Regularization parameter must be strictly positive."""


class InvalidSmoothing(GenEigError):
    """Smoothing parameter must be strictly positive."""


class OutOfDomain(GenEigError):
    """Design vector has negative components."""


class DegeneratePair(GenEigError):
    """Sampling oracle called with an (effectively) zero denominator matrix."""


class NoFreeDofs(GenEigError):
    """Every degree of freedom of the ground structure is restrained."""


class InvalidLoadNode(GenEigError):
    """The load (or mass) node does not have the required free DOFs."""


class EmptyFeasibleSet(GenEigError):
    """Feasible set parameters admit no point."""


class BracketError(GenEigError):
    """Bisection could not establish an infeasible/feasible bracket."""


class ConfigError(GenEigError):
    """Run configuration failed validation."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
