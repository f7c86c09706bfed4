"""Exception types shared across the package."""


class GmlabError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(GmlabError, ValueError):
    """An input violates a documented precondition."""


class PhysicalityError(ValidationError):
    """A state or measurement violates the Heisenberg uncertainty relation."""


class SingularCovarianceError(ValidationError):
    """An outcome covariance is singular below the invertibility floor."""


class DivergentInformationError(GmlabError):
    """A Fisher information quantity diverges at the requested point."""


class ConvergenceError(GmlabError):
    """An iterative or discretized computation failed its convergence check."""
