"""Exception types shared across the package."""


class DomainError(ValueError):
    """A point lies outside the real-valued domain of a formula."""


class SingularityError(DomainError):
    """An integration interval touches a singular point of an ODE."""


class BlowUpError(RuntimeError):
    """A numerical solution left the representable range."""

    def __init__(self, message, at=None):
        super().__init__(message)
        self.at = at


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CFLError(ValueError):
    """A requested time step exceeds the advective stability bound."""
