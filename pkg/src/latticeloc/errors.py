"""Exception types raised across the package."""


class ValidationError(ValueError):
    """Invalid lattice, region or experiment parameters."""


class NotPositiveDefiniteError(ValueError):
    """A coupling matrix has a non-positive eigenvalue."""

    def __init__(self, eigenvalue):
        self.eigenvalue = float(eigenvalue)
        super().__init__(f"not positive definite: eigenvalue {self.eigenvalue:.6g}")


class PreconditionError(ValueError):
    """Inputs violate an operation's precondition (distinct from a failed verdict)."""


class FitError(ValueError):
    """Too few usable samples for a fit."""
