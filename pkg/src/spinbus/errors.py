"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class BudgetError(DomainError):
    """A dense computation was requested above the configured size limit."""


class DegenerateGroundStateError(DomainError):
    """The bus ground state is degenerate, so second-order theory does not apply."""


class WeakCouplingError(DomainError):
    """Qubit-bus couplings are too strong for the effective description."""


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual {residual:.3e})")
        self.residual = residual
