"""Exception types shared across the package."""


class PhotolocError(Exception):
    """Base class for all package errors."""


class MuAtResonance(PhotolocError, ValueError):
    """Raised when an effective operator is requested at mu == Omega."""


class SpecMismatch(PhotolocError, ValueError):
    """Kernel and disorder field live on different lattices."""


class BudgetExceeded(PhotolocError):
    """Dense matrix would exceed the configured size budget."""


class SingularAtE(PhotolocError, ArithmeticError):
    """Real-energy resolvent solve hit a (numerically) singular system."""


class SolverError(PhotolocError, RuntimeError):
    """Dense eigen- or linear solver failed to converge."""


class QuadratureError(PhotolocError, RuntimeError):
    """Adaptive quadrature did not reach its tolerance."""

    def __init__(self, message, beta=None):
        super().__init__(message)
        self.beta = beta


class ScanFailure(PhotolocError, RuntimeError):
    """An energy scan did not find the expected crossing."""


class FailureBudgetExceeded(PhotolocError, RuntimeError):
    """More than the allowed fraction of ensemble realizations failed."""

    def __init__(self, message, n_failed, n_total):
        super().__init__(message)
        self.n_failed = n_failed
        self.n_total = n_total
