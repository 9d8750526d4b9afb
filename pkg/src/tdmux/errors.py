"""Exception hierarchy shared by all tdmux modules."""


class ContractError(ValueError):
    """An input violates an operation's preconditions."""


class DomainError(ContractError):
    """A numeric argument lies outside the operation's domain."""


class CoverageError(ContractError):
    """A spectral grid does not cover the pulse sampled onto it."""


class ResolutionError(ContractError):
    """A spectral grid is too coarse to resolve the chirp phase."""

    def __init__(self, message, required_points=None):
        super().__init__(message)
        self.required_points = required_points


class DegenerateDataError(ContractError):
    """Data carry no information (all-zero counts, empty channel)."""


class ConvergenceError(RuntimeError):
    """An iterative reconstruction hit its iteration cap.

    ``best`` holds the best iterate found and ``diagnostics`` a dict with
    the optimizer state at termination.
    """

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}
