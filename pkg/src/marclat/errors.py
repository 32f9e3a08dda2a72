"""Exception types shared across the package."""


class MarclatError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(MarclatError):
    """Inconsistent or invalid system configuration / arguments."""


class NumericalError(MarclatError):
    """A numerical procedure failed to converge or produced garbage."""


class SearchBudgetError(MarclatError):
    """Closest-vector search ran out of its node budget.

    Carries the best point found so far; the result is *not* guaranteed
    to be the true closest vector.
    """

    def __init__(self, best, nodes):
        super().__init__(f"sphere search exceeded node budget after {nodes} nodes")
        self.best = best
        self.nodes = nodes


class EstimationError(MarclatError):
    """Not enough data to estimate the requested quantity."""
