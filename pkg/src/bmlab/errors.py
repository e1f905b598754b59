"""Exception types shared across the package."""


class ArgumentError(ValueError):
    """Invalid argument: dimension mismatch, non-finite data, bad sizes."""


class GeometryError(ValueError):
    """Degenerate geometric construction (hull, polar, complementary subspaces)."""


class SingularityError(ArithmeticError):
    """A linear system that must be invertible is numerically singular."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class ContractError(ValueError):
    """An operation was called outside its precondition (e.g. trivial projection)."""


class NumericalError(ArithmeticError):
    """An iterative method failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class GenerationError(RuntimeError):
    """A seeded generator exhausted its resampling budget."""
