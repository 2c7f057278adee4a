"""Exception hierarchy used across the package."""


class FunModalError(Exception):
    """Base class for every error raised by funmodal."""


class InvalidGridError(FunModalError, ValueError):
    pass


class GridMismatchError(FunModalError, ValueError):
    pass


class RankDeficiencyError(FunModalError, ValueError):
    def __init__(self, index, pivot_norm):
        self.index = index
        self.pivot_norm = pivot_norm
        super().__init__(
            f"curve {index} is numerically dependent on the preceding curves "
            f"(pivot norm {pivot_norm:.3e} < 1e-10)"
        )


class KernelDomainError(FunModalError, ValueError):
    pass


class AssumptionViolationError(FunModalError, ValueError):
    pass


class NumericalError(FunModalError, ArithmeticError):
    pass


class DeadZoneError(NumericalError):
    """Every kernel weight vanished; the point lies outside the support of all samples."""


class UndersmoothingError(NumericalError):
    pass


class InputFormatError(FunModalError, ValueError):
    """Malformed CSV/config input. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
