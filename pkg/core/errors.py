from typing import Optional, Tuple


class TebdError(Exception):
    """Base class for every error raised by the simulation engine and harness."""


class PreconditionError(TebdError, ValueError):
    """An operation was called with inputs that violate its preconditions."""


class SizeLimitError(PreconditionError):
    """
    Raised when a dense representation would not fit in memory.

    Attributes:
        required_bytes (int): Estimated memory the dense object would need.
    """
    def __init__(self, message: str, required_bytes: int):
        super().__init__(message)
        self.required_bytes = required_bytes


class ConvergenceError(TebdError, ArithmeticError):
    """
    Raised when a LAPACK driver fails to converge.

    Attributes:
        shape (Tuple[int, int]): Dimensions of the offending matrix.
    """
    def __init__(self, message: str, shape: Tuple[int, ...]):
        super().__init__(message)
        self.shape = shape


class ConfigError(TebdError, ValueError):
    """
    Raised for invalid command-line or config-file settings.

    Attributes:
        field (str): Name of the offending setting.
    """
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class RunFailure(TebdError, RuntimeError):
    """
    Raised when an evolution run cannot finish.

    Attributes:
        checkpoint_path (Optional[str]): Snapshot written before failing, if any.
    """
    def __init__(self, message: str, checkpoint_path: Optional[str] = None):
        super().__init__(message)
        self.checkpoint_path = checkpoint_path
