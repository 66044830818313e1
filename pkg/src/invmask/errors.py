"""Exception types shared across the package.

The CLI maps these onto its exit-code taxonomy; library callers can catch
them individually.
"""


class ShapeError(ValueError):
    """Operand dimensions disagree with what an operation requires."""


class NonFiniteError(ArithmeticError):
    """An operation produced NaN or Inf values."""


class ImageReadError(OSError):
    """An input image file is missing or not decodable."""


class CheckpointError(ValueError):
    """A checkpoint file is corrupt, truncated, or of an unknown format."""


class ConfigError(ValueError):
    """A training config file is malformed.  Carries the offending line number."""

    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class TrainingError(RuntimeError):
    """Training aborted (bad dataset, non-finite loss, ...)."""
