from typing import Optional, Sequence, Tuple

from src.core.constants import Constants


class PaloraError(Exception):
    """Base error; carries the process exit code a command should return."""

    exit_code: int = Constants.EXIT_TRAINING_ABORTED


class ShapeError(PaloraError, ValueError):
    """Dimension or shape mismatch between operands."""


class LabelError(PaloraError, ValueError):
    """Class label outside [0, num_classes)."""


class DomainError(PaloraError, ValueError):
    """Argument outside its admissible range."""


class DataError(PaloraError):
    """Empty dataset, malformed CSV or inconsistent targets."""


class IdxFormatError(DataError):
    """Bad IDX magic number or truncated payload."""


class ConfigError(PaloraError):
    exit_code = Constants.EXIT_CONFIG


class CheckpointError(PaloraError):
    exit_code = Constants.EXIT_CHECKPOINT


class TrainingAbortedError(PaloraError):
    """Non-finite loss during training."""

    exit_code = Constants.EXIT_TRAINING_ABORTED

    def __init__(self, step: int, losses: Sequence[float], preference: Optional[Sequence[float]] = None):
        self.step = step
        self.losses = list(losses)
        self.preference = list(preference) if preference is not None else None
        super().__init__(
            f"Non-finite loss at step {step}: losses={self.losses}, preference={self.preference}"
        )


def classify_error(error: BaseException) -> Tuple[int, str]:
    """Map an exception to an exit code and a message with specific guidance."""
    message = str(error)

    if isinstance(error, TrainingAbortedError):
        return error.exit_code, (
            f"{message}. The loss exploded; lower the learning rate or the scaling alpha."
        )

    if isinstance(error, CheckpointError):
        lowered = message.lower()
        if "version" in lowered:
            return error.exit_code, f"{message}. Re-create the checkpoint with this version."
        if "not found" in lowered or "no such file" in lowered:
            return error.exit_code, f"{message}. Check the --checkpoint path."
        return error.exit_code, message

    if isinstance(error, ConfigError):
        return error.exit_code, f"{message}. Check the JSON run config."

    if isinstance(error, PaloraError):
        return error.exit_code, message

    # Default: unexpected failure
    return Constants.EXIT_TRAINING_ABORTED, f"Unexpected error: {message}"
