"""
Exception types raised by the resampling engine.
"""


class ResamplingError(Exception):
    """Base class for all engine errors."""
    pass


class ConfigError(ResamplingError):
    """Invalid or unreadable configuration file."""
    pass


class SchemaError(ResamplingError):
    """Data does not match its declared schema."""
    pass


class PreprocessError(ResamplingError):
    """Preprocessor cannot be fitted or applied."""
    pass


class TrainingError(ResamplingError):
    """GAN training aborted. `snapshot` holds the state at the failing step."""

    def __init__(self, message: str, snapshot: dict = None):
        super().__init__(message)
        self.snapshot = snapshot or {}


class OversampleError(ResamplingError):
    """Oversampling preconditions not met."""
    pass


class ClassifierError(ResamplingError):
    """Classifier cannot be fitted on the given data."""
    pass


class MetricError(ResamplingError):
    """Metric undefined for the given scores and labels."""
    pass


class CheckpointError(ResamplingError):
    """Model checkpoint missing, corrupt or from an unsupported format version."""
    pass
