"""Shared exception types."""


class ShapeError(ValueError):
    """Operands have incompatible or invalid dimensions."""


class ConfigError(ValueError):
    """A configuration value is missing, unknown, or inconsistent."""


class DatasetFormatError(RuntimeError):
    """A dataset file is corrupt, truncated, or has an unsupported layout."""


class WeightFormatError(RuntimeError):
    """A weight file is corrupt or does not match the target model."""
