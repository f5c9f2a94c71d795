"""Exception types shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all edgesight errors."""


class FormatError(ToolkitError):
    """Malformed, truncated, or corrupted file content."""


class ChannelError(ToolkitError):
    """Image has an unsupported channel count for this operation."""


class BoundsError(ToolkitError):
    """A window, cell, or rectangle falls outside the valid bounds."""


class ConfigError(ToolkitError):
    """Invalid configuration or parameter value."""


class InputError(ToolkitError):
    """Degenerate or invalid input data (empty set, single class, ...)."""


class ShapeError(ToolkitError):
    """Tensor, kernel, or vector shapes are incompatible."""
