"""Exception types raised across the texmine pipeline."""


class TexmineError(Exception):
    """Base class for all texmine errors."""


class UnsupportedFormat(TexmineError):
    """Input bytes are not a PNG or JPEG image."""


class CorruptImage(TexmineError):
    """Image bytes have a recognized format but cannot be decoded."""


class ImageTooSmall(TexmineError):
    """Image is smaller than the minimum an operation can work on."""


class ShapeMismatch(TexmineError):
    """Two histograms or maps do not share the same shape."""


class GridTooSmall(TexmineError):
    """Cell grid is smaller than the minimum region size."""


class InputDirMissing(TexmineError):
    """Configured input directory does not exist."""


class OutputNotWritable(TexmineError):
    """Configured output directory cannot be created or written."""


class IoError(TexmineError):
    """Failed to read or write a pipeline asset."""


class EmptyInput(TexmineError):
    """An operation requiring at least one item received none."""


class ManifestInvalid(TexmineError):
    """manifest.json is missing, malformed, or inconsistent."""


class PortInUse(TexmineError):
    """Requested TCP port is already bound."""
