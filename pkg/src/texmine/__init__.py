"""texmine: mine uniform texture crops from photo corpora and synthesize PBR materials."""

from texmine.errors import TexmineError

__version__ = "0.1.0"

__all__ = ["TexmineError", "__version__"]
