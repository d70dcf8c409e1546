"""
Exception hierarchy shared by the library and the CLI.
"""

from typing import Optional


class TextureSignatureError(Exception):
    """Base class for every error raised on purpose by this package."""


class ParameterError(TextureSignatureError, ValueError):
    """Invalid radius, Q, lambda, grid or other parameter."""


class DimensionError(ParameterError):
    """Image too small for the requested operation."""


class ImageReadError(TextureSignatureError, OSError):
    """Image file missing or unreadable."""


class ImageFormatError(TextureSignatureError, ValueError):
    """File is readable but not a supported raster format."""


class DatasetError(TextureSignatureError, ValueError):
    """Dataset directory does not follow <root>/<class>/<image>, or has too few samples per class."""


class DegenerateWeightsError(TextureSignatureError, ArithmeticError):
    """Hidden-weight row with zero variance."""


class NumericError(TextureSignatureError, ArithmeticError):
    """Non-finite input or failed linear solve."""


class SingularCovarianceError(NumericError):
    """Within-class covariance cannot be inverted."""


class FeatureFileError(TextureSignatureError, ValueError):
    """Feature CSV or sidecar problem."""


class ParseError(FeatureFileError):
    """Malformed feature CSV."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SidecarMismatchError(FeatureFileError):
    """Feature CSV does not match the metadata recorded next to it."""
