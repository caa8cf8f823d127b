"""Exception types shared across the package.

Missing files raise the builtin FileNotFoundError; everything else derives
from SceneRouteError so callers can catch package errors in one clause.
"""


class SceneRouteError(Exception):
    """Base class for errors raised by this package."""


class UnsupportedFormatError(SceneRouteError):
    """Input file is not one of the supported image formats."""


class CorruptImageError(SceneRouteError):
    """Input file matched a supported format but could not be decoded."""


class InvalidDimensionError(SceneRouteError):
    """Image or canvas dimensions violate an operation's requirements."""


class DimensionMismatchError(SceneRouteError):
    """Operation requires the fixed analysis canvas size."""


class EmptyInputError(SceneRouteError):
    """Operation received an empty matrix or sequence."""


class ShapeMismatchError(SceneRouteError):
    """Matrix operands have incompatible shapes."""


class LengthMismatchError(SceneRouteError):
    """Paired sequences differ in length."""


class NonFiniteLogitError(SceneRouteError):
    """Decision head received NaN or infinite logits."""


class EmptySetError(SceneRouteError):
    """Percentile of an empty score set is undefined."""


class DegenerateLabelsError(SceneRouteError):
    """Calibration requires both classes in the label set."""


class MissingConfidenceError(SceneRouteError):
    """Routing below the complexity threshold requires edge confidence."""


class NegativeTimeError(SceneRouteError):
    """Latency components must be nonnegative."""


class NoCorrectDecisionsError(SceneRouteError):
    """Energy per correct decision is undefined without correct decisions."""


class MissingClassDirError(SceneRouteError):
    """Dataset root lacks a required class subdirectory."""


class EmptyDatasetError(SceneRouteError):
    """Dataset contains no image files."""


class ConfigSchemaError(SceneRouteError):
    """Experiment configuration violates the expected schema."""

    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key
