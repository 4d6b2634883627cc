"""Exception hierarchy shared by every leafid module."""


class LeafIdError(Exception):
    """Base class for all recoverable leafid failures."""


class DecodeError(LeafIdError):
    """The file exists but is not a readable PNG/JPEG/BMP raster."""


class NoForeground(LeafIdError):
    """Segmentation could not isolate a leaf."""


class DegenerateRadius(LeafIdError):
    pass


class DegenerateShape(LeafIdError):
    pass


class EmptyGlcm(LeafIdError):
    """No valid pixel pair exists for an offset."""


class AllDirectionsEmpty(LeafIdError):
    pass


class EmptyTrainingSet(LeafIdError):
    pass


class SingleClass(LeafIdError):
    pass


class NonPositiveSigma(LeafIdError, ValueError):
    pass


class DimensionMismatch(LeafIdError, ValueError):
    pass


class UnknownFormatVersion(LeafIdError):
    pass


class EmptyDataset(LeafIdError):
    pass


class ClassWithNoImages(LeafIdError):
    pass


class InsufficientImages(LeafIdError):
    pass


class ConfigError(LeafIdError, ValueError):
    """Unparseable feature configuration string."""
