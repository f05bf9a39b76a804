"""Exception types raised across the package."""


class StereoError(Exception):
    pass


class ConfigError(StereoError, ValueError):
    pass


class DimensionTooSmall(StereoError, ValueError):
    pass


class SeedingFailed(StereoError):
    """Fewer than three support points survived initial matching."""


class FewerThanThreePoints(StereoError, ValueError):
    pass


class DegenerateTriangle(StereoError, ValueError):
    pass


class InvalidPlane(StereoError, ValueError):
    pass


class NoOverlap(StereoError):
    """No pixel is valid in prediction, ground truth and mask at once."""


class UnsupportedFormat(StereoError, ValueError):
    pass


class CorruptFile(StereoError, ValueError):
    pass


class NegativeDisparity(StereoError, ValueError):
    pass


class EmptyCloud(StereoError):
    pass
