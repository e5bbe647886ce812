"""Exception hierarchy shared by all modules."""


class MedialError(Exception):
    """Base class for every error raised by this package."""


class DuplicatePoint(MedialError):
    """Two entries of a 4-tuple (points, lines or hyperplanes) coincide."""


class DegenerateCrossRatio(MedialError):
    """A cross ratio value lies in {0, 1, inf}."""


class NotTransverse(MedialError):
    pass


class InvalidPencil(MedialError):
    pass


class OutOfRange(MedialError):
    """An angle lies outside the open interval (0, pi)."""


class NotAllowable(MedialError):
    """Angles do not sum to 2*pi."""


class Incompatible(MedialError):
    """An angle quadruple violates theta1 + theta3 = theta2 + theta4."""


class DegenerateSheet(MedialError):
    pass


class InvalidConfig(MedialError):
    pass


class DegenerateTriple(MedialError):
    """Two slopes of a radial pencil coincide."""


class ExcludedLocus(MedialError):
    pass


class PinnedDegenerate(MedialError):
    pass


class ProjectionSingular(MedialError):
    """The radial direction lies in the tangent space."""


class PointNotOnTarget(MedialError):
    pass


class BasisMismatch(MedialError):
    pass


class RadialLineNotPreserved(MedialError):
    pass


class NotInvertible(MedialError):
    pass


class SchemaError(MedialError):
    pass


class InvariantViolation(MedialError):
    def __init__(self, message, location=None):
        super().__init__(message if location is None else f"{location}: {message}")
        self.location = location


class NotSimple(MedialError):
    pass


class TooFewPoints(MedialError):
    pass


class NotABranch(MedialError):
    pass


class InsufficientPolylinePoints(MedialError):
    pass


class IoError(MedialError):
    """Reading or writing a file failed."""
