"""Exception types shared across the package."""


class MvtriError(Exception):
    """Base class for all domain errors raised by mvtri."""


class DepthDegenerate(MvtriError):
    """Point lies on the camera's principal plane (zero projective depth)."""


class DegenerateFrame(MvtriError):
    """An orthonormal camera frame cannot be built from the given vectors."""


class RankDeficient(MvtriError):
    """A projection matrix is not of rank 3 or has non-finite entries."""


class InsufficientViews(MvtriError):
    """Fewer than two views were supplied for triangulation."""


class PointAtInfinity(MvtriError):
    """The homogeneous solution has (near) zero fourth component.

    The solver output is attached as ``output`` so callers can still inspect
    the homogeneous vector and residual.
    """

    def __init__(self, message: str, output=None):
        super().__init__(message)
        self.output = output


class NumericalFailure(MvtriError):
    """Iteration produced a zero or non-finite vector even after a re-draw."""


class ZeroMass(MvtriError):
    """A heatmap has no positive mass to integrate."""


class ShapeMismatch(MvtriError, ValueError):
    """Array shapes or block structures are incompatible."""


class OutOfRange(MvtriError, ValueError):
    """A scalar lies outside the interval it is encoded on."""


class SingularTransform(MvtriError):
    """A 4x4 transform is not invertible to working precision."""


class OutOfFrustum(MvtriError):
    """Sampled scene points fall outside some camera's image."""
