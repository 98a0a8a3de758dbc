"""Exception types shared across the package."""


class VolintError(Exception):
    """Base class for all package errors."""


class EmptyMesh(VolintError):
    """Mesh has no vertices or no triangles."""


class UnrepairableOrientation(VolintError):
    """Face orientations contain a conflict cycle (e.g. a Moebius strip)."""


class IsolatedVertex(VolintError):
    """Queried vertex has no incident triangles."""


class DegenerateStar(VolintError):
    """Vertex star too degenerate to estimate a normal."""


class BizarreVertex(VolintError):
    """Vertex star violates the downward-normal assumption after rotation.

    Callers should fall back to the numeric solid-angle computation.
    """


class PointNotOnCurve(VolintError):
    """Query point is not a vertex of the polyline."""


class NonPositiveRadius(VolintError):
    """Radius must be > 0."""


class TangentialIntersection(VolintError):
    """Curve touches the circle tangentially; the touch point is skipped."""


class PointOnTriangle(VolintError):
    """Hypersingular integral evaluated at a point of the closed triangle."""


class TriangleNotInBall(VolintError):
    """Analytic triangle term requires the triangle inside the closed ball."""


class ZeroVolume(VolintError):
    """Covariance is undefined for a zero-volume moment set."""


class ConstantField(VolintError):
    """Field has zero spread; thresholding is meaningless."""


class UnsupportedFormat(VolintError):
    """File format not handled by the reader."""


class MalformedHeader(VolintError):
    """File header could not be parsed."""


class IndexOutOfRange(VolintError):
    """Face references a vertex index outside the vertex table."""
