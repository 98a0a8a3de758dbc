"""Circular area invariant of closed planar polylines.

Two independent routes: the boundary-integral kernel (with closed-form
per-edge arctangent integration and an interior-angle solid term), and the
divergence field plus in-disk circle-arc accounting. Both are exact for the
polygon up to roundoff.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveRadius, PointNotOnCurve

logger = logging.getLogger(__name__)

_SNAP = 1e-12


class PlanarCurve:
    """Closed oriented polyline; interior on the left (counterclockwise).

    The edge from the last point back to the first is implicit. Clockwise
    input is rejected unless ``allow_clockwise`` is set (used to represent
    the complement region).
    """

    def __init__(self, points, allow_clockwise=False):
        pts = np.ascontiguousarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
            raise ValueError("need at least 3 points of shape (n, 2)")
        if np.any(np.all(pts == np.roll(pts, -1, axis=0), axis=1)):
            raise ValueError("consecutive duplicate points")
        x, y = pts[:, 0], pts[:, 1]
        area2 = float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
        if area2 == 0.0:
            raise ValueError("degenerate polygon (zero signed area)")
        if area2 < 0.0 and not allow_clockwise:
            raise ValueError("polygon is clockwise; pass allow_clockwise or reverse")
        self.points = pts
        self.points.setflags(write=False)
        self.signed_area = 0.5 * area2

    @property
    def n(self):
        return len(self.points)

    def edge_lengths(self):
        d = np.roll(self.points, -1, axis=0) - self.points
        return np.linalg.norm(d, axis=1)

    def outward_normals(self):
        """Per-edge unit normal: edge direction rotated by -pi/2."""
        d = np.roll(self.points, -1, axis=0) - self.points
        L = np.linalg.norm(d, axis=1)
        return np.stack([d[:, 1], -d[:, 0]], axis=1) / L[:, None]

    def reversed(self):
        """Orientation-flipped copy (interior becomes the complement)."""
        return PlanarCurve(self.points[::-1], allow_clockwise=True)

    def vertex_index(self, p):
        p = np.asarray(p, dtype=np.float64)
        d = np.linalg.norm(self.points - p, axis=1)
        i = int(np.argmin(d))
        scale = max(1.0, float(np.abs(self.points).max()))
        if d[i] > 1e-9 * scale:
            raise PointNotOnCurve(f"{p} is not a vertex of the polyline")
        return i

    def contains(self, p):
        """Strict interior test by winding parity of the oriented polygon."""
        pts = self.points
        x, y = p
        x0, y0 = pts[:, 0], pts[:, 1]
        x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
        cond = (y0 <= y) != (y1 <= y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xs = x0 + (y - y0) / (y1 - y0) * (x1 - x0)
        crossings = np.count_nonzero(cond & (xs > x))
        inside_ccw = crossings % 2 == 1
        return inside_ccw if self.signed_area > 0 else not inside_ccw


@dataclass
class CircularAreaResult:
    value: float
    gamma: float
    kernel_term: float
    radius: float


def _interior_angle(curve, i):
    """Angle of the interior wedge at vertex i, in (0, 2*pi)."""
    pts = curve.points
    p = pts[i]
    u = pts[(i - 1) % curve.n] - p    # incoming neighbor
    w = pts[(i + 1) % curve.n] - p    # outgoing neighbor
    ang = (math.atan2(u[1], u[0]) - math.atan2(w[1], w[0])) % (2.0 * math.pi)
    if ang == 0.0:
        ang = math.pi  # straight vertex
    return ang


def _edge_clip(a, b, p, r):
    """Clip segment a-b to the closed disk around p.

    Returns (t_lo, t_hi, t_foot, q, d_signed, L) or None when the segment
    misses the disk; t is arclength from a, q the distance from p to the
    supporting line, d_signed the constant (x - p) . nu along the edge.
    """
    u = b - a
    L = float(np.linalg.norm(u))
    uh = u / L
    w = a - p
    tf = -float(np.dot(w, uh))
    nu = np.array([uh[1], -uh[0]])
    d = float(np.dot(w, nu))
    q2 = float(np.dot(w, w)) - tf * tf
    q2 = max(q2, 0.0)
    s2 = r * r - q2
    if s2 <= 0.0:
        if s2 == 0.0 and 0.0 <= tf <= L:
            logger.warning("edge tangent to the disk boundary; touch point skipped")
        return None
    s = math.sqrt(s2)
    t_lo, t_hi = tf - s, tf + s
    # snap roots to endpoints
    if abs(t_lo) < _SNAP * max(L, r):
        t_lo = 0.0
    if abs(t_hi - L) < _SNAP * max(L, r):
        t_hi = L
    t_lo = max(t_lo, 0.0)
    t_hi = min(t_hi, L)
    if t_hi <= t_lo:
        return None
    return t_lo, t_hi, tf, math.sqrt(q2), d, L


def circular_area_invariant(curve, p, r):
    """Area of interior cap disk via the boundary-integral formula.

    The per-edge kernel integrates analytically: (x-p).nu is constant along
    an edge and the inverse-square arclength integral is an arctangent in
    the coordinate along the edge. The solid term is the interior angle at p
    over 2*pi times pi r^2.
    """
    if r <= 0:
        raise NonPositiveRadius("radius must be > 0")
    i = curve.vertex_index(p)
    pv = curve.points[i]
    pts = curve.points
    n = curve.n
    kernel = 0.0
    for e in range(n):
        if e == i or (e + 1) % n == i:
            continue  # incident edges: (x - p) . nu = 0
        clip = _edge_clip(pts[e], pts[(e + 1) % n], pv, r)
        if clip is None:
            continue
        t_lo, t_hi, tf, q, d, _L = clip
        if q < 1e-300 or d == 0.0:
            continue
        inv_sq = (math.atan((t_hi - tf) / q) - math.atan((t_lo - tf) / q)) / q
        kernel += 0.5 * d * ((t_hi - t_lo) - r * r * inv_sq)
    gam = _interior_angle(curve, i) / (2.0 * math.pi)
    value = kernel + math.pi * r * r * gam
    return CircularAreaResult(value=value, gamma=gam, kernel_term=kernel,
                              radius=float(r))


def _circle_crossings(curve, pv, r):
    """Angles (about pv) where the polyline transversally crosses the circle."""
    pts = curve.points
    n = curve.n
    angles = []
    skipped = 0
    for e in range(n):
        a = pts[e]
        b = pts[(e + 1) % n]
        u = b - a
        L = float(np.linalg.norm(u))
        uh = u / L
        w = a - pv
        tf = -float(np.dot(w, uh))
        q2 = max(float(np.dot(w, w)) - tf * tf, 0.0)
        s2 = r * r - q2
        if s2 < 0.0:
            continue
        s = math.sqrt(s2)
        if s < _SNAP * r:
            skipped += 1  # tangential touch: the curve stays on one side
            continue
        for t in (tf - s, tf + s):
            if abs(t) < _SNAP * max(L, r):
                t = 0.0
            if abs(t - L) < _SNAP * max(L, r):
                t = L
            if 0.0 < t <= L:  # half-open: a vertex on the circle counts once
                x = a + t * uh
                angles.append(math.atan2(x[1] - pv[1], x[0] - pv[0]))
    if skipped:
        logger.warning("skipped %d tangential circle intersections", skipped)
    return sorted(a % (2.0 * math.pi) for a in angles), skipped


def circular_area_by_angles(curve, p, r):
    """Independent evaluation: divergence field on the curve plus the
    in-disk circle arcs, found by midpoint point-in-polygon tests."""
    if r <= 0:
        raise NonPositiveRadius("radius must be > 0")
    i = curve.vertex_index(p)
    pv = curve.points[i]
    pts = curve.points
    n = curve.n
    field_term = 0.0
    for e in range(n):
        clip = _edge_clip(pts[e], pts[(e + 1) % n], pv, r)
        if clip is None:
            continue
        t_lo, t_hi, _tf, _q, d, _L = clip
        field_term += 0.5 * d * (t_hi - t_lo)

    angles, _ = _circle_crossings(curve, pv, r)
    arc_total = 0.0
    if not angles:
        mid = pv + np.array([r, 0.0])
        if curve.contains(mid):
            arc_total = 2.0 * math.pi
    else:
        k = len(angles)
        for j in range(k):
            a0 = angles[j]
            a1 = angles[(j + 1) % k] + (2.0 * math.pi if j == k - 1 else 0.0)
            if a1 - a0 < 1e-14:
                continue
            amid = 0.5 * (a0 + a1)
            mid = pv + r * np.array([math.cos(amid), math.sin(amid)])
            if curve.contains(mid):
                arc_total += a1 - a0
    return field_term + 0.5 * r * r * arc_total


def curvature_from_area(value, r):
    """Curvature from the truncated small-radius area expansion."""
    if r <= 0:
        raise NonPositiveRadius("radius must be > 0")
    return 3.0 * (math.pi * r * r / 2.0 - value) / r ** 3


def global_area_invariant(curve, r):
    """Arclength-weighted average of the per-vertex invariant."""
    if r <= 0:
        raise NonPositiveRadius("radius must be > 0")
    L = curve.edge_lengths()
    weights = 0.5 * (L + np.roll(L, 1))   # local arclength share of each vertex
    vals = np.array([
        circular_area_invariant(curve, curve.points[i], r).value
        for i in range(curve.n)
    ])
    return float(np.sum(vals * weights) / np.sum(weights))
