"""Solid-angle fraction at a mesh vertex: the share of a vanishing sphere
around the vertex that lies inside the enclosed region.

The closed form integrates, triangle by triangle, the height of the great
circle in which the (radially extended) triangle plane cuts the unit sphere;
the antiderivative is an arcsin of the tilted-normal magnitude. The numeric
cross-check measures the same region as a spherical polygon via its angle
excess.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BizarreVertex, DegenerateStar

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
_POLE_TOL = 1e-12


def estimate_vertex_normal(mesh, p, mode="average"):
    """Unit outward normal estimate at vertex ``p``.

    Modes: ``average`` (unweighted mean of incident face normals,
    the default), ``area-weighted``, and ``lsq-plane`` (normal of the least
    squares plane through the neighboring vertices, sign-aligned with the
    average normal).
    """
    inc = mesh.vertex_incidence[p]
    if len(inc) == 0:
        raise DegenerateStar(f"vertex {p} has no incident triangles")
    normals = mesh.face_normals[inc]
    if mode == "area-weighted":
        avg = (normals * mesh.face_areas[inc][:, None]).sum(axis=0)
    else:
        avg = normals.sum(axis=0)
    n = np.linalg.norm(avg)
    if n < 1e-12:
        raise DegenerateStar(f"vertex {p}: face normals cancel")
    avg = avg / n
    if mode != "lsq-plane":
        return avg
    ring = np.unique(mesh.faces[inc])
    pts = mesh.vertices[ring] - mesh.vertices[p]
    pts = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts, full_matrices=False)
    nrm = vt[-1]
    if np.dot(nrm, avg) < 0:
        nrm = -nrm
    return nrm


def _rotation_to_minus_z(normal):
    """Rotation matrix taking ``normal`` to (0, 0, -1)."""
    target = np.array([0.0, 0.0, -1.0])
    v = np.cross(normal, target)
    c = float(np.dot(normal, target))
    s = np.linalg.norm(v)
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        return np.diag([1.0, -1.0, -1.0])  # any half-turn through the x-axis
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx * ((1 - c) / (s * s))


@dataclass
class VertexStar:
    """Incident-triangle fan at a vertex, rotated so the estimated normal
    points to (0, 0, -1) and the vertex sits at the origin."""

    center: np.ndarray
    vertex_normal: np.ndarray
    tri_normals: np.ndarray      # (k, 3) rotated per-triangle unit normals
    spans: np.ndarray            # (k, 2) azimuth intervals [start, end], end >= start
    edge_dirs: np.ndarray        # (k, 2, 3) rotated unit edge dirs (start, end)
    closed: bool
    bizarre: bool = False
    bizarre_reason: str = ""
    flags: list = field(default_factory=list)


def build_vertex_star(mesh, p, normal_mode="average"):
    """Assemble the rotated vertex star of ``p``."""
    nu = estimate_vertex_normal(mesh, p, normal_mode)
    rot = _rotation_to_minus_z(nu)
    center = mesh.vertices[p]
    inc = mesh.vertex_incidence[p]
    k = len(inc)
    fv = mesh.faces[inc]
    roll = np.argmax(fv == p, axis=1)
    rows = np.arange(k)
    u = (mesh.vertices[fv[rows, (roll + 1) % 3]] - center) @ rot.T
    w = (mesh.vertices[fv[rows, (roll + 2) % 3]] - center) @ rot.T
    n = np.empty((k, 3))
    n[:, 0] = u[:, 1] * w[:, 2] - u[:, 2] * w[:, 1]
    n[:, 1] = u[:, 2] * w[:, 0] - u[:, 0] * w[:, 2]
    n[:, 2] = u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]
    tri_normals = n / np.sqrt(np.einsum("ij,ij->i", n, n))[:, None]
    un = np.sqrt(np.einsum("ij,ij->i", u, u))
    wn = np.sqrt(np.einsum("ij,ij->i", w, w))
    bizarre = False
    reason = ""
    if np.any(tri_normals[:, 2] >= 0.0):
        bizarre = True
        t = int(inc[np.argmax(tri_normals[:, 2] >= 0.0)])
        reason = f"triangle {t}: rotated normal not downward"
    on_pole = (np.hypot(u[:, 0], u[:, 1]) < _POLE_TOL * un) \
        | (np.hypot(w[:, 0], w[:, 1]) < _POLE_TOL * wn)
    if np.any(on_pole):
        bizarre = True
        reason = f"triangle {int(inc[np.argmax(on_pole)])}: vertex edge along the pole"
    # the outward-oriented triangle (p, u, w) runs clockwise seen from
    # above, so its azimuthal span goes counterclockwise from w to u
    th_u = np.arctan2(u[:, 1], u[:, 0]) % TWO_PI
    th_w = np.arctan2(w[:, 1], w[:, 0]) % TWO_PI
    width = (th_u - th_w) % TWO_PI
    if np.any(width >= math.pi):
        bizarre = True
        reason = f"triangle {int(inc[np.argmax(width >= math.pi)])}: azimuthal span >= pi"
    spans = np.stack([th_w, th_w + width], axis=1)
    edge_dirs = np.stack([w / wn[:, None], u / un[:, None]], axis=1)
    total = float(np.sum(width))
    closed = abs(total - TWO_PI) < 1e-9
    return VertexStar(
        center=center,
        vertex_normal=nu,
        tri_normals=tri_normals,
        spans=spans,
        edge_dirs=edge_dirs,
        closed=closed,
        bizarre=bizarre,
        bizarre_reason=reason,
    )


def gamma(star):
    """Closed-form solid-angle fraction of a non-bizarre vertex star.

    An open star (boundary vertex) is treated as flat over the uncovered
    azimuth range. Raises :class:`BizarreVertex` when the downward-normal
    assumption fails; use :func:`gamma_numeric` then.
    """
    if star.bizarre:
        raise BizarreVertex(star.bizarre_reason)
    n = star.tri_normals
    d = np.hypot(n[:, 0], n[:, 1])
    d = np.clip(d, 0.0, 1.0)
    delta = np.arctan2(n[:, 1], n[:, 0]) % TWO_PI
    s_end = np.clip(d * np.sin(star.spans[:, 1] - delta), -1.0, 1.0)
    s_start = np.clip(d * np.sin(star.spans[:, 0] - delta), -1.0, 1.0)
    val = 0.5 - float(np.sum(np.arcsin(s_end) - np.arcsin(s_start))) / (4.0 * math.pi)
    return min(1.0, max(0.0, val))


def _chain_star(star):
    """Order star triangles into a fan; returns (order, polygon vertices)."""
    k = len(star.spans)
    order = np.argsort(star.spans[:, 0] % TWO_PI)
    starts = star.spans[order, 0] % TWO_PI
    ends = star.spans[order, 1] % TWO_PI
    for i in range(k):
        nxt = starts[(i + 1) % k]
        gap = abs((ends[i] - nxt + math.pi) % TWO_PI - math.pi)
        if gap > 1e-7:
            return None, None
    verts = star.edge_dirs[order, 0]  # start edge of each triangle, in fan order
    return order, verts


def _spherical_polygon_gamma(normals, verts):
    """Area fraction of the region above a fan of great-circle arcs.

    ``verts[i]`` joins arc ``i-1`` to arc ``i``; the polygon is traversed in
    increasing azimuth and the region containing the +z pole lies on its
    left, so its area is the angle excess of the interior angles.
    """
    k = len(verts)
    angle_sum = 0.0
    for i in range(k):
        v = verts[i]
        a = verts[(i - 1) % k]
        b = verts[(i + 1) % k]
        ta = a - np.dot(a, v) * v
        tb = b - np.dot(b, v) * v
        na, nb = np.linalg.norm(ta), np.linalg.norm(tb)
        if na < 1e-14 or nb < 1e-14:
            return None
        ta /= na
        tb /= nb
        ang = math.atan2(float(np.dot(np.cross(tb, ta), v)), float(np.dot(tb, ta)))
        angle_sum += ang % TWO_PI
    area = angle_sum - (k - 2) * math.pi
    return area / (4.0 * math.pi)


def _montecarlo_gamma(star, n=4_000_000, seed=0):
    """Last-resort estimate for stars that do not chain into a fan."""
    rng = np.random.default_rng(seed)
    z = rng.uniform(-1.0, 1.0, n)
    th = rng.uniform(0.0, TWO_PI, n)
    s = np.sqrt(1.0 - z * z)
    pts = np.stack([s * np.cos(th), s * np.sin(th), z], axis=1)
    starts = star.spans[:, 0] % TWO_PI
    widths = star.spans[:, 1] - star.spans[:, 0]
    inside = np.zeros(n, dtype=bool)
    claimed = np.zeros(n, dtype=bool)
    for i in range(len(starts)):
        rel = (th - starts[i]) % TWO_PI
        sel = (rel <= widths[i]) & ~claimed
        claimed |= sel
        inside[sel] = pts[sel] @ star.tri_normals[i] < 0.0
    return float(np.mean(inside))


def gamma_numeric(star):
    """Solid-angle fraction measured directly on the unit sphere.

    The radially extended star cuts the sphere along great-circle arcs; the
    region above is a spherical polygon whose area follows from its angle
    excess. Independent of the arcsin antiderivative used by :func:`gamma`.
    Falls back to Monte Carlo (with a warning) for stars that do not chain
    into a single fan.
    """
    if star.closed:
        order, verts = _chain_star(star)
        if order is not None:
            val = _spherical_polygon_gamma(star.tri_normals[order], verts)
            if val is not None:
                return min(1.0, max(0.0, val))
    if star.closed:
        logger.warning("vertex star does not chain into a fan; Monte Carlo fallback")
        return _montecarlo_gamma(star)
    # open star: integrate each span's height numerically, flat elsewhere
    from scipy.integrate import quad

    covered = 0.0
    acc = 0.0
    for i, (a, b) in enumerate(star.spans):
        nx, ny, nz = star.tri_normals[i]
        ci = math.hypot(nx, ny) / abs(nz)
        de = math.atan2(ny, nx)

        def g(th, ci=ci, de=de):
            u = ci * math.cos(th - de)
            return u / math.sqrt(1.0 + u * u)

        val, _ = quad(g, a, b, epsabs=1e-10, limit=200)
        acc += val
        covered += b - a
    val = 0.5 - acc / (4.0 * math.pi)
    return min(1.0, max(0.0, val))


def gamma_of_vertex(mesh, p, normal_mode="average"):
    """Gamma at mesh vertex ``p``; returns (value, used_numeric_fallback)."""
    star = build_vertex_star(mesh, p, normal_mode)
    if not star.bizarre:
        return gamma(star), False
    logger.debug("vertex %d is bizarre (%s); numeric fallback", p, star.bizarre_reason)
    return gamma_numeric(star), True
