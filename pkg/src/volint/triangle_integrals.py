"""Analytic kernel integrals over triangles and the ball-boundary bisection.

The |x|^-3 (hypersingular) integral over a triangle has a closed form built
from per-edge arctangents plus a term classifying the in-plane projection of
the query point against the triangle. Triangles crossing the ball boundary
are bisected along the longest side until each piece either leaves the
boundary or is small enough for the one-point centroid rule.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import PointOnTriangle, TriangleNotInBall
from .mesh import _cross_rows, _point_triangle_min_dist

KERNEL_KINDS = ("svi", "first-moment", "second-moment")


@dataclass
class BisectionConfig:
    """Boundary-triangle refinement tolerance (dimensionless)."""

    epsilon: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")


@dataclass
class BisectionStats:
    max_depth: int = 0
    max_leaves: int = 0


def side_length_limit(kind, r, epsilon):
    """Largest admissible sub-triangle side for a boundary triangle.

    For the volume kernel, the largest l < r with l^2 <= eps (r-l)^4 / r^2,
    found by bisection; for the moment kernels, min(eps*r, r).
    """
    if kind == "svi":
        lo, hi = 0.0, r
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if mid * mid * r * r <= epsilon * (r - mid) ** 4:
                lo = mid
            else:
                hi = mid
        return lo
    if kind in ("first-moment", "second-moment"):
        return min(epsilon * r, r)
    raise ValueError(f"unknown kernel kind {kind!r}")


def tri_areas(tris):
    """Areas of a (n, 3, 3) triangle batch."""
    cr = _cross_rows(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
    return 0.5 * np.sqrt(np.einsum("ij,ij->i", cr, cr))


def hypersingular_batch(tris, p):
    """Integral of |x - p|^-3 over each positively-oriented triangle.

    ``tris`` is (n, 3, 3); the plane normal is taken from the vertex order.
    The query point must not lie on any closed triangle.
    """
    tris = np.asarray(tris, dtype=np.float64)
    single = tris.ndim == 2
    if single:
        tris = tris[None]
    p = np.asarray(p, dtype=np.float64)
    y = tris - p  # work with the query point at the origin
    n = _cross_rows(y[:, 1] - y[:, 0], y[:, 2] - y[:, 0])
    n = n / np.sqrt(np.einsum("ij,ij->i", n, n))[:, None]
    eta = np.einsum("ij,ij->i", y[:, 0], n)
    xs = eta[:, None] * n  # projection of the origin onto each plane
    scale = np.max(np.linalg.norm(y, axis=2), axis=1)

    gam = np.zeros(len(y))
    q_signed = np.empty((len(y), 3))
    p_edge = np.empty((len(y), 3, 2))
    vnorm = np.linalg.norm(y, axis=2)
    snap = 1e-12 * np.maximum(scale, 1e-300)
    for i in range(3):
        a = y[:, i]
        b = y[:, (i + 1) % 3]
        e1 = b - a
        e1 = e1 / np.linalg.norm(e1, axis=1, keepdims=True)
        e2 = _cross_rows(n, e1)
        pa = np.einsum("ij,ij->i", a - xs, e1)
        pb = np.einsum("ij,ij->i", b - xs, e1)
        q = np.einsum("ij,ij->i", a - xs, e2)
        # snap the in-plane edge coordinates to zero at the same tolerance the
        # classifier uses, so the arctangent branch always matches the theta
        # convention for boundary projections
        pa = np.where(np.abs(pa) <= snap, 0.0, pa)
        pb = np.where(np.abs(pb) <= snap, 0.0, pb)
        q = np.where(np.abs(q) <= snap, 0.0, q)
        q_signed[:, i] = q
        p_edge[:, i, 0] = pa
        p_edge[:, i, 1] = pb
        ra = vnorm[:, i]
        rb = vnorm[:, (i + 1) % 3]
        # half-angle form of the per-edge arctangent: the full-angle ratio
        # -2pq\eta R / (q^2 R^2 - p^2 \eta^2) is tan(2a) with
        # tan(a) = -p\eta / (qR), and only the half angle stays on the
        # principal branch for every admissible configuration
        gam += 2.0 * (_atan_ratio(-pa * eta, q * ra) - _atan_ratio(-pb * eta, q * rb))

    theta = _classify_projection(y, q_signed, p_edge, xs, scale)
    out = (gam + 2.0 * np.sign(eta) * theta) / (2.0 * eta)
    return float(out[0]) if single else out


def _atan_ratio(num, den):
    """arctan(num / den) on the branch (-pi/2, pi/2), with den = 0 handled."""
    out = np.zeros_like(num)
    nz = den != 0.0
    out[nz] = np.arctan(num[nz] / den[nz])
    # den = 0 means the projected point sits on the edge line; the zero value
    # matches the boundary classification term, which then carries the jump
    return out


def _classify_projection(y, q_signed, p_edge, xs, scale):
    """Angle contribution of the projected query point: 0 outside the closed
    triangle, pi on an open edge, 2*pi inside, the interior angle at a vertex."""
    tol = 1e-12 * np.maximum(scale, 1e-300)
    theta = np.zeros(len(y))
    inside = np.all(q_signed < -tol[:, None], axis=1)
    theta[inside] = 2.0 * math.pi

    at_vertex = np.linalg.norm(y - xs[:, None, :], axis=2) <= tol[:, None]
    any_vertex = np.any(at_vertex, axis=1)
    for k in np.nonzero(any_vertex)[0]:
        i = int(np.argmax(at_vertex[k]))
        u = y[k, (i + 1) % 3] - y[k, i]
        w = y[k, (i + 2) % 3] - y[k, i]
        cosang = np.dot(u, w) / (np.linalg.norm(u) * np.linalg.norm(w))
        theta[k] = math.acos(min(1.0, max(-1.0, cosang)))

    near_edge = np.abs(q_signed) <= tol[:, None]
    others_inside = np.ones(len(y), dtype=bool)
    on_edge = np.zeros(len(y), dtype=bool)
    for i in range(3):
        j = [k for k in range(3) if k != i]
        cand = near_edge[:, i] & np.all(q_signed[:, j] < -tol[:, None], axis=1)
        lo = np.minimum(p_edge[:, i, 0], p_edge[:, i, 1])
        hi = np.maximum(p_edge[:, i, 0], p_edge[:, i, 1])
        cand &= (0.0 > lo + tol) & (0.0 < hi - tol)
        on_edge |= cand
    on_edge &= ~any_vertex & ~inside
    theta[on_edge] = math.pi
    _ = others_inside
    return theta


def hypersingular_integral(T, p):
    """Scalar wrapper around :func:`hypersingular_batch` for one triangle."""
    T = np.asarray(T, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if _point_triangle_min_dist(T, p) == 0.0:
        raise PointOnTriangle("query point lies on the closed triangle")
    return hypersingular_batch(T, p)


def svi_triangle_terms(tris, p, r, normals=None):
    """Analytic volume-kernel term for in-ball triangles (batched).

    (1/3) h (|T| - r^3 I) with h the constant plane offset (z - p) . nu and
    I the hypersingular integral. Triangles coplanar with p (relative offset
    below 1e-12 of their extent) contribute exactly zero; the analytic term
    is discontinuous in h there and would amplify roundoff.
    """
    tris = np.asarray(tris, dtype=np.float64)
    single = tris.ndim == 2
    if single:
        tris = tris[None]
    p = np.asarray(p, dtype=np.float64)
    if normals is None:
        cr = _cross_rows(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
        normals = cr / np.sqrt(np.einsum("ij,ij->i", cr, cr))[:, None]
    areas = tri_areas(tris)
    h = np.einsum("ij,ij->i", tris[:, 0] - p, normals)
    scale = np.max(np.linalg.norm(tris - p, axis=2), axis=1)
    live = np.abs(h) > 1e-12 * scale
    out = np.zeros(len(tris))
    if np.any(live):
        hyper = hypersingular_batch(tris[live], p)
        out[live] = (h[live] / 3.0) * (areas[live] - r ** 3 * hyper)
    return float(out[0]) if single else out


def svi_triangle_term(T, p, r):
    """Volume-kernel term for a single triangle fully inside the closed ball."""
    T = np.asarray(T, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if np.max(np.linalg.norm(T - p, axis=1)) > r * (1.0 + 1e-12):
        raise TriangleNotInBall("triangle reaches outside the closed ball")
    return svi_triangle_terms(T, p, r)


def linear_moment(T):
    """Componentwise integral of the coordinates over the triangle:
    a_i = (|T|/3)(x_i + y_i + z_i)."""
    T = np.asarray(T, dtype=np.float64)
    batch = T.ndim == 3
    area = tri_areas(T if batch else T[None])
    s = T.sum(axis=-2)
    out = (area[:, None] if batch else float(area[0])) / 3.0 * s
    return out


def quadratic_moment(T):
    """Integral of x_i x_j over the triangle:
    b = (|T|/12) (sum_v v v^T + diagonal-doubling), i.e. the vertex outer
    products with cross terms at half weight."""
    T = np.asarray(T, dtype=np.float64)
    batch = T.ndim == 3
    Tb = T if batch else T[None]
    area = tri_areas(Tb)
    outer = np.einsum("nki,nkj->nij", Tb, Tb)          # sum_v v v^T
    s = Tb.sum(axis=1)
    ssum = np.einsum("ni,nj->nij", s, s)               # (sum v)(sum v)^T
    b = (area[:, None, None] / 12.0) * (outer + ssum)
    return b if batch else b[0]


def _kernel_analytic(kind, tris, p, r, normal):
    """Exact in-ball kernel integrals; ``normal`` is one vector or one row
    per triangle."""
    nrm = np.ascontiguousarray(
        np.broadcast_to(np.asarray(normal, dtype=np.float64), (len(tris), 3)))
    if kind == "svi":
        return svi_triangle_terms(tris, p, r, normals=nrm)
    y = tris - p
    areas = tri_areas(tris)
    h = np.einsum("ij,ij->i", y[:, 0], nrm)
    a = linear_moment(y)
    if kind == "first-moment":
        return 0.25 * (h[:, None] * a - r * r * areas[:, None] * nrm)
    b = quadratic_moment(y)
    term = 2.0 * h[:, None, None] * b
    term -= r * r * (np.einsum("ni,nj->nij", a, nrm) + np.einsum("ni,nj->nij", nrm, a))
    return 0.1 * term


def _kernel_pointwise(kind, pts, p, r, normal, areas):
    """Centroid-rule values |T| f(centroid); zero outside the closed ball.

    ``normal`` may be a single vector or one row per point.
    """
    y = pts - p
    nrm = np.broadcast_to(np.asarray(normal, dtype=np.float64), y.shape)
    inside = np.einsum("ij,ij->i", y, y) <= r * r
    h = np.einsum("ij,ij->i", y, nrm)
    if kind == "svi":
        rho = np.linalg.norm(y, axis=1)
        val = (1.0 - (r / np.maximum(rho, 1e-300)) ** 3) * h / 3.0
        return np.where(inside, val * areas, 0.0)
    if kind == "first-moment":
        val = 0.25 * (h[:, None] * y - r * r * nrm)
        return np.where(inside[:, None], val * areas[:, None], 0.0)
    outer = np.einsum("ni,nj->nij", y, y)
    val = 2.0 * h[:, None, None] * outer
    val -= r * r * (np.einsum("ni,nj->nij", y, nrm) + np.einsum("ni,nj->nij", nrm, y))
    val *= 0.1
    return np.where(inside[:, None, None], val * areas[:, None, None], 0.0)


def _zeros(kind):
    if kind == "svi":
        return 0.0
    if kind == "first-moment":
        return np.zeros(3)
    return np.zeros((3, 3))


def integrate_boundary_batch(tris, normals, p, r, kind, cfg, stats=None):
    """Ball-clipped kernel integrals for many boundary triangles at once.

    Triangles already smaller than the side-length limit go straight to the
    one-point centroid rule in one vectorized pass; only larger ones enter
    the per-triangle bisection loop.
    """
    tris = np.asarray(tris, dtype=np.float64)
    normals = np.asarray(normals, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    ell = side_length_limit(kind, r, cfg.epsilon)
    total = _zeros(kind)
    if not len(tris):
        return total

    # level-synchronous bisection: every pending triangle is classified, the
    # survivors are split in one vectorized pass per level
    pend_t, pend_n = tris, normals
    depth = 0
    n_leaves = 0
    while len(pend_t):
        vd = np.linalg.norm(pend_t - p, axis=2)
        r2 = vd.max(axis=1)
        inside = r2 <= r
        if np.any(inside):
            total = total + _kernel_analytic(
                kind, pend_t[inside], p, r, pend_n[inside]).sum(axis=0)
            n_leaves += int(np.count_nonzero(inside))
        live = ~inside
        maybe_out = live & (vd.min(axis=1) > r)
        for t in np.nonzero(maybe_out)[0]:
            if _point_triangle_min_dist(pend_t[t], p) > r:
                live[t] = False
                n_leaves += 1
        sides = np.linalg.norm(pend_t - np.roll(pend_t, -1, axis=1), axis=2)
        longest = sides.max(axis=1)
        leaf = live & (longest <= ell)
        if np.any(leaf):
            cents = pend_t[leaf].mean(axis=1)
            total = total + _kernel_pointwise(kind, cents, p, r, pend_n[leaf],
                                              tri_areas(pend_t[leaf])).sum(axis=0)
            n_leaves += int(np.count_nonzero(leaf))
        split = live & ~leaf
        if not np.any(split):
            break
        st = pend_t[split]
        sn = pend_n[split]
        ss = sides[split]
        # near-ties (symmetric triangles) must split the same side after any
        # rigid motion, so pick the first side within rounding of the longest
        imax = np.argmax(ss >= ss.max(axis=1, keepdims=True) * (1.0 - 1e-12),
                         axis=1)
        rows = np.arange(len(st))
        a = st[rows, imax]
        b = st[rows, (imax + 1) % 3]
        c = st[rows, (imax + 2) % 3]
        mid = 0.5 * (a + b)
        pend_t = np.concatenate([
            np.stack([a, mid, c], axis=1),
            np.stack([mid, b, c], axis=1),
        ])
        pend_n = np.concatenate([sn, sn])
        depth += 1
    if stats is not None:
        stats.max_depth = max(stats.max_depth, depth)
        stats.max_leaves = max(stats.max_leaves, n_leaves)
    return total


def bisect_and_integrate(T, p, r, kind, cfg, stats=None, normal=None):
    """Integrate a ball-clipped kernel over a boundary triangle.

    Recursively bisects along the segment from the longest side's midpoint to
    the opposing vertex. A piece that no longer meets the ball boundary is
    finished analytically (inside) or dropped (outside); pieces smaller than
    the kernel-specific side limit get the one-point centroid rule.
    """
    T = np.asarray(T, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if normal is None:
        cr = np.cross(T[1] - T[0], T[2] - T[0])
        normal = cr / np.linalg.norm(cr)
    ell = side_length_limit(kind, r, cfg.epsilon)

    inside_leaves = []
    point_leaves = []
    max_depth = 0
    n_leaves = 0
    stack = [(T, 0)]
    while stack:
        tri, depth = stack.pop()
        d = tri - p
        vd = np.linalg.norm(d, axis=1)
        r2 = float(vd.max())
        if r2 <= r:
            inside_leaves.append(tri)
            n_leaves += 1
            max_depth = max(max_depth, depth)
            continue
        r1 = min(float(vd.min()), _point_triangle_min_dist(tri, p)) \
            if vd.min() > r else float(vd.min())
        if r1 > r:
            n_leaves += 1
            max_depth = max(max_depth, depth)
            continue
        sides = np.linalg.norm(tri - np.roll(tri, -1, axis=0), axis=1)
        imax = int(np.argmax(sides >= sides.max() * (1.0 - 1e-12)))
        if sides[imax] <= ell:
            point_leaves.append(tri)
            n_leaves += 1
            max_depth = max(max_depth, depth)
            continue
        a = tri[imax]
        b = tri[(imax + 1) % 3]
        c = tri[(imax + 2) % 3]
        mid = 0.5 * (a + b)
        stack.append((np.array([a, mid, c]), depth + 1))
        stack.append((np.array([mid, b, c]), depth + 1))

    if stats is not None:
        stats.max_depth = max(stats.max_depth, max_depth)
        stats.max_leaves = max(stats.max_leaves, n_leaves)

    total = _zeros(kind)
    if inside_leaves:
        arr = np.asarray(inside_leaves)
        total = total + _kernel_analytic(kind, arr, p, r, normal).sum(axis=0)
    if point_leaves:
        arr = np.asarray(point_leaves)
        cents = arr.mean(axis=1)
        areas = tri_areas(arr)
        total = total + _kernel_pointwise(kind, cents, p, r, normal, areas).sum(axis=0)
    return total
