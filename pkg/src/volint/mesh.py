"""Triangle-mesh data model: adjacency, orientation, validation, ball traversal."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyMesh, IndexOutOfRange, IsolatedVertex, UnrepairableOrientation

logger = logging.getLogger(__name__)


@dataclass
class MeshDiagnostics:
    nonmanifold_edges: list = field(default_factory=list)
    boundary_edge_count: int = 0
    isolated_vertices: list = field(default_factory=list)
    flipped_faces: int = 0
    is_closed: bool = True


class TriMesh:
    """Immutable indexed triangle surface with edge adjacency.

    Vertices are float64 (n, 3); faces are int64 (m, 3) with globally
    consistent orientation after :func:`build_mesh`. ``adjacency[t, i]`` is
    the triangle sharing the edge (faces[t, i], faces[t, (i+1)%3]), or -1
    for boundary/non-manifold edges. All queries are read-only.
    """

    def __init__(self, vertices, faces, adjacency, vertex_incidence, diagnostics):
        self.vertices = vertices
        self.faces = faces
        self.adjacency = adjacency
        self.vertex_incidence = vertex_incidence
        self.diagnostics = diagnostics
        for a in (self.vertices, self.faces, self.adjacency):
            a.setflags(write=False)
        e1 = vertices[faces[:, 1]] - vertices[faces[:, 0]]
        e2 = vertices[faces[:, 2]] - vertices[faces[:, 0]]
        cr = np.cross(e1, e2)
        nrm = np.linalg.norm(cr, axis=1)
        self.face_areas = 0.5 * nrm
        self.face_normals = cr / nrm[:, None]
        self.face_areas.setflags(write=False)
        self.face_normals.setflags(write=False)
        self._face_longest_edge = None

    @property
    def face_longest_edge(self):
        """Longest edge length per face; bounds how far a face extends past its vertices."""
        if self._face_longest_edge is None:
            v, f = self.vertices, self.faces
            le = np.zeros(self.n_faces)
            for i, j in ((0, 1), (1, 2), (2, 0)):
                d = v[f[:, j]] - v[f[:, i]]
                np.maximum(le, np.sqrt(np.einsum("ij,ij->i", d, d)), out=le)
            le.setflags(write=False)
            self._face_longest_edge = le
        return self._face_longest_edge

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def triangle(self, t):
        """Vertex coordinates of triangle ``t`` as a (3, 3) array."""
        return self.vertices[self.faces[t]]

    def enclosed_volume(self):
        """Signed volume by the divergence theorem; positive for outward orientation."""
        v = self.vertices
        f = self.faces
        return float(
            np.einsum("ij,ij->", v[f[:, 0]], np.cross(v[f[:, 1]], v[f[:, 2]]))
        ) / 6.0


@dataclass
class BallRegion:
    """Connected component of S cap B_r(p) found by triangle-graph DFS."""

    center_vertex: int
    radius: float
    interior: np.ndarray            # triangle indices with r2 <= r
    boundary: list                  # (triangle index, r1, r2) with r1 <= r <= r2
    touches_mesh_boundary: bool = False

    def triangle_indices(self):
        return set(self.interior.tolist()) | {t for t, _, _ in self.boundary}


def _edge_table(faces):
    """Undirected edge keys (3m, 2) sorted per row, plus the raw directed edges."""
    directed = np.stack(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=1
    ).reshape(-1, 2)
    und = np.sort(directed, axis=1)
    return und, directed


def _build_adjacency(faces):
    """Adjacency per half-edge; returns (adjacency, nonmanifold, n_boundary, conflicts).

    ``conflicts`` lists (face_a, face_b) pairs whose shared edge has the
    same direction in both faces (inconsistent orientation).
    """
    m = len(faces)
    und, directed = _edge_table(faces)
    order = np.lexsort((und[:, 1], und[:, 0]))
    und_s = und[order]
    is_new = np.ones(len(und_s), dtype=bool)
    is_new[1:] = np.any(und_s[1:] != und_s[:-1], axis=1)
    group_id = np.cumsum(is_new) - 1
    n_groups = group_id[-1] + 1 if len(group_id) else 0
    counts = np.bincount(group_id, minlength=n_groups)

    adjacency = np.full((m, 3), -1, dtype=np.int64)
    nonmanifold = []
    conflicts = []
    n_boundary = int(np.count_nonzero(counts == 1))

    starts = np.concatenate([[0], np.cumsum(counts)])
    for g in np.nonzero(counts >= 2)[0]:
        idxs = order[starts[g]:starts[g + 1]]
        if counts[g] > 2:
            a, b = und_s[starts[g]]
            nonmanifold.append((int(a), int(b)))
            continue
        i, j = idxs
        fa, fb = i // 3, j // 3
        adjacency[fa, i % 3] = fb
        adjacency[fb, j % 3] = fa
        if directed[i][0] == directed[j][0]:
            conflicts.append((int(fa), int(fb)))
    return adjacency, nonmanifold, n_boundary, conflicts


def _repair_orientation(faces, adjacency):
    """Flip faces so that shared edges run in opposite directions.

    BFS per connected component, flipping as needed; the final flip set of a
    component is inverted when the vote says more than half were flipped.
    Raises UnrepairableOrientation on a conflict cycle.
    """
    m = len(faces)
    directed = np.stack(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=1
    )
    flipped = np.zeros(m, dtype=bool)
    seen = np.zeros(m, dtype=bool)
    for root in range(m):
        if seen[root]:
            continue
        comp = [root]
        seen[root] = True
        stack = [root]
        while stack:
            t = stack.pop()
            for s in range(3):
                nb = adjacency[t, s]
                if nb < 0:
                    continue
                a, b = directed[t, s]
                # find the shared edge in the neighbor
                same_dir = False
                for s2 in range(3):
                    na, nb2 = directed[nb, s2]
                    if (na == a and nb2 == b):
                        same_dir = True
                        break
                    if (na == b and nb2 == a):
                        break
                want = flipped[t] ^ same_dir
                if not seen[nb]:
                    seen[nb] = True
                    flipped[nb] = want
                    comp.append(nb)
                    stack.append(nb)
                elif flipped[nb] != want:
                    raise UnrepairableOrientation(
                        f"orientation conflict between faces {t} and {nb}"
                    )
        comp = np.asarray(comp)
        if np.count_nonzero(flipped[comp]) * 2 > len(comp):
            flipped[comp] = ~flipped[comp]
    out = faces.copy()
    sel = np.nonzero(flipped)[0]
    out[sel] = out[sel][:, [0, 2, 1]]
    return out, len(sel)


def build_mesh(positions, faces):
    """Validate and assemble a :class:`TriMesh`.

    Repairs inconsistent face orientation (majority vote per component),
    records non-manifold edges and isolated vertices as diagnostics rather
    than errors, and rejects empty input, bad indices, repeated vertices
    within a face, and zero-area triangles.
    """
    v = np.ascontiguousarray(positions, dtype=np.float64)
    f = np.ascontiguousarray(faces, dtype=np.int64)
    if v.ndim != 2 or v.shape[1] != 3:
        raise ValueError("positions must be (n, 3)")
    if f.ndim != 2 or f.shape[1] != 3:
        raise ValueError("faces must be (m, 3)")
    if len(v) == 0 or len(f) == 0:
        raise EmptyMesh("mesh has no vertices or no faces")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite vertex coordinate")
    if f.min() < 0 or f.max() >= len(v):
        raise IndexOutOfRange(f"face index out of range [0, {len(v)})")
    if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])):
        raise ValueError("face repeats a vertex index")
    cr = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
    if np.any(np.linalg.norm(cr, axis=1) == 0.0):
        raise ValueError("zero-area triangle")

    adjacency, nonmanifold, n_boundary, conflicts = _build_adjacency(f)
    n_flipped = 0
    if conflicts:
        f, n_flipped = _repair_orientation(f, adjacency)
        adjacency, nonmanifold, n_boundary, conflicts = _build_adjacency(f)
        if conflicts:
            raise UnrepairableOrientation("orientation conflicts persist after repair")

    incidence = [[] for _ in range(len(v))]
    for t, (a, b, c) in enumerate(f.tolist()):
        incidence[a].append(t)
        incidence[b].append(t)
        incidence[c].append(t)
    isolated = [i for i, inc in enumerate(incidence) if not inc]
    incidence = [np.asarray(inc, dtype=np.int64) for inc in incidence]

    diag = MeshDiagnostics(
        nonmanifold_edges=nonmanifold,
        boundary_edge_count=n_boundary,
        isolated_vertices=isolated,
        flipped_faces=n_flipped,
        is_closed=(n_boundary == 0 and not nonmanifold),
    )
    if nonmanifold:
        logger.warning("mesh has %d non-manifold edges; results may be unreliable",
                       len(nonmanifold))
    if n_boundary:
        logger.info("surface not closed: %d boundary edges", n_boundary)
    return TriMesh(v, f, adjacency, incidence, diag)


def _point_triangle_min_dist(tri, p):
    """Exact closed-form distance from ``p`` to the closed triangle ``tri``."""
    a, b, c = tri
    n = np.cross(b - a, c - a)
    nn = n / np.linalg.norm(n)
    eta = float(np.dot(a - p, nn))
    xp = p + eta * nn  # projection of p onto the plane
    # inside test via edge half-planes in the plane
    inside = True
    for u, w in ((a, b), (b, c), (c, a)):
        inward = np.cross(nn, w - u)
        if np.dot(xp - u, inward) < 0.0:
            inside = False
            break
    if inside:
        return abs(eta)
    # closest point on the boundary, then Pythagoras
    best2 = math.inf
    for u, w in ((a, b), (b, c), (c, a)):
        d = w - u
        t = float(np.dot(xp - u, d) / np.dot(d, d))
        t = min(1.0, max(0.0, t))
        q = u + t * d
        dd = float(np.dot(xp - q, xp - q))
        if dd < best2:
            best2 = dd
    return math.sqrt(eta * eta + best2)


def triangle_distance_bounds(mesh, p, t):
    """(r1, r2): min and max of |x - p| over the closed triangle ``t``."""
    tri = mesh.triangle(t)
    p = np.asarray(p, dtype=np.float64)
    r2 = float(np.max(np.linalg.norm(tri - p, axis=1)))
    r1 = _point_triangle_min_dist(tri, p)
    return r1, r2


def _cross_rows(a, b):
    """Row-wise cross product without the axis bookkeeping of np.cross."""
    out = np.empty_like(a)
    out[:, 0] = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    out[:, 1] = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    out[:, 2] = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return out


def _point_tri_dist_batch(tris, p):
    """Exact distances from ``p`` to a (n, 3, 3) batch of closed triangles."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    n = _cross_rows(b - a, c - a)
    n = n / np.sqrt(np.einsum("ij,ij->i", n, n))[:, None]
    eta = np.einsum("ij,ij->i", a - p, n)
    q = p + eta[:, None] * n
    inside = np.ones(len(tris), dtype=bool)
    best2 = np.full(len(tris), np.inf)
    for u, w in ((a, b), (b, c), (c, a)):
        d = w - u
        qu = q - u
        inside &= np.einsum("ij,ij->i", qu, _cross_rows(n, d)) >= 0.0
        t = np.einsum("ij,ij->i", qu, d) / np.einsum("ij,ij->i", d, d)
        np.clip(t, 0.0, 1.0, out=t)
        f = u + t[:, None] * d - q
        best2 = np.minimum(best2, np.einsum("ij,ij->i", f, f))
    out = np.sqrt(eta * eta + best2)
    out[inside] = np.abs(eta[inside])
    return out


def collect_ball_region(mesh, p, r):
    """DFS over edge adjacency from the triangles incident to vertex ``p``.

    A triangle is visited when its minimum distance r1 to p is <= r;
    visited triangles with r2 <= r are interior, the rest boundary. Other
    connected components of S cap B_r are deliberately not explored.
    """
    if r <= 0.0:
        raise ValueError("radius must be > 0")
    inc = mesh.vertex_incidence[p]
    if len(inc) == 0:
        raise IsolatedVertex(f"vertex {p} has no incident triangles")
    pvec = mesh.vertices[p]
    faces = mesh.faces
    adj = mesh.adjacency
    vcoords = mesh.vertices

    interior = []
    rim_tris = []
    rim_dmax = []
    far_rim = []                    # (t, r1, r2) for triangles with all vertices outside
    deferred = []                   # candidate triangles awaiting an exact distance test
    touches = False
    visited = np.zeros(len(faces), dtype=bool)
    frontier = np.asarray(inc, dtype=np.int64)
    visited[frontier] = True
    # one adjacency step moves the farthest triangle vertex by at most the
    # longest edge in the mesh, so deep inside the ball whole rings can be
    # accepted as interior without distance tests
    longest = float(mesh.face_longest_edge.max()) if len(faces) else 0.0
    # maxd is an upper bound on the largest |vertex - p| in the current frontier
    maxd = math.inf
    while True:
        if not len(frontier):
            # triangles whose vertices are all outside may still dip into the
            # ball; settle them in one batch and resume traversal from any hits
            if not deferred:
                break
            cand = np.concatenate(deferred)
            deferred = []
            tp = vcoords[faces[cand]]
            r1s = _point_tri_dist_batch(tp, pvec)
            hit = r1s <= r
            if not np.any(hit):
                break
            d = tp[hit] - pvec
            vd2 = np.einsum("ntj,ntj->nt", d, d)
            far_rim.extend(zip(cand[hit].tolist(), r1s[hit].tolist(),
                               np.sqrt(vd2.max(axis=1)).tolist()))
            nbrs = adj[cand[hit]].ravel()
            if np.any(nbrs < 0):
                touches = True
            nbrs = nbrs[nbrs >= 0]
            fresh = nbrs[~visited[nbrs]]
            frontier = np.unique(fresh)
            visited[frontier] = True
            maxd = math.inf
            continue
        if maxd <= r:
            interior.append(frontier)
            nbrs = adj[frontier].ravel()
            if np.any(nbrs < 0):
                touches = True
            nbrs = nbrs[nbrs >= 0]
            fresh = nbrs[~visited[nbrs]]
            frontier = np.unique(fresh)
            visited[frontier] = True
            maxd += longest
            continue
        tri_pts = vcoords[faces[frontier]]
        d = tri_pts - pvec
        vd2 = np.einsum("ntj,ntj->nt", d, d)
        dmin = np.sqrt(vd2.min(axis=1))
        dmax = np.sqrt(vd2.max(axis=1))
        accept = dmin <= r
        # vertices all outside: the triangle can only dip into the ball if its
        # closest vertex is within one edge length of it; defer those few
        far = ~accept & (dmin <= r + mesh.face_longest_edge[frontier])
        if np.any(far):
            deferred.append(frontier[far])
        maxd = (float(dmax[accept].max()) + longest) if np.any(accept) else math.inf
        inner = accept & (dmax <= r)
        interior.append(frontier[inner])
        rim = accept & ~inner
        if np.any(rim):
            rim_tris.append(frontier[rim])
            rim_dmax.append(dmax[rim])
        nbrs = adj[frontier[accept]].ravel()
        if np.any(nbrs < 0):
            touches = True
        nbrs = nbrs[nbrs >= 0]
        fresh = nbrs[~visited[nbrs]]
        frontier = np.unique(fresh)
        visited[frontier] = True
    boundary = far_rim
    if rim_tris:
        rim_all = np.concatenate(rim_tris)
        r1s = _point_tri_dist_batch(vcoords[faces[rim_all]], pvec)
        boundary = boundary + list(zip(rim_all.tolist(), r1s.tolist(),
                                       np.concatenate(rim_dmax).tolist()))
    interior = np.concatenate(interior) if interior else np.empty(0, np.int64)
    return BallRegion(
        center_vertex=p,
        radius=float(r),
        interior=np.sort(interior.astype(np.int64)),
        boundary=sorted(boundary),
        touches_mesh_boundary=touches,
    )
