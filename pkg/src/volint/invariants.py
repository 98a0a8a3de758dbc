"""Spherical volume invariant, ball moments, PCA covariance and curvature."""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroVolume
from .gamma import gamma_of_vertex
from .mesh import collect_ball_region
from .triangle_integrals import (
    BisectionConfig,
    hypersingular_batch,  # noqa: F401  (re-export convenience)
    integrate_boundary_batch,
    svi_triangle_terms,
    tri_areas,
    linear_moment,
    quadratic_moment,
)

logger = logging.getLogger(__name__)

QUANTITIES = ("svi", "mean", "gauss", "k1", "k2")


@dataclass
class MomentSet:
    """Zeroth, first and second moments of the ball-clipped interior region."""

    volume: float
    m: np.ndarray          # (3,) first moments, length^4
    c: np.ndarray          # (3, 3) second moments, length^5
    radius: float

    @property
    def centroid_offset(self):
        return self.m / self.volume


@dataclass
class CurvatureEstimate:
    lam: np.ndarray        # eigenvalues, descending
    kappa1: float
    kappa2: float
    dir1: np.ndarray
    dir2: np.ndarray
    normal_est: np.ndarray
    near_umbilic: bool

    @property
    def mean(self):
        return 0.5 * (self.kappa1 + self.kappa2)

    @property
    def gauss(self):
        return self.kappa1 * self.kappa2


def _svi_parts(mesh, p, r, cfg, region=None, stats=None):
    """Kernel integral over the region (without the solid-angle term)."""
    if region is None:
        region = collect_ball_region(mesh, p, r)
    incident = set(mesh.vertex_incidence[p].tolist())
    interior = [t for t in region.interior.tolist() if t not in incident]
    total = 0.0
    if interior:
        idx = np.asarray(interior, dtype=np.int64)
        tris = mesh.vertices[mesh.faces[idx]]
        nrm = mesh.face_normals[idx]
        total += float(np.sum(svi_triangle_terms(tris, np.asarray(mesh.vertices[p]), r,
                                                 normals=nrm)))
    pvec = mesh.vertices[p]
    btris = [t for t, _r1, _r2 in region.boundary if t not in incident]
    if btris:
        idx = np.asarray(btris, dtype=np.int64)
        total += float(integrate_boundary_batch(
            mesh.vertices[mesh.faces[idx]], mesh.face_normals[idx],
            pvec, r, "svi", cfg, stats=stats))
    return total, region


def spherical_volume_invariant(mesh, p, r, cfg=None, normal_mode="average",
                               region=None, gamma_value=None, stats=None):
    """Volume of the enclosed region clipped to the ball B_r(p), p a vertex.

    Sum of analytic in-ball triangle terms, bisected boundary-triangle
    terms, and (4/3) pi r^3 times the vertex solid-angle fraction.
    """
    cfg = cfg or BisectionConfig()
    kernel, region = _svi_parts(mesh, p, r, cfg, region=region, stats=stats)
    if gamma_value is None:
        gamma_value, _ = gamma_of_vertex(mesh, p, normal_mode)
    return kernel + (4.0 / 3.0) * math.pi * r ** 3 * gamma_value


def mean_curvature_from_svi(V, r):
    """Truncated inversion of the small-radius volume expansion."""
    if r <= 0:
        raise ValueError("radius must be > 0")
    return 4.0 * ((2.0 / 3.0) * math.pi * r ** 3 - V) / (math.pi * r ** 4)


def _moment_parts(mesh, p, r, cfg, region):
    """Surface integrals feeding the first and second volume moments."""
    pvec = np.asarray(mesh.vertices[p])
    m_int = np.zeros(3)
    c_int = np.zeros((3, 3))
    interior = region.interior
    if len(interior):
        tris = mesh.vertices[mesh.faces[interior]]
        nrm = mesh.face_normals[interior]
        y = tris - pvec
        areas = tri_areas(tris)
        h = np.einsum("nj,nj->n", y[:, 0], nrm)
        a = linear_moment(y)
        b = quadratic_moment(y)
        m_int += (0.25 * (h[:, None] * a - r * r * areas[:, None] * nrm)).sum(axis=0)
        term = 2.0 * h[:, None, None] * b
        term -= r * r * (np.einsum("ni,nj->nij", a, nrm) + np.einsum("ni,nj->nij", nrm, a))
        c_int += (0.1 * term).sum(axis=0)
    btris = [t for t, _r1, _r2 in region.boundary]
    if btris:
        idx = np.asarray(btris, dtype=np.int64)
        tris = mesh.vertices[mesh.faces[idx]]
        nrm = mesh.face_normals[idx]
        m_int += integrate_boundary_batch(tris, nrm, pvec, r, "first-moment", cfg)
        c_int += integrate_boundary_batch(tris, nrm, pvec, r, "second-moment", cfg)
    return m_int, c_int


def moment_set(mesh, p, r, cfg=None, normal_mode="average"):
    """Volume, first and second moments of the ball-clipped region at vertex p."""
    cfg = cfg or BisectionConfig()
    region = collect_ball_region(mesh, p, r)
    V = spherical_volume_invariant(mesh, p, r, cfg, normal_mode, region=region)
    m, c_surf = _moment_parts(mesh, p, r, cfg, region)
    c = (r * r / 5.0) * V * np.eye(3) + c_surf
    c = 0.5 * (c + c.T)
    return MomentSet(volume=V, m=m, c=c, radius=float(r))


def covariance_matrix(ms):
    """Central second-moment (PCA) matrix of the clipped region."""
    if ms.volume <= 0.0:
        raise ZeroVolume("moment set has non-positive volume")
    return ms.c - np.outer(ms.m, ms.m) / ms.volume


_UMBILIC_REL = 1e-3


def curvature_estimate(M, r, reference_normal=None):
    """Principal curvatures and directions from the PCA matrix.

    Inverts the truncated eigenvalue expansions: with
    A_i = 48 (2 pi r^5 / 15 - lambda_i) / (pi r^6), the system
    3 k1 + k2 = A_1, k1 + 3 k2 = A_2.
    """
    if r <= 0:
        raise ValueError("radius must be > 0")
    M = 0.5 * (np.asarray(M, dtype=np.float64) + np.asarray(M).T)
    w, vecs = np.linalg.eigh(M)       # ascending
    lam = w[::-1]
    vecs = vecs[:, ::-1]
    base = 2.0 * math.pi * r ** 5 / 15.0
    scale = 48.0 / (math.pi * r ** 6)
    # larger curvature depresses its eigenvalue more, so the smaller of the
    # two tangential eigenvalues pairs with kappa1
    A1 = scale * (base - lam[1])
    A2 = scale * (base - lam[0])
    k1 = (3.0 * A1 - A2) / 8.0
    k2 = (3.0 * A2 - A1) / 8.0
    normal = vecs[:, 2]
    if reference_normal is not None and float(np.dot(normal, reference_normal)) < 0.0:
        normal = -normal
    return CurvatureEstimate(
        lam=lam,
        kappa1=k1,
        kappa2=k2,
        dir1=vecs[:, 1],
        dir2=vecs[:, 0],
        normal_est=normal,
        near_umbilic=abs(lam[0] - lam[1]) < _UMBILIC_REL * r ** 5,
    )


def curvature_at_vertex(mesh, p, r, cfg=None, normal_mode="average"):
    """Full per-vertex PCA curvature pipeline."""
    ms = moment_set(mesh, p, r, cfg, normal_mode)
    M = covariance_matrix(ms)
    from .gamma import estimate_vertex_normal

    ref = estimate_vertex_normal(mesh, p, normal_mode)
    return curvature_estimate(M, r, reference_normal=ref)


@dataclass
class ScalarField:
    """Per-vertex scalar values of one invariant at one radius."""

    mesh: object
    radius: float
    quantity: str
    values: np.ndarray
    flags: dict = field(default_factory=dict)   # vertex -> list of str

    def __post_init__(self):
        if len(self.values) != self.mesh.n_vertices:
            raise ValueError("value count must equal vertex count")
        if self.radius <= 0:
            raise ValueError("radius must be > 0")

    def area_weighted_mean(self):
        """Surface-area-weighted global average of the field."""
        w = np.zeros(self.mesh.n_vertices)
        per_corner = np.repeat(self.mesh.face_areas / 3.0, 3)
        np.add.at(w, self.mesh.faces.ravel(), per_corner)
        mask = np.isfinite(self.values)
        return float(np.sum(self.values[mask] * w[mask]) / np.sum(w[mask]))


_POOL_MESH = None
_POOL_ARGS = None


def _field_worker(chunk):
    mesh, (r, quantity, cfg, normal_mode) = _POOL_MESH, _POOL_ARGS
    return [_vertex_value(mesh, p, r, quantity, cfg, normal_mode) for p in chunk]


def _pool_init(mesh, args):
    global _POOL_MESH, _POOL_ARGS
    _POOL_MESH = mesh
    _POOL_ARGS = args


def _vertex_value(mesh, p, r, quantity, cfg, normal_mode):
    """(value, direction-or-None, flags) for one vertex."""
    flags = []
    if len(mesh.vertex_incidence[p]) == 0:
        return math.nan, None, ["isolated"]
    gam, fallback = gamma_of_vertex(mesh, p, normal_mode)
    if fallback:
        flags.append("bizarre")
    region = collect_ball_region(mesh, p, r)
    if region.touches_mesh_boundary:
        flags.append("boundary")
    if quantity == "svi":
        v = spherical_volume_invariant(mesh, p, r, cfg, normal_mode,
                                       region=region, gamma_value=gam)
        return v, None, flags
    V = spherical_volume_invariant(mesh, p, r, cfg, normal_mode,
                                   region=region, gamma_value=gam)
    m, c_surf = _moment_parts(mesh, p, r, cfg, region)
    c = (r * r / 5.0) * V * np.eye(3) + c_surf
    ms = MomentSet(volume=V, m=m, c=0.5 * (c + c.T), radius=r)
    if ms.volume <= 0.0:
        return math.nan, None, flags + ["zero-volume"]
    from .gamma import estimate_vertex_normal

    ref = estimate_vertex_normal(mesh, p, normal_mode)
    est = curvature_estimate(covariance_matrix(ms), r, reference_normal=ref)
    if est.near_umbilic:
        flags.append("near-umbilic")
    if quantity == "mean":
        return est.mean, None, flags
    if quantity == "gauss":
        return est.gauss, None, flags
    if quantity == "k1":
        return est.kappa1, est.dir1, flags
    if quantity == "k2":
        return est.kappa2, est.dir2, flags
    raise ValueError(f"unknown quantity {quantity!r}")


def invariant_field(mesh, r, quantity="svi", cfg=None, workers=1,
                    normal_mode="average", return_directions=False):
    """Evaluate one invariant at every vertex.

    Deterministic regardless of ``workers``: each vertex is independent and
    its triangle summation order is fixed by triangle index.
    """
    if quantity not in QUANTITIES:
        raise ValueError(f"quantity must be one of {QUANTITIES}")
    cfg = cfg or BisectionConfig()
    n = mesh.n_vertices
    args = (float(r), quantity, cfg, normal_mode)
    indices = list(range(n))
    if workers is None:
        workers = int(os.environ.get("VOLINT_WORKERS", "1"))
    if workers > 1 and n > 1:
        chunks = [indices[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers, initializer=_pool_init,
                                 initargs=(mesh, args)) as ex:
            parts = list(ex.map(_field_worker, chunks))
        results = [None] * n
        for chunk, part in zip(chunks, parts):
            for p, res in zip(chunk, part):
                results[p] = res
    else:
        _pool_init(mesh, args)
        results = [_vertex_value(mesh, p, *args) for p in indices]

    values = np.array([res[0] for res in results])
    flags = {p: res[2] for p, res in enumerate(results) if res[2]}
    fld = ScalarField(mesh=mesh, radius=float(r), quantity=quantity,
                      values=values, flags=flags)
    if return_directions:
        dirs = np.full((n, 3), np.nan)
        for p, res in enumerate(results):
            if res[1] is not None:
                dirs[p] = res[1]
        return fld, dirs
    return fld
