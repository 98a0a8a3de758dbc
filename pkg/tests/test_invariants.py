"""Ball-clipped volume, moments, and PCA curvature at mesh vertices."""

import math

import numpy as np
import pytest

import meshes
from volint.errors import ZeroVolume
from volint.invariants import (BisectionConfig, covariance_matrix,
                               curvature_at_vertex, curvature_estimate,
                               invariant_field, mean_curvature_from_svi,
                               moment_set, spherical_volume_invariant)
from volint.mesh import build_mesh

CFG = BisectionConfig()


def test_flat_disk_is_half_ball(flat_disk):
    for r in (0.5, 1.0):
        v = spherical_volume_invariant(flat_disk, 0, r, CFG)
        assert v == pytest.approx(2.0 * math.pi * r ** 3 / 3.0, rel=1e-6)


def test_sphere_matches_two_ball_lens(sphere5):
    r = 0.5
    v = spherical_volume_invariant(sphere5, 0, r, CFG)
    exact = meshes.lens_volume(1.0, r, 1.0)
    assert v == pytest.approx(exact, rel=2e-3)


def test_convex_body_depresses_volume(sphere5):
    r = 0.3
    v = spherical_volume_invariant(sphere5, 0, r, CFG)
    assert v < 2.0 * math.pi * r ** 3 / 3.0
    assert mean_curvature_from_svi(v, r) > 0.0


def test_whole_volume_limit(sphere3):
    vol = sphere3.enclosed_volume()
    for p in (0, 9, 44):
        v = spherical_volume_invariant(sphere3, p, 2.5, CFG)
        assert v == pytest.approx(vol, rel=1e-9)


def test_orientation_flip_complement(sphere3):
    r = 0.4
    flipped = build_mesh(sphere3.vertices.copy(), sphere3.faces[:, ::-1].copy())
    for p in (0, 25):
        v = spherical_volume_invariant(sphere3, p, r, CFG)
        w = spherical_volume_invariant(flipped, p, r, CFG)
        assert v + w == pytest.approx(4.0 * math.pi * r ** 3 / 3.0, rel=1e-9)


def test_rigid_motion_invariance(sphere3, rng):
    r = 0.35
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    moved = build_mesh(sphere3.vertices @ q.T + np.array([2.0, -1.0, 0.5]),
                       sphere3.faces)
    for p in (3, 77):
        a = spherical_volume_invariant(sphere3, p, r, CFG)
        b = spherical_volume_invariant(moved, p, r, CFG)
        assert b == pytest.approx(a, rel=1e-9)


def test_flat_disk_moment_eigenvalues(flat_disk):
    r = 0.5
    ms = moment_set(flat_disk, 0, r, BisectionConfig(epsilon=1e-2))
    lam = np.sort(np.linalg.eigvalsh(covariance_matrix(ms)))[::-1]
    tang = 2.0 * math.pi * r ** 5 / 15.0
    norm = 19.0 * math.pi * r ** 5 / 480.0
    assert lam[0] == pytest.approx(tang, rel=1e-2)
    assert lam[1] == pytest.approx(tang, rel=1e-2)
    assert lam[2] == pytest.approx(norm, rel=1e-2)


def test_flat_disk_centroid_sits_below_surface(flat_disk):
    ms = moment_set(flat_disk, 0, 0.5, BisectionConfig(epsilon=1e-2))
    off = ms.centroid_offset
    assert abs(off[0]) < 1e-6 and abs(off[1]) < 1e-6
    assert off[2] < 0.0   # interior is below the disk


def test_sphere_mean_curvature(sphere5):
    est = curvature_at_vertex(sphere5, 0, 0.2, BisectionConfig(epsilon=1e-2))
    assert est.mean == pytest.approx(1.0, rel=5e-2)
    assert est.near_umbilic
    assert np.sort(est.lam)[::-1] == pytest.approx(est.lam)


def test_cylinder_principal_curvatures(cylinder):
    est = curvature_at_vertex(cylinder, 0, 0.2, BisectionConfig(epsilon=1e-2))
    assert est.kappa1 == pytest.approx(1.0, rel=0.1)
    assert abs(est.kappa2) <= 0.1
    axis = np.array([0.0, 0.0, 1.0])
    cosang = abs(float(np.dot(est.dir2, axis)))
    assert cosang > math.cos(math.radians(10.0))
    assert abs(np.dot(est.dir1, est.dir2)) < 1e-10
    assert abs(np.dot(est.dir1, est.normal_est)) < 1e-10
    assert float(np.dot(est.normal_est, cylinder.vertices[0])) > 0.0


def test_curvature_estimate_rejects_bad_inputs():
    with pytest.raises(ValueError):
        curvature_estimate(np.eye(3), -1.0)
    ms_like = moment_set(meshes.icosphere(2), 0, 0.3, CFG)
    ms_like.volume = -1.0
    with pytest.raises(ZeroVolume):
        covariance_matrix(ms_like)


def test_field_deterministic_across_workers(sphere3):
    a = invariant_field(sphere3, 0.3, "svi", CFG, workers=1)
    b = invariant_field(sphere3, 0.3, "svi", CFG, workers=3)
    assert np.array_equal(a.values, b.values)


def test_field_quantities_consistent(sphere3):
    mean = invariant_field(sphere3, 0.25, "mean", CFG)
    k1 = invariant_field(sphere3, 0.25, "k1", CFG)
    k2 = invariant_field(sphere3, 0.25, "k2", CFG)
    gauss = invariant_field(sphere3, 0.25, "gauss", CFG)
    assert np.allclose(mean.values, 0.5 * (k1.values + k2.values), atol=1e-12)
    assert np.allclose(gauss.values, k1.values * k2.values, atol=1e-12)
    assert np.all(k1.values >= k2.values - 1e-12)


def test_field_area_weighted_mean(sphere3):
    fld = invariant_field(sphere3, 0.3, "svi", CFG)
    avg = fld.area_weighted_mean()
    assert avg == pytest.approx(float(np.mean(fld.values)), rel=1e-3)
