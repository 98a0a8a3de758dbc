"""Closed-form vertex solid-angle fraction and its numeric cross-check."""

import numpy as np
import pytest

import meshes
from volint.errors import BizarreVertex
from volint.gamma import (build_vertex_star, estimate_vertex_normal, gamma,
                          gamma_numeric, gamma_of_vertex)
from volint.mesh import build_mesh


def test_flat_star_is_half(flat_disk):
    assert gamma(build_vertex_star(flat_disk, 0)) == pytest.approx(0.5, abs=1e-12)


def test_cube_corner_is_one_eighth():
    mesh = meshes.corner_star()
    assert gamma(build_vertex_star(mesh, 0)) == pytest.approx(0.125, abs=1e-10)


def test_right_angle_roof_edge_is_one_quarter():
    mesh = meshes.wedge_star()
    assert gamma(build_vertex_star(mesh, 0)) == pytest.approx(0.25, abs=1e-10)


def test_closed_form_matches_numeric_on_random_stars(rng):
    done = 0
    worst = 0.0
    while done < 100:
        mesh = meshes.random_vertex_star_mesh(rng)
        star = build_vertex_star(mesh, 0)
        if star.bizarre:
            continue
        worst = max(worst, abs(gamma(star) - gamma_numeric(star)))
        done += 1
    assert worst < 1e-6


def test_rotation_invariance(rng):
    mesh = meshes.random_vertex_star_mesh(np.random.default_rng(3))
    base = gamma(build_vertex_star(mesh, 0))
    # random rotation via QR
    q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    rot = build_mesh(mesh.vertices @ q.T, mesh.faces)
    assert gamma(build_vertex_star(rot, 0)) == pytest.approx(base, abs=1e-10)


def test_scale_invariance():
    mesh = meshes.random_vertex_star_mesh(np.random.default_rng(5))
    base = gamma(build_vertex_star(mesh, 0))
    scaled = build_mesh(mesh.vertices * 37.5, mesh.faces)
    assert gamma(build_vertex_star(scaled, 0)) == pytest.approx(base, abs=1e-12)


def test_orientation_flip_complements():
    mesh = meshes.random_vertex_star_mesh(np.random.default_rng(11))
    g = gamma(build_vertex_star(mesh, 0))
    gn = gamma_numeric(build_vertex_star(mesh, 0))
    flipped = build_mesh(mesh.vertices.copy(), mesh.faces[:, ::-1].copy())
    gf = gamma_numeric(build_vertex_star(flipped, 0))
    assert g + gf == pytest.approx(1.0, abs=1e-9)
    assert gn + gf == pytest.approx(1.0, abs=1e-10)


def test_spans_cover_full_circle_on_closed_star(flat_disk):
    star = build_vertex_star(flat_disk, 0)
    assert star.closed
    total = float(np.sum(star.spans[:, 1] - star.spans[:, 0]))
    assert total == pytest.approx(2.0 * np.pi, abs=1e-9)


def test_bizarre_star_raises_and_fallback_answers():
    # this seed yields a fan with one sector of azimuthal span >= pi, which
    # the closed form cannot classify
    mesh = meshes.random_vertex_star_mesh(np.random.default_rng(23))
    star = build_vertex_star(mesh, 0)
    assert star.bizarre
    with pytest.raises(BizarreVertex):
        gamma(star)
    val, used_fallback = gamma_of_vertex(mesh, 0)
    assert used_fallback
    assert 0.0 <= val <= 1.0


def test_normal_modes_agree_on_a_sphere(sphere3):
    for p in (0, 37):
        outward = sphere3.vertices[p] / np.linalg.norm(sphere3.vertices[p])
        for mode in ("average", "area-weighted", "lsq-plane"):
            n = estimate_vertex_normal(sphere3, p, mode)
            assert float(np.dot(n, outward)) > 0.99


def test_sphere_vertices_approach_smooth_limit(sphere3, sphere5):
    coarse = [gamma_of_vertex(sphere3, p)[0] for p in range(0, 100, 7)]
    fine = [gamma_of_vertex(sphere5, p)[0] for p in range(0, 100, 7)]
    assert np.allclose(coarse, 0.5, atol=0.05)
    assert np.max(np.abs(np.array(fine) - 0.5)) \
        < np.max(np.abs(np.array(coarse) - 0.5))
