"""PLY/OBJ mesh files and CSV field/curve files."""

import numpy as np
import pytest

import meshes
from volint.curve import PlanarCurve
from volint.errors import MalformedHeader, UnsupportedFormat
from volint.io import (read_curve_csv, read_field_csv, read_mesh,
                       write_curve_csv, write_field_csv, write_field_ply,
                       write_mesh_ply)
from volint.invariants import ScalarField


@pytest.fixture(scope="module")
def small_sphere():
    return meshes.icosphere(2)


def test_ply_ascii_roundtrip(small_sphere, tmp_path):
    path = tmp_path / "m.ply"
    write_mesh_ply(small_sphere, path, binary=False)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, small_sphere.vertices)
    assert np.array_equal(back.faces, small_sphere.faces)


def test_ply_binary_roundtrip(small_sphere, tmp_path):
    path = tmp_path / "m.ply"
    write_mesh_ply(small_sphere, path, binary=True)
    back = read_mesh(path)
    assert np.array_equal(back.vertices, small_sphere.vertices)
    assert np.array_equal(back.faces, small_sphere.faces)


def test_colored_ply_roundtrip(small_sphere, tmp_path):
    rng = np.random.default_rng(3)
    colors = rng.integers(0, 256, size=(small_sphere.n_vertices, 3),
                          dtype=np.uint8)
    for binary in (False, True):
        path = tmp_path / f"c{int(binary)}.ply"
        write_mesh_ply(small_sphere, path, colors=colors, binary=binary)
        back = read_mesh(path)
        assert np.array_equal(back.vertices, small_sphere.vertices)


def test_obj_matches_ply(small_sphere, tmp_path):
    obj = tmp_path / "m.obj"
    lines = [f"v {x:.17g} {y:.17g} {z:.17g}"
             for x, y, z in small_sphere.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in small_sphere.faces]
    obj.write_text("\n".join(lines) + "\n")
    back = read_mesh(obj)
    assert np.array_equal(back.vertices, small_sphere.vertices)
    assert np.array_equal(back.faces, small_sphere.faces)


def test_obj_quads_are_triangulated(tmp_path):
    obj = tmp_path / "q.obj"
    obj.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
                   "v 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n"
                   "f 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\n"
                   "f 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8\n")
    cube = read_mesh(obj)
    assert cube.n_faces == 12
    assert cube.enclosed_volume() == pytest.approx(1.0)


def test_extensionless_ply_sniffed(small_sphere, tmp_path):
    path = tmp_path / "mesh_no_ext"
    write_mesh_ply(small_sphere, path)
    back = read_mesh(path)
    assert back.n_vertices == small_sphere.n_vertices


def test_unknown_format_rejected(tmp_path):
    path = tmp_path / "junk"
    path.write_bytes(b"not a mesh at all\n")
    with pytest.raises(UnsupportedFormat):
        read_mesh(path)


def test_big_endian_ply_rejected(small_sphere, tmp_path):
    path = tmp_path / "be.ply"
    write_mesh_ply(small_sphere, path, binary=True)
    data = path.read_bytes().replace(b"binary_little_endian",
                                     b"binary_big_endian")
    path.write_bytes(data)
    with pytest.raises((UnsupportedFormat, MalformedHeader)):
        read_mesh(path)


def test_truncated_ply_header_rejected(tmp_path):
    path = tmp_path / "t.ply"
    path.write_bytes(b"ply\nformat ascii 1.0\nelement vertex 3\n")
    with pytest.raises(MalformedHeader):
        read_mesh(path)


def test_nonfinite_vertices_rejected(tmp_path):
    obj = tmp_path / "n.obj"
    obj.write_text("v 0 0 0\nv 1 0 0\nv 0 nan 0\nf 1 2 3\n")
    with pytest.raises(ValueError):
        read_mesh(obj)


def test_field_csv_roundtrip(small_sphere, tmp_path):
    rng = np.random.default_rng(5)
    values = rng.normal(size=small_sphere.n_vertices)
    fld = ScalarField(mesh=small_sphere, radius=0.3, quantity="svi",
                      values=values, flags={4: ["gamma_fallback"]})
    path = tmp_path / "f.csv"
    write_field_csv(fld, path)
    head = path.read_text().splitlines()[0]
    assert head == "vertex_index,value,flags"
    back, flags = read_field_csv(path)
    assert np.array_equal(back, values)
    assert flags == {4: ["gamma_fallback"]}


def test_field_ply_written(small_sphere, tmp_path):
    values = np.linspace(0.0, 1.0, small_sphere.n_vertices)
    fld = ScalarField(mesh=small_sphere, radius=0.3, quantity="svi",
                      values=values)
    path = tmp_path / "f.ply"
    write_field_ply(small_sphere, fld, path, power=0.5)
    back = read_mesh(path)
    assert back.n_vertices == small_sphere.n_vertices


def test_curve_csv_roundtrip(tmp_path):
    curve = PlanarCurve(meshes.circle_polygon(64))
    path = tmp_path / "c.csv"
    write_curve_csv(curve, path)
    back = read_curve_csv(path)
    assert np.array_equal(back.points, curve.points)


def test_curve_csv_comments_and_semicolons(tmp_path):
    path = tmp_path / "c.csv"
    path.write_text("# a square\n0,0\n1;0  # semicolon row\n1,1\n0,1\n")
    curve = read_curve_csv(path)
    assert curve.points.shape == (4, 2)
    with pytest.raises(MalformedHeader):
        path2 = tmp_path / "bad.csv"
        path2.write_text("0,0\njustone\n1,1\n")
        read_curve_csv(path2)
