"""End-to-end runs of the volint command line."""

import math

import numpy as np
import pytest

import meshes
from volint import __version__
from volint.cli import main
from volint.curve import PlanarCurve
from volint.io import read_field_csv, read_mesh, write_curve_csv, write_mesh_ply


@pytest.fixture(scope="module")
def disk_ply(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "disk.ply"
    write_mesh_ply(meshes.flat_disk(radius=4.0, rings=30), path, binary=True)
    return path


def _run(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    return 0 if exc.value.code is None else exc.value.code


def test_version_flag(capsys):
    assert _run(["--version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_svi_field_csv(disk_ply, tmp_path):
    out = tmp_path / "svi.csv"
    code = _run(["svi", "--input", str(disk_ply), "--radius", "0.5",
                 "--csv", str(out)])
    assert code == 0
    values, _ = read_field_csv(out)
    half_ball = 2.0 * math.pi * 0.5 ** 3 / 3.0
    assert values[0] == pytest.approx(half_ball, rel=1e-6)


def test_multi_radius_suffixed_outputs(disk_ply, tmp_path):
    out = tmp_path / "f.csv"
    code = _run(["svi", "--input", str(disk_ply),
                 "--radius", "0.25,0.5", "--csv", str(out)])
    assert code == 0
    assert not out.exists()
    for r in (0.25, 0.5):
        values, _ = read_field_csv(tmp_path / f"f_r{r:g}.csv")
        assert values[0] == pytest.approx(2.0 * math.pi * r ** 3 / 3.0,
                                          rel=1e-6)


def test_curvature_with_directions(tmp_path):
    mesh_path = tmp_path / "cyl.ply"
    write_mesh_ply(meshes.cylinder_tube(n_around=32, n_axial=10, height=2.0),
                   mesh_path)
    out = tmp_path / "k1.csv"
    dirs = tmp_path / "dirs.csv"
    code = _run(["curvature", "--input", str(mesh_path), "--radius", "0.3",
                 "--quantity", "k1", "--csv", str(out),
                 "--directions-csv", str(dirs), "--eps", "0.1"])
    assert code == 0
    values, _ = read_field_csv(out)
    assert np.median(values) == pytest.approx(1.0, rel=0.15)
    rows = dirs.read_text().splitlines()
    assert rows[0] == "vertex_index,dx,dy,dz"
    assert len(rows) == len(values) + 1


def test_edges_command_marks_crease(tmp_path):
    mesh_path = tmp_path / "cube.ply"
    mesh = meshes.cube_grid(n=8)
    write_mesh_ply(mesh, mesh_path, binary=True)
    out = tmp_path / "edges.csv"
    ply_out = tmp_path / "edges.ply"
    code = _run(["edges", "--input", str(mesh_path), "--radius", "0.5",
                 "--sigma", "1", "--csv", str(out),
                 "--output-ply", str(ply_out)])
    assert code == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    mask = np.array([int(m) for _, m in rows], dtype=bool)
    on_boundary = ((np.isclose(mesh.vertices, 0.0)
                    | np.isclose(mesh.vertices, 1.0)).sum(axis=1) >= 2)
    assert mask.any()
    assert np.all(on_boundary[mask])
    assert read_mesh(ply_out).n_vertices == mesh.n_vertices


def test_curve_command(tmp_path):
    curve_path = tmp_path / "circle.csv"
    write_curve_csv(PlanarCurve(meshes.circle_polygon(512)), curve_path)
    out = tmp_path / "area.csv"
    code = _run(["curve", "--input", str(curve_path), "--radius", "1",
                 "--csv", str(out)])
    assert code == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    areas = np.array([float(a) for _, a, _ in rows])
    exact = 2.0 * math.pi / 3.0 - math.sqrt(3.0) / 2.0
    assert np.max(np.abs(areas - exact)) < 1e-3


def test_missing_input_file_exit_code(tmp_path):
    assert _run(["svi", "--input", str(tmp_path / "nope.ply"),
                 "--radius", "0.5", "--csv", str(tmp_path / "o.csv")]) == 1


def test_bad_radius_exit_code(disk_ply, tmp_path):
    assert _run(["svi", "--input", str(disk_ply), "--radius", "-1",
                 "--csv", str(tmp_path / "o.csv")]) == 1


def test_invalid_mesh_exit_code(tmp_path):
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\n")
    assert _run(["svi", "--input", str(bad), "--radius", "0.5",
                 "--csv", str(tmp_path / "o.csv")]) == 2
