"""Mesh and curve file formats: PLY (ascii + binary little endian), OBJ,
CSV curves, and per-vertex field export."""

import struct
from dataclasses import dataclass, field

import numpy as np

from .curve import PlanarCurve
from .errors import IndexOutOfRange, MalformedHeader, UnsupportedFormat
from .features import power_normalize
from .mesh import build_mesh

_PLY_SCALARS = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


@dataclass
class ColorMap:
    """Normalized value in [0, 1] to 8-bit RGB; 0 is red, 1 is blue."""

    name: str = "red-to-blue"
    stops: tuple = field(default=((255, 0, 0), (0, 0, 255)))

    def __call__(self, v):
        v = np.clip(np.asarray(v, dtype=np.float64), 0.0, 1.0)
        lo = np.asarray(self.stops[0], dtype=np.float64)
        hi = np.asarray(self.stops[-1], dtype=np.float64)
        rgb = lo + (hi - lo) * v[..., None]
        return np.rint(rgb).astype(np.uint8)


def _parse_ply_header(fh):
    magic = fh.readline().strip()
    if magic != b"ply":
        raise MalformedHeader("missing 'ply' magic")
    fmt = None
    elements = []   # (name, count, [(prop-kind, ...)])
    while True:
        line = fh.readline()
        if not line:
            raise MalformedHeader("unterminated header")
        words = line.decode("ascii", "replace").split()
        if not words or words[0] == "comment":
            continue
        if words[0] == "format":
            if words[1] == "ascii":
                fmt = "ascii"
            elif words[1] == "binary_little_endian":
                fmt = "binary_le"
            elif words[1] == "binary_big_endian":
                raise UnsupportedFormat("big-endian PLY is not supported")
            else:
                raise MalformedHeader(f"unknown format {words[1]!r}")
        elif words[0] == "element":
            elements.append((words[1], int(words[2]), []))
        elif words[0] == "property":
            if not elements:
                raise MalformedHeader("property before any element")
            if words[1] == "list":
                elements[-1][2].append(("list", words[2], words[3], words[4]))
            else:
                elements[-1][2].append(("scalar", words[1], words[2]))
        elif words[0] == "end_header":
            break
    if fmt is None:
        raise MalformedHeader("missing format line")
    return fmt, elements


def _read_ply(path):
    with open(path, "rb") as fh:
        fmt, elements = _parse_ply_header(fh)
        verts = None
        faces = []
        for name, count, props in elements:
            if name == "vertex":
                verts = _read_ply_vertices(fh, fmt, count, props)
            elif name == "face":
                faces = _read_ply_faces(fh, fmt, count, props)
            else:
                _skip_ply_element(fh, fmt, count, props)
    if verts is None:
        raise MalformedHeader("PLY file has no vertex element")
    return verts, np.asarray(faces, dtype=np.int64).reshape(-1, 3)


def _read_ply_vertices(fh, fmt, count, props):
    names = []
    types = []
    for pr in props:
        if pr[0] == "list":
            raise UnsupportedFormat("list property on vertex element")
        names.append(pr[2])
        types.append(_PLY_SCALARS[pr[1]])
    for need in ("x", "y", "z"):
        if need not in names:
            raise MalformedHeader(f"vertex element lacks property {need!r}")
    if fmt == "ascii":
        rows = []
        for i in range(count):
            vals = fh.readline().split()
            if len(vals) < len(names):
                raise MalformedHeader(f"short vertex row {i}")
            rows.append([float(v) for v in vals[:len(names)]])
        arr = np.asarray(rows, dtype=np.float64)
        out = arr[:, [names.index("x"), names.index("y"), names.index("z")]]
    else:
        dt = np.dtype([(nm, "<" + tp) for nm, tp in zip(names, types)])
        buf = fh.read(dt.itemsize * count)
        if len(buf) != dt.itemsize * count:
            raise MalformedHeader("truncated binary vertex data")
        rec = np.frombuffer(buf, dtype=dt)
        out = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(np.float64)
    if not np.all(np.isfinite(out)):
        raise ValueError("non-finite vertex coordinate")
    return out


def _read_ply_faces(fh, fmt, count, props):
    if len(props) < 1 or props[0][0] != "list" or props[0][3] not in (
            "vertex_indices", "vertex_index"):
        raise UnsupportedFormat("face element must start with a vertex index list")
    cnt_t = "<" + _PLY_SCALARS[props[0][1]]
    idx_t = "<" + _PLY_SCALARS[props[0][2]]
    tris = []
    if fmt == "ascii":
        for i in range(count):
            vals = fh.readline().split()
            if not vals:
                raise MalformedHeader(f"short face row {i}")
            k = int(vals[0])
            idx = [int(v) for v in vals[1:1 + k]]
            tris.extend(_fan(idx, i))
    else:
        cnt_sz = np.dtype(cnt_t).itemsize
        idx_sz = np.dtype(idx_t).itemsize
        for i in range(count):
            raw = fh.read(cnt_sz)
            if len(raw) != cnt_sz:
                raise MalformedHeader(f"truncated face {i}")
            k = int(np.frombuffer(raw, dtype=cnt_t)[0])
            raw = fh.read(idx_sz * k)
            idx = np.frombuffer(raw, dtype=idx_t).tolist()
            tris.extend(_fan(idx, i))
    return tris


def _skip_ply_element(fh, fmt, count, props):
    if fmt == "ascii":
        for _ in range(count):
            fh.readline()
        return
    if any(pr[0] == "list" for pr in props):
        raise UnsupportedFormat("cannot skip binary element with list properties")
    sz = sum(np.dtype(_PLY_SCALARS[pr[1]]).itemsize for pr in props)
    fh.read(sz * count)


def _fan(idx, at):
    """Fan-triangulate a polygon face."""
    if len(idx) < 3:
        raise MalformedHeader(f"face {at} has fewer than 3 indices")
    return [(idx[0], idx[j], idx[j + 1]) for j in range(1, len(idx) - 1)]


def _read_obj(path):
    verts = []
    tris = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for ln, line in enumerate(fh, 1):
            words = line.split()
            if not words or words[0].startswith("#"):
                continue
            if words[0] == "v":
                if len(words) < 4:
                    raise MalformedHeader(f"line {ln}: short vertex record")
                verts.append([float(w) for w in words[1:4]])
            elif words[0] == "f":
                idx = []
                for w in words[1:]:
                    tok = w.split("/")[0]
                    i = int(tok)
                    if i > 0:
                        i -= 1
                    elif i < 0:
                        i += len(verts)
                    else:
                        raise IndexOutOfRange(f"line {ln}: OBJ index 0")
                    if i < 0 or i >= len(verts):
                        raise IndexOutOfRange(f"line {ln}: index {tok} out of range")
                    idx.append(i)
                tris.extend(_fan(idx, ln))
    v = np.asarray(verts, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite vertex coordinate")
    return v, np.asarray(tris, dtype=np.int64).reshape(-1, 3)


def read_mesh(path):
    """Read a PLY or OBJ file and build a validated mesh."""
    p = str(path)
    if p.lower().endswith(".obj"):
        verts, faces = _read_obj(p)
    elif p.lower().endswith(".ply"):
        verts, faces = _read_ply(p)
    else:
        with open(p, "rb") as fh:
            head = fh.read(3)
        if head == b"ply":
            verts, faces = _read_ply(p)
        else:
            raise UnsupportedFormat(f"cannot determine format of {p}")
    return build_mesh(verts, faces)


def write_mesh_ply(mesh, path, colors=None, binary=False):
    """Write the mesh as PLY, optionally with per-vertex uchar colors."""
    n, m = mesh.n_vertices, mesh.n_faces
    header = ["ply",
              "format binary_little_endian 1.0" if binary else "format ascii 1.0",
              f"element vertex {n}",
              "property double x", "property double y", "property double z"]
    if colors is not None:
        header += ["property uchar red", "property uchar green", "property uchar blue"]
    header += [f"element face {m}", "property list uchar int vertex_indices",
               "end_header"]
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            for i in range(n):
                fh.write(struct.pack("<3d", *mesh.vertices[i]))
                if colors is not None:
                    fh.write(struct.pack("<3B", *colors[i]))
            for f in mesh.faces:
                fh.write(struct.pack("<B3i", 3, *f))
        else:
            for i in range(n):
                x, y, z = mesh.vertices[i]
                row = f"{x:.17g} {y:.17g} {z:.17g}"
                if colors is not None:
                    r, g, b = colors[i]
                    row += f" {r} {g} {b}"
                fh.write((row + "\n").encode("ascii"))
            for a, b, c in mesh.faces:
                fh.write(f"3 {a} {b} {c}\n".encode("ascii"))


def write_field_ply(mesh, field, path, cmap=None, power=1.0):
    """Colored PLY of a scalar field (power-normalized for display)."""
    if len(field.values) != mesh.n_vertices:
        raise ValueError("field does not match mesh")
    cmap = cmap or ColorMap()
    norm = power_normalize(field, power)
    write_mesh_ply(mesh, path, colors=cmap(norm.values))


def write_field_csv(field, path):
    """CSV with header vertex_index,value,flags; 17 significant digits."""
    with open(path, "w", encoding="ascii") as fh:
        fh.write("vertex_index,value,flags\n")
        for i, v in enumerate(field.values):
            flags = ";".join(field.flags.get(i, []))
            fh.write(f"{i},{v:.17g},{flags}\n")


def read_field_csv(path):
    """Read back a field CSV; returns (values, flags dict)."""
    values = []
    flags = {}
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline()
        if not header.startswith("vertex_index,value"):
            raise MalformedHeader("not a field CSV")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            values.append(float(parts[1]))
            if len(parts) > 2 and parts[2]:
                flags[int(parts[0])] = parts[2].split(";")
    return np.asarray(values), flags


def read_curve_csv(path):
    """Closed 2D polyline from 'x,y' rows; '#' starts a comment."""
    pts = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.replace(";", ",").split(",")
            if len(parts) < 2:
                raise MalformedHeader(f"line {ln}: expected 'x,y'")
            pts.append((float(parts[0]), float(parts[1])))
    return PlanarCurve(pts)


def write_curve_csv(curve, path):
    with open(path, "w", encoding="ascii") as fh:
        for x, y in curve.points:
            fh.write(f"{x:.17g},{y:.17g}\n")
