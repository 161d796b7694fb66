"""Mesh export and import: ASCII OBJ and binary little-endian PLY.

OBJ carries vertex colors as extended ``v x y z r g b`` lines, texture
coordinates (the normalized lattice position of each vertex) as ``vt``
lines and 1-based face indices.  PLY stores positions and colors as
little-endian doubles so round-trips through our own reader are bit-exact.
"""

import struct

import numpy as np

from .mesh import SceneMesh


class MeshIOError(ValueError):
    pass


def write_obj(scene: SceneMesh, path, lattice_shape=None):
    """Write an ASCII OBJ file.

    lattice_shape = (rows, cols) enables vt records derived from each
    vertex's grid index; without it vt lines are omitted.
    """
    lines = []
    have_vt = lattice_shape is not None
    for k, v in enumerate(scene.vertices):
        c = scene.vertex_color[k]
        lines.append("v %.9g %.9g %.9g %.9g %.9g %.9g"
                     % (v[0], v[1], v[2], c[0], c[1], c[2]))
    if have_vt:
        rows, cols = lattice_shape
        for tag, i, j in scene.grid_index:
            lines.append("vt %.9g %.9g" % (j / (cols - 1), 1.0 - i / (rows - 1)))
    for f in scene.faces:
        if have_vt:
            lines.append("f %d/%d %d/%d %d/%d"
                         % (f[0] + 1, f[0] + 1, f[1] + 1, f[1] + 1, f[2] + 1, f[2] + 1))
        else:
            lines.append("f %d %d %d" % (f[0] + 1, f[1] + 1, f[2] + 1))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_obj(path):
    """Read an OBJ written by write_obj; returns (vertices, colors, faces)."""
    verts, colors, faces = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vals = [float(t) for t in parts[1:]]
                if len(vals) not in (3, 6):
                    raise MeshIOError(f"bad v record: {line.strip()!r}")
                verts.append(vals[:3])
                colors.append(vals[3:] if len(vals) == 6 else [1.0, 1.0, 1.0])
            elif parts[0] == "f":
                idx = [int(t.split("/")[0]) - 1 for t in parts[1:4]]
                faces.append(idx)
            elif parts[0] == "vt":
                continue
            else:
                raise MeshIOError(f"unsupported OBJ record: {parts[0]!r}")
    return (np.array(verts, dtype=np.float64),
            np.array(colors, dtype=np.float64),
            np.array(faces, dtype=np.int64).reshape(-1, 3))


_PLY_HEADER = """ply
format binary_little_endian 1.0
element vertex {nv}
property double x
property double y
property double z
property double red
property double green
property double blue
element face {nf}
property list uchar int vertex_indices
end_header
"""


def write_ply(scene: SceneMesh, path):
    """Write a binary little-endian PLY with double positions and colors."""
    nv, nf = len(scene.vertices), len(scene.faces)
    with open(path, "wb") as fh:
        fh.write(_PLY_HEADER.format(nv=nv, nf=nf).encode("ascii"))
        vdata = np.hstack([scene.vertices, scene.vertex_color]).astype("<f8")
        fh.write(vdata.tobytes())
        for f in scene.faces:
            fh.write(struct.pack("<Biii", 3, int(f[0]), int(f[1]), int(f[2])))


def read_ply(path):
    """Read a PLY written by write_ply; returns (vertices, colors, faces)."""
    with open(path, "rb") as fh:
        header = []
        while True:
            line = fh.readline().decode("ascii").strip()
            header.append(line)
            if line == "end_header":
                break
        if header[0] != "ply" or "format binary_little_endian 1.0" not in header[1]:
            raise MeshIOError("unsupported PLY header")
        nv = nf = None
        for line in header:
            if line.startswith("element vertex"):
                nv = int(line.split()[-1])
            elif line.startswith("element face"):
                nf = int(line.split()[-1])
        if nv is None or nf is None:
            raise MeshIOError("PLY header missing element counts")
        vdata = np.frombuffer(fh.read(nv * 6 * 8), dtype="<f8").reshape(nv, 6)
        faces = np.empty((nf, 3), dtype=np.int64)
        for i in range(nf):
            n, a, b, c = struct.unpack("<Biii", fh.read(13))
            if n != 3:
                raise MeshIOError("only triangle faces are supported")
            faces[i] = (a, b, c)
    return vdata[:, :3].copy(), vdata[:, 3:].copy(), faces
