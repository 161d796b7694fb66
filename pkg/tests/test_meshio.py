import numpy as np
import pytest

from nightsim.mesh import SceneMesh
from nightsim.meshio import (MeshIOError, read_obj, read_ply, write_obj,
                             write_ply)


def _scene():
    rng = np.random.default_rng(0)
    verts = rng.uniform(-5.0, 5.0, (9, 3))
    faces = np.array([[0, 1, 2], [3, 4, 5], [6, 7, 8]])
    colors = rng.uniform(0.0, 1.0, (9, 3))
    gi = [("grid", i // 3, i % 3) for i in range(9)]
    return SceneMesh(vertices=verts, faces=faces, vertex_color=colors,
                     albedo=colors.copy(), roughness=np.ones(9), grid_index=gi)


def test_obj_round_trip(tmp_path):
    scene = _scene()
    p = tmp_path / "m.obj"
    write_obj(scene, p)
    v, c, f = read_obj(p)
    assert np.allclose(v, scene.vertices, atol=1e-7)
    assert np.allclose(c, scene.vertex_color, atol=1e-7)
    assert np.array_equal(f, scene.faces)


def test_obj_format_details(tmp_path):
    scene = _scene()
    p = tmp_path / "m.obj"
    write_obj(scene, p, lattice_shape=(3, 3))
    text = p.read_text()
    lines = text.strip().splitlines()
    v_lines = [l for l in lines if l.startswith("v ")]
    vt_lines = [l for l in lines if l.startswith("vt ")]
    f_lines = [l for l in lines if l.startswith("f ")]
    assert len(v_lines) == 9 and len(vt_lines) == 9 and len(f_lines) == 3
    assert len(v_lines[0].split()) == 7  # v x y z r g b
    # face indices are 1-based with texture references
    assert f_lines[0].split()[1:] == ["1/1", "2/2", "3/3"]


def test_obj_without_lattice_has_plain_faces(tmp_path):
    p = tmp_path / "m.obj"
    write_obj(_scene(), p)
    f_lines = [l for l in p.read_text().splitlines() if l.startswith("f ")]
    assert f_lines[0].split()[1:] == ["1", "2", "3"]


def test_obj_reader_rejects_garbage(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text("vn 0 0 1\n")
    with pytest.raises(MeshIOError, match="vn"):
        read_obj(p)
    p.write_text("v 1 2\n")
    with pytest.raises(MeshIOError, match="bad v record"):
        read_obj(p)


def test_ply_round_trip_bit_exact(tmp_path):
    scene = _scene()
    p = tmp_path / "m.ply"
    write_ply(scene, p)
    v, c, f = read_ply(p)
    # doubles all the way: exact equality expected
    assert np.array_equal(v, scene.vertices)
    assert np.array_equal(c, scene.vertex_color)
    assert np.array_equal(f, scene.faces)


def test_ply_header(tmp_path):
    p = tmp_path / "m.ply"
    write_ply(_scene(), p)
    head = p.read_bytes()[:200].decode("ascii", "replace")
    assert head.startswith("ply\nformat binary_little_endian 1.0\n")
    assert "element vertex 9" in head
    assert "element face 3" in head


def test_ply_reader_rejects_other_formats(tmp_path):
    p = tmp_path / "bad.ply"
    p.write_bytes(b"ply\nformat ascii 1.0\nend_header\n")
    with pytest.raises(MeshIOError):
        read_ply(p)
