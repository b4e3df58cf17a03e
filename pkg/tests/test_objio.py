import numpy as np
import pytest

from rgbdaug.errors import MeshParseError
from rgbdaug.objio import load_obj, save_obj
from rgbdaug.primitives import make_cylinder, make_torus_segment, make_vase


def test_round_trip_exact(tmp_path):
    for mesh in (
        make_cylinder(segments=9),
        make_vase(segments=8, profile_points=6),
        make_torus_segment(arc_fraction=0.7, segments_u=10, segments_v=6),
    ):
        path = tmp_path / "m.obj"
        save_obj(path, mesh)
        back = load_obj(path)
        assert np.array_equal(mesh.vertices, back.vertices)
        assert np.array_equal(mesh.triangles, back.triangles)
        assert np.array_equal(mesh.uvs, back.uvs)
        # Loading re-averages per-corner normals, so unit vectors can move
        # by one ulp; geometry, topology, and uvs are byte-exact.
        assert np.abs(mesh.normals - back.normals).max() <= 4 * np.finfo(np.float64).eps
        assert mesh.group_names == back.group_names
        assert np.array_equal(mesh.group_ids, back.group_ids)


def test_negative_indices(tmp_path):
    path = tmp_path / "neg.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
    mesh = load_obj(path)
    assert np.array_equal(mesh.triangles, [[0, 1, 2]])


def test_polygon_fan_triangulation(tmp_path):
    path = tmp_path / "quad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    mesh = load_obj(path)
    assert np.array_equal(mesh.triangles, [[0, 1, 2], [0, 2, 3]])


def test_groups_and_unknown_records(tmp_path):
    path = tmp_path / "g.obj"
    path.write_text(
        "mtllib scene.mtl\no thing\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n"
        "usemtl red\ns off\nf 1 2 3\ng lid\nf 1 3 4\n"
    )
    mesh = load_obj(path)
    assert mesh.group_names == ["default", "lid"]
    assert mesh.group_ids.tolist() == [0, 1]


def test_unused_default_group_dropped(tmp_path):
    path = tmp_path / "named.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\ng only\nf 1 2 3\n")
    mesh = load_obj(path)
    assert mesh.group_names == ["only"]


def test_missing_normals_computed(tmp_path):
    path = tmp_path / "plain.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    mesh = load_obj(path)
    assert np.allclose(np.linalg.norm(mesh.normals, axis=1), 1.0)
    assert np.allclose(mesh.normals, [[0, 0, 1]] * 3)


def test_parse_errors_carry_line_numbers(tmp_path):
    cases = [
        ("v 0 0\n", "v"),                       # short vertex
        ("v 0 0 zero\n", "float"),              # bad float
        ("v 0 0 0\nf 1 2\n", "corner"),         # degenerate face
        ("v 0 0 0\nf 1 2 9\n", "index"),        # out of range
        ("v 0 0 0\n", "face"),                  # no faces at all
    ]
    for text, _tag in cases:
        path = tmp_path / "bad.obj"
        path.write_text(text)
        with pytest.raises(MeshParseError):
            load_obj(path)
    # The exception names the file and the offending line.
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 99\n")
    with pytest.raises(MeshParseError) as err:
        load_obj(path)
    assert "bad.obj" in str(err.value)
    assert "4" in str(err.value)


def test_missing_file_raises(tmp_path):
    with pytest.raises(MeshParseError):
        load_obj(tmp_path / "nope.obj")
