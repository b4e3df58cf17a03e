import math

import numpy as np
import pytest

from rgbdaug.geometry import (
    AffineTransform,
    Mesh,
    PinholeCamera,
    apply_transform,
    compute_vertex_normals,
    face_normals,
)
from rgbdaug.primitives import make_box
from rgbdaug.sampling import uniform_rotation


def test_from_fov_focal_length():
    cam = PinholeCamera.from_fov(60.0, width=640, height=480)
    # Oracle: fx = (W/2) / tan(hfov/2), computed independently.
    expected = (640 / 2) / math.tan(math.radians(30.0))
    assert math.isclose(cam.fx, expected, rel_tol=1e-12)
    assert cam.fx == pytest.approx(554.2562584220, abs=1e-9)
    assert cam.cx == (640 - 1) / 2
    assert cam.cy == (480 - 1) / 2


def test_ray_dirs_planar_z_one():
    cam = PinholeCamera.from_fov(60.0, width=8, height=6)
    xs, ys = np.meshgrid(np.arange(8), np.arange(6))
    dirs = cam.ray_dirs_for(xs.ravel().astype(np.float64), ys.ravel().astype(np.float64))
    assert np.all(dirs[:, 2] == 1.0)
    # Scalar and array paths must agree bit for bit: the two render routes
    # rely on it.
    one = cam.ray_dirs_for(np.array([3.0]), np.array([2.0]))
    assert np.array_equal(one[0], dirs.reshape(6, 8, 3)[2, 3])


def test_project_unproject_round_trip():
    cam = PinholeCamera.from_fov(60.0, width=64, height=48)
    rng = np.random.default_rng(3)
    for _ in range(50):
        px, py = rng.uniform(0, 63), rng.uniform(0, 47)
        z = rng.uniform(1.0, 20.0)
        point = cam.unproject((px, py), z)
        (u, v), depth = cam.project(point)
        assert u == pytest.approx(px, abs=1e-9)
        assert v == pytest.approx(py, abs=1e-9)
        assert depth == pytest.approx(z, abs=1e-12)


def test_project_points_matches_scalar():
    cam = PinholeCamera.from_fov(60.0, width=64, height=48)
    rng = np.random.default_rng(4)
    pts = np.column_stack([
        rng.uniform(-3, 3, 40), rng.uniform(-2, 2, 40), rng.uniform(1, 15, 40),
    ])
    uv, z = cam.project_points(pts)
    for i, p in enumerate(pts):
        (u, v), d = cam.project(p)
        assert uv[i, 0] == u and uv[i, 1] == v and z[i] == d


def test_project_rejects_behind_near_plane():
    cam = PinholeCamera.from_fov(60.0, width=64, height=48)
    with pytest.raises(ValueError):
        cam.project(np.array([0.0, 0.0, cam.near_plane]))


def test_frustum_half_extent_matches_projection():
    cam = PinholeCamera.from_fov(60.0, width=64, height=48)
    z = 10.0
    hx, hy = cam.frustum_half_extent(z)
    # The lateral extent projects to the image's outer pixel edge.
    (u, _), _ = cam.project(np.array([hx, 0.0, z]))
    assert u == pytest.approx(cam.width - 0.5, abs=1e-9)
    (_, v), _ = cam.project(np.array([0.0, hy, z]))
    assert v == pytest.approx(cam.height - 0.5, abs=1e-9)


def test_transform_applies_scale_rotation_translation():
    t = AffineTransform(
        scale=np.array([2.0, 1.0, 1.0]),
        rotation=np.eye(3),
        translation=np.array([0.0, 0.0, 5.0]),
    )
    p = t.apply_points(np.array([[1.0, 1.0, 0.0]]))
    assert np.allclose(p, [[2.0, 1.0, 5.0]])


def test_transform_normals_inverse_transpose():
    # Nonuniform scale must bend normals by the inverse transpose, not the
    # point map: verify a transformed plane stays perpendicular.
    rng = np.random.default_rng(11)
    for _ in range(20):
        rot = uniform_rotation(rng)
        t = AffineTransform(
            scale=rng.uniform(0.3, 3.0, 3),
            rotation=rot,
            translation=rng.uniform(-5, 5, 3),
        )
        # Tangent plane spanned by e1, e2 at a random orientation.
        basis = uniform_rotation(rng)
        e1, e2, n = basis[:, 0], basis[:, 1], basis[:, 2]
        p0 = rng.uniform(-1, 1, 3)
        pts = np.stack([p0, p0 + 0.1 * e1, p0 + 0.1 * e2])
        out = t.apply_points(pts)
        nout = t.apply_normals(n[None, :])[0]
        assert np.linalg.norm(nout) == pytest.approx(1.0, abs=1e-12)
        assert abs(np.dot(nout, out[1] - out[0])) < 1e-12 * 10
        assert abs(np.dot(nout, out[2] - out[0])) < 1e-12 * 10


def test_transform_validate_rejects_bad_rotation():
    bad = AffineTransform(
        scale=np.ones(3),
        rotation=np.eye(3) * 2.0,
        translation=np.zeros(3),
    )
    with pytest.raises(ValueError):
        bad.validate()
    reflected = AffineTransform(
        scale=np.ones(3),
        rotation=np.diag([1.0, 1.0, -1.0]),
        translation=np.zeros(3),
    )
    with pytest.raises(ValueError):
        reflected.validate()


def test_transform_dict_round_trip():
    rng = np.random.default_rng(7)
    t = AffineTransform(
        scale=rng.uniform(0.5, 2.0, 3),
        rotation=uniform_rotation(rng),
        translation=rng.uniform(-3, 3, 3),
    )
    t2 = AffineTransform.from_dict(t.to_dict())
    assert np.array_equal(t.scale, t2.scale)
    assert np.array_equal(t.rotation, t2.rotation)
    assert np.array_equal(t.translation, t2.translation)


def test_camera_dict_round_trip():
    cam = PinholeCamera.from_fov(60.0, width=640, height=480)
    cam2 = PinholeCamera.from_dict(cam.to_dict())
    assert cam.to_dict() == cam2.to_dict()


def test_vertex_normals_unit_and_outward():
    mesh = make_box()
    n = compute_vertex_normals(mesh.vertices, mesh.triangles)
    assert np.allclose(np.linalg.norm(n, axis=1), 1.0)
    # Diagonal triangulation weights corner faces unevenly, so the averaged
    # normal is not the symmetric diagonal; its octant must still match the
    # corner's and it must point away from the center.
    assert np.all(np.sign(n) == np.sign(mesh.vertices))
    assert np.all(np.einsum("ij,ij->i", n, mesh.vertices) > 0)


def test_face_normals_outward_for_box():
    mesh = make_box()
    n = face_normals(mesh.vertices, mesh.triangles)
    centers = mesh.vertices[mesh.triangles].mean(axis=1)
    assert np.all(np.einsum("ij,ij->i", n, centers) > 0)


def test_mesh_validate_catches_bad_indices():
    mesh = make_box()
    bad = Mesh(
        mesh.vertices,
        mesh.normals,
        mesh.uvs,
        np.array([[0, 1, 99]], dtype=np.int32),
        np.zeros(1, dtype=np.int32),
        ["g"],
    )
    with pytest.raises(ValueError):
        bad.validate()


def test_apply_transform_moves_mesh_normals():
    mesh = make_box()
    t = AffineTransform(
        scale=np.array([1.0, 1.0, 3.0]),
        rotation=np.eye(3),
        translation=np.zeros(3),
    )
    out = apply_transform(mesh, t)
    assert np.allclose(np.linalg.norm(out.normals, axis=1), 1.0)
    # Stretch along z squeezes z components of side-face normals toward the
    # x/y axes; the +z corner normal keeps a positive z part.
    assert out.vertices[:, 2].max() == pytest.approx(1.5)
