"""Triangle meshes, affine transforms, and the pinhole camera model.

Conventions used throughout the package:

* Camera frame: x right, y down, z forward; the camera sits at the origin
  looking along +z.
* Depth is planar depth (the camera-frame z coordinate), matching the
  convention of registered depth maps.
* Meshes share vertex positions and per-vertex normals; texture
  coordinates are stored per triangle corner ("wedge" uvs) so that faces
  meeting at a shared vertex can carry independent parameterizations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

NORMAL_TOL = 1e-6


@dataclass
class Mesh:
    """Indexed triangle mesh with named surface groups.

    Attributes:
        vertices: (N, 3) float64 positions in scene units.
        normals: (N, 3) float64 unit vertex normals.
        uvs: (M, 3, 2) float64 texture coordinates per triangle corner.
        triangles: (M, 3) int32 vertex indices.
        group_ids: (M,) int32 index into ``group_names`` per triangle.
        group_names: surface group names; every triangle belongs to
            exactly one group.
    """

    vertices: np.ndarray
    normals: np.ndarray
    uvs: np.ndarray
    triangles: np.ndarray
    group_ids: np.ndarray
    group_names: list[str] = field(default_factory=lambda: ["default"])

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.normals = np.asarray(self.normals, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        self.uvs = np.asarray(self.uvs, dtype=np.float64).reshape(-1, 3, 2)
        self.group_ids = np.asarray(self.group_ids, dtype=np.int32).reshape(-1)

    @property
    def vertex_count(self) -> int:
        return self.vertices.shape[0]

    @property
    def triangle_count(self) -> int:
        return self.triangles.shape[0]

    def surface_groups(self) -> dict[str, np.ndarray]:
        """Map group name -> triangle indices belonging to it."""
        return {
            name: np.flatnonzero(self.group_ids == gid)
            for gid, name in enumerate(self.group_names)
        }

    def validate(self):
        """Check index ranges, normal lengths, and the group partition."""
        n = self.vertex_count
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= n):
            raise ValueError("triangle index out of range")
        lengths = np.linalg.norm(self.normals, axis=1)
        if not np.allclose(lengths, 1.0, atol=NORMAL_TOL):
            raise ValueError("vertex normals are not unit length")
        if self.group_ids.shape[0] != self.triangle_count:
            raise ValueError("group_ids must assign every triangle")
        if self.group_ids.size and (
            self.group_ids.min() < 0 or self.group_ids.max() >= len(self.group_names)
        ):
            raise ValueError("group id out of range")
        if self.uvs.shape[0] != self.triangle_count:
            raise ValueError("uvs must cover every triangle corner")

    def copy(self) -> "Mesh":
        return Mesh(
            self.vertices.copy(),
            self.normals.copy(),
            self.uvs.copy(),
            self.triangles.copy(),
            self.group_ids.copy(),
            list(self.group_names),
        )


def face_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Unnormalized face normals (cross products of the edge vectors)."""
    v0 = vertices[triangles[:, 0]]
    e1 = vertices[triangles[:, 1]] - v0
    e2 = vertices[triangles[:, 2]] - v0
    return np.cross(e1, e2)


def compute_vertex_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Area-weighted average of incident face normals, renormalized."""
    fn = face_normals(vertices, triangles)
    acc = np.zeros_like(vertices, dtype=np.float64)
    for corner in range(3):
        np.add.at(acc, triangles[:, corner], fn)
    lengths = np.linalg.norm(acc, axis=1, keepdims=True)
    lengths[lengths == 0.0] = 1.0
    return acc / lengths


@dataclass(frozen=True)
class AffineTransform:
    """Scale -> rotate -> translate, applied in that order.

    ``rotation`` must be a proper rotation (orthonormal, det +1) and all
    scale components strictly positive.
    """

    scale: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=np.float64).reshape(3))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))
        object.__setattr__(
            self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3)
        )

    @staticmethod
    def identity() -> "AffineTransform":
        return AffineTransform(np.ones(3), np.eye(3), np.zeros(3))

    def validate(self):
        if not np.all(self.scale > 0):
            raise ValueError("scale components must be positive")
        should_be_eye = self.rotation @ self.rotation.T
        if not np.allclose(should_be_eye, np.eye(3), atol=NORMAL_TOL):
            raise ValueError("rotation is not orthonormal")
        if np.linalg.det(self.rotation) < 0:
            raise ValueError("rotation must be proper (det +1)")

    def apply_points(self, points: np.ndarray) -> np.ndarray:
        return (points * self.scale) @ self.rotation.T + self.translation

    def apply_normals(self, normals: np.ndarray) -> np.ndarray:
        # Inverse-transpose of R @ diag(s) is R @ diag(1/s).
        mapped = (normals / self.scale) @ self.rotation.T
        lengths = np.linalg.norm(mapped, axis=-1, keepdims=True)
        lengths[lengths == 0.0] = 1.0
        return mapped / lengths

    def to_dict(self) -> dict:
        return {
            "scale": self.scale.tolist(),
            "rotation": self.rotation.tolist(),
            "translation": self.translation.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "AffineTransform":
        t = AffineTransform(d["scale"], d["rotation"], d["translation"])
        t.validate()
        return t


def apply_transform(mesh: Mesh, t: AffineTransform) -> Mesh:
    """Return a new mesh with vertices and normals mapped by ``t``.

    Triangle indices, uvs, and the surface-group partition are preserved
    exactly; normals go through the inverse-transpose of the linear part
    and are renormalized.
    """
    return Mesh(
        t.apply_points(mesh.vertices),
        t.apply_normals(mesh.normals),
        mesh.uvs.copy(),
        mesh.triangles.copy(),
        mesh.group_ids.copy(),
        list(mesh.group_names),
    )


@dataclass(frozen=True)
class PinholeCamera:
    """Pinhole intrinsics; pixel centers sit at integer coordinates."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int = 640
    height: int = 480
    near_plane: float = 0.5

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigError("principal point must lie inside the image")

    @staticmethod
    def from_fov(hfov_deg: float = 60.0, width: int = 640, height: int = 480,
                 near_plane: float = 0.5) -> "PinholeCamera":
        """Square-pixel camera from a horizontal field of view, centered
        principal point."""
        if not (0 < hfov_deg < 180):
            raise ConfigError("horizontal fov must be in (0, 180) degrees")
        fx = (width / 2.0) / np.tan(np.deg2rad(hfov_deg) / 2.0)
        return PinholeCamera(
            fx=float(fx), fy=float(fx),
            cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
            width=width, height=height, near_plane=near_plane,
        )

    def project(self, point) -> tuple[tuple[float, float], float]:
        """Project one camera-frame point to (pixel, planar depth).

        Raises ValueError for points at or behind the near plane.
        """
        x, y, z = (float(v) for v in np.asarray(point, dtype=np.float64))
        if z <= self.near_plane:
            raise ValueError(f"point at z={z} is behind the near plane")
        return (self.fx * x / z + self.cx, self.fy * y / z + self.cy), z

    def project_points(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized projection; caller guarantees z > near_plane."""
        points = np.asarray(points, dtype=np.float64)
        z = points[..., 2]
        u = self.fx * points[..., 0] / z + self.cx
        v = self.fy * points[..., 1] / z + self.cy
        return np.stack([u, v], axis=-1), z

    def unproject(self, pixel, depth: float) -> np.ndarray:
        """Lift a pixel at planar depth back to a camera-frame point."""
        if depth <= 0:
            raise ValueError("depth must be positive")
        u, v = float(pixel[0]), float(pixel[1])
        return np.array([
            (u - self.cx) * depth / self.fx,
            (v - self.cy) * depth / self.fy,
            depth,
        ])

    def unproject_grid(self, depth: np.ndarray) -> np.ndarray:
        """Unproject a full (H, W) depth map to an (H, W, 3) point cloud."""
        depth = np.asarray(depth, dtype=np.float64)
        ys, xs = np.mgrid[0:self.height, 0:self.width]
        return np.stack([
            (xs - self.cx) / self.fx * depth,
            (ys - self.cy) / self.fy * depth,
            depth,
        ], axis=-1)

    def pixel_ray_dirs(self) -> np.ndarray:
        """(H, W, 3) ray directions with z = 1, so ray parameter == depth."""
        ys, xs = np.mgrid[0:self.height, 0:self.width]
        return self.ray_dirs_for(xs.astype(np.float64), ys.astype(np.float64))

    def ray_dirs_for(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Ray directions (z = 1) for arbitrary continuous pixel coords."""
        dx = (np.asarray(xs, dtype=np.float64) - self.cx) / self.fx
        dy = (np.asarray(ys, dtype=np.float64) - self.cy) / self.fy
        return np.stack([dx, dy, np.ones_like(dx)], axis=-1)

    def frustum_half_extent(self, depth: float) -> tuple[float, float]:
        """Half width/height of the view frustum cross-section at ``depth``."""
        return (
            depth * (self.width / 2.0) / self.fx,
            depth * (self.height / 2.0) / self.fy,
        )

    def to_dict(self) -> dict:
        return {
            "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
            "width": self.width, "height": self.height,
            "near_plane": self.near_plane,
        }

    @staticmethod
    def from_dict(d: dict) -> "PinholeCamera":
        return PinholeCamera(**d)
