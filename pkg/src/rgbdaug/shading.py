"""Materials, lights, and the per-pixel shading model.

Shading is Blinn-Phong style: an ambient floor plus, per light, a
Lambertian diffuse term and (for standard materials) a specular lobe,
each scaled by distance attenuation 1 / (1 + d^2) and a soft shadow
visibility factor. Shadow visibility is estimated with a fixed number
of jittered occlusion rays whose jitter comes from a pixel-indexed hash,
so results are independent of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .intersect import occlusion_any_hit
from .rng import hash_u32_array

LIGHT_KINDS = ("directional", "point", "spot")
REFLECTION_MODELS = ("standard", "diffuse")


@dataclass(frozen=True)
class Material:
    """Surface reflection parameters; albedo comes from the texture."""

    reflection: str = "standard"
    specular_strength: float = 0.4
    shininess: float = 32.0
    ambient: float = 0.18

    def validate(self) -> None:
        if self.reflection not in REFLECTION_MODELS:
            raise ConfigError(f"unknown reflection model {self.reflection!r}")
        if not 0.0 <= self.specular_strength <= 1.0:
            raise ConfigError("specular_strength must be in [0, 1]")
        if self.shininess <= 0.0:
            raise ConfigError("shininess must be positive")
        if not 0.0 <= self.ambient <= 1.0:
            raise ConfigError("ambient must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "reflection": self.reflection,
            "specular_strength": self.specular_strength,
            "shininess": self.shininess,
            "ambient": self.ambient,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Material":
        mat = cls(**data)
        mat.validate()
        return mat


@dataclass
class Light:
    """One scene light.

    ``direction`` is the direction light travels (directional/spot);
    ``position`` applies to point and spot lights. ``intensity`` scales
    the RGB color and already includes any sampling-time gain.
    """

    kind: str = "point"
    color: tuple = (1.0, 1.0, 1.0)
    intensity: float = 1.0
    position: tuple = (0.0, 0.0, 0.0)
    direction: tuple = (0.0, 0.0, 1.0)
    inner_angle_deg: float = 25.0
    outer_angle_deg: float = 40.0

    def validate(self) -> None:
        if self.kind not in LIGHT_KINDS:
            raise ConfigError(f"unknown light kind {self.kind!r}")
        if len(self.color) != 3 or any(c < 0 for c in self.color):
            raise ConfigError("light color must be a non-negative RGB triple")
        if self.intensity < 0:
            raise ConfigError("light intensity must be non-negative")
        if self.kind in ("directional", "spot"):
            if np.linalg.norm(self.direction) < 1e-12:
                raise ConfigError("light direction must be non-zero")
        if self.kind == "spot":
            if not 0.0 < self.inner_angle_deg <= self.outer_angle_deg < 90.0:
                raise ConfigError("spot angles must satisfy 0 < inner <= outer < 90")

    def to_dict(self) -> dict:
        data = {
            "kind": self.kind,
            "color": [float(c) for c in self.color],
            "intensity": float(self.intensity),
        }
        if self.kind in ("point", "spot"):
            data["position"] = [float(p) for p in self.position]
        if self.kind in ("directional", "spot"):
            data["direction"] = [float(d) for d in self.direction]
        if self.kind == "spot":
            data["inner_angle_deg"] = float(self.inner_angle_deg)
            data["outer_angle_deg"] = float(self.outer_angle_deg)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Light":
        light = cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})
        light.validate()
        return light


@dataclass
class ShadowConfig:
    """Soft-shadow parameters.

    ``normal_bias`` pushes ray origins off the surface along the normal;
    ``depth_bias`` shortens the ray at the light end. Both suppress
    self-shadowing acne. ``softness_samples`` jittered rays per pixel and
    light approximate an area light of radius ``jitter_radius``.
    """

    enabled: bool = True
    softness_samples: int = 4
    normal_bias: float = 0.03
    depth_bias: float = 0.03
    jitter_radius: float = 0.35

    def validate(self) -> None:
        if self.softness_samples < 1:
            raise ConfigError("softness_samples must be at least 1")
        if self.normal_bias < 0 or self.depth_bias < 0:
            raise ConfigError("shadow biases must be non-negative")
        if self.jitter_radius < 0:
            raise ConfigError("jitter_radius must be non-negative")

    def to_dict(self) -> dict:
        return {
            "enabled": self.enabled,
            "softness_samples": self.softness_samples,
            "normal_bias": self.normal_bias,
            "depth_bias": self.depth_bias,
            "jitter_radius": self.jitter_radius,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ShadowConfig":
        cfg = cls(**data)
        cfg.validate()
        return cfg


def light_field(light: Light, points: np.ndarray, directional_ray_len: float):
    """Per-point light geometry.

    Returns (to_light unit vectors (P, 3), attenuation·cone scale (P,),
    ray length to the light (P,)). Directional lights attenuate only by
    intensity and use ``directional_ray_len`` as their occlusion range.
    """
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    if light.kind == "directional":
        d = np.asarray(light.direction, dtype=np.float64)
        d = d / np.linalg.norm(d)
        to_light = np.broadcast_to(-d, (n, 3))
        return to_light, np.ones(n), np.full(n, float(directional_ray_len))

    vec = np.asarray(light.position, dtype=np.float64) - points
    dist = np.linalg.norm(vec, axis=1)
    safe = np.maximum(dist, 1e-12)
    to_light = vec / safe[:, None]
    atten = 1.0 / (1.0 + dist * dist)
    if light.kind == "spot":
        axis = np.asarray(light.direction, dtype=np.float64)
        axis = axis / np.linalg.norm(axis)
        cos_to_point = -(to_light @ axis)
        cos_outer = np.cos(np.deg2rad(light.outer_angle_deg))
        cos_inner = np.cos(np.deg2rad(light.inner_angle_deg))
        t = np.clip((cos_to_point - cos_outer) / max(cos_inner - cos_outer, 1e-9), 0.0, 1.0)
        atten = atten * (t * t * (3.0 - 2.0 * t))
    return to_light, atten, dist


def _ortho_basis(dirs: np.ndarray):
    """Two unit vectors perpendicular to each direction in ``dirs``."""
    helper = np.where(
        (np.abs(dirs[:, 0]) > 0.9)[:, None],
        np.array([0.0, 1.0, 0.0]),
        np.array([1.0, 0.0, 0.0]),
    )
    bu = np.cross(dirs, helper)
    bu /= np.linalg.norm(bu, axis=1, keepdims=True)
    bv = np.cross(dirs, bu)
    return bu, bv


def shadow_visibility(points, normals, pixel_x, pixel_y, light: Light,
                      light_index: int, occluders, cfg: ShadowConfig,
                      directional_ray_len: float) -> np.ndarray:
    """Fraction of jittered shadow rays that reach the light, per point.

    ``occluders`` is (v0, v1, v2, obj_tri_start, obj_min, obj_max) as
    consumed by the any-hit kernel. Points facing away from the light
    get visibility 0 without casting rays; their diffuse term is zero
    regardless. Jitter depends only on (pixel, light, sample) indices.
    """
    points = np.asarray(points, dtype=np.float64)
    normals = np.asarray(normals, dtype=np.float64)
    n = points.shape[0]
    vis = np.zeros(n)
    if n == 0:
        return vis

    to_light, _, ray_len = light_field(light, points, directional_ray_len)
    facing = np.sum(normals * to_light, axis=1) > 0.0
    if not facing.any():
        return vis
    if not cfg.enabled:
        vis[facing] = 1.0
        return vis

    p = points[facing]
    nrm = normals[facing]
    tl = to_light[facing]
    rlen = ray_len[facing]
    px = np.asarray(pixel_x)[facing]
    py = np.asarray(pixel_y)[facing]
    a = p.shape[0]
    s = int(cfg.softness_samples)

    targets = p + tl * rlen[:, None]
    bu, bv = _ortho_basis(tl)
    origins = p + nrm * cfg.normal_bias

    all_origins = np.repeat(origins[None, :, :], s, axis=0).reshape(s * a, 3)
    all_dirs = np.empty((s, a, 3))
    all_maxt = np.empty((s, a))
    inv = 1.0 / 4294967296.0
    for k in range(s):
        h1 = hash_u32_array(px, py, np.int64(light_index), np.int64(2 * k)) * inv
        h2 = hash_u32_array(px, py, np.int64(light_index), np.int64(2 * k + 1)) * inv
        radius = cfg.jitter_radius * np.sqrt(h1)
        ang = 2.0 * np.pi * h2
        jt = targets + (radius * np.cos(ang))[:, None] * bu + (radius * np.sin(ang))[:, None] * bv
        ray = jt - origins
        length = np.linalg.norm(ray, axis=1)
        length = np.maximum(length, 1e-12)
        all_dirs[k] = ray / length[:, None]
        all_maxt[k] = length - cfg.depth_bias
    occluded = occlusion_any_hit(
        all_origins, all_dirs.reshape(s * a, 3), all_maxt.reshape(s * a),
        *occluders,
    )
    vis[facing] = 1.0 - occluded.reshape(s, a).mean(axis=0)
    return vis


def shade_pixels(points, normals, albedo, ambient, specular_strength,
                 shininess, standard_mask, lights, visibility,
                 directional_ray_len) -> np.ndarray:
    """Shade a batch of surface points viewed from the origin.

    ``visibility`` is (P, L) with one column per light in ``lights``;
    per-pixel material parameters come in as flat arrays. Returns RGB
    in [0, 1], float64 (P, 3).
    """
    points = np.asarray(points, dtype=np.float64)
    normals = np.asarray(normals, dtype=np.float64)
    albedo = np.asarray(albedo, dtype=np.float64)
    out = ambient[:, None] * albedo

    view = -points
    view_len = np.maximum(np.linalg.norm(view, axis=1, keepdims=True), 1e-12)
    view = view / view_len

    for idx, light in enumerate(lights):
        to_light, atten, _ = light_field(light, points, directional_ray_len)
        ndotl = np.maximum(np.sum(normals * to_light, axis=1), 0.0)
        rgb = np.asarray(light.color, dtype=np.float64) * light.intensity
        scale = atten * visibility[:, idx]
        out += (scale * ndotl)[:, None] * albedo * rgb

        if standard_mask.any():
            half = to_light + view
            hlen = np.maximum(np.linalg.norm(half, axis=1, keepdims=True), 1e-12)
            half = half / hlen
            ndoth = np.maximum(np.sum(normals * half, axis=1), 0.0)
            spec = specular_strength * np.power(ndoth, shininess) * scale
            # Specular highlights only where the surface faces the light.
            spec = np.where((ndotl > 0.0) & standard_mask, spec, 0.0)
            out += spec[:, None] * rgb

    return np.clip(out, 0.0, 1.0)
