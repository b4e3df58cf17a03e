"""Seeded scene sampling.

A scene is fully described by a SceneSpec: object placements, per-surface
textures, lights, and shadow settings. Sampling consumes a single
generator in a fixed draw order, so one 64-bit seed reproduces the scene
exactly; a SceneSpec also serializes to JSON for storage next to rendered
outputs.

Placement couples object size to depth so that the on-screen footprint
is roughly depth-invariant, which keeps sampled scenes inside the
coverage acceptance band most of the time.
"""

from __future__ import annotations

import colorsys
import json
from dataclasses import dataclass, field

import numpy as np

from .assets import AssetCatalog
from .errors import ConfigError
from .geometry import AffineTransform, PinholeCamera
from .rng import make_generator
from .shading import Light, Material, ShadowConfig

DEFAULT_BG_DISTANCE = 21.0
DEFAULT_UNIT_SCALE = 10.0 / 21.0


@dataclass
class AugmentationParams:
    """Knobs for scene sampling and coverage acceptance."""

    min_objects: int = 1
    max_objects: int = 9
    light_count_range: tuple = (4, 6)
    p_colored_light: float = 0.20
    p_shadows: float = 0.50
    scale_jitter: tuple = (0.9, 1.1)
    coverage_bounds: tuple = (0.10, 0.50)
    bg_distance: float = DEFAULT_BG_DISTANCE
    unit_scale: float = DEFAULT_UNIT_SCALE
    max_cull_retries: int = 16
    texture_rgb_shift_range: tuple = (-32, 32)

    def validate(self) -> None:
        if not 1 <= self.min_objects <= self.max_objects:
            raise ConfigError("object count range must satisfy 1 <= min <= max")
        lo, hi = self.light_count_range
        if not 1 <= lo <= hi:
            raise ConfigError("light_count_range must satisfy 1 <= lo <= hi")
        for name in ("p_colored_light", "p_shadows"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1]")
        slo, shi = self.scale_jitter
        if not 0.0 < slo <= shi:
            raise ConfigError("scale_jitter must satisfy 0 < lo <= hi")
        clo, chi = self.coverage_bounds
        if not 0.0 <= clo < chi <= 1.0:
            raise ConfigError("coverage_bounds must satisfy 0 <= lo < hi <= 1")
        if self.bg_distance <= 0 or self.unit_scale <= 0:
            raise ConfigError("bg_distance and unit_scale must be positive")
        if self.max_cull_retries < 0:
            raise ConfigError("max_cull_retries must be non-negative")
        tlo, thi = self.texture_rgb_shift_range
        if tlo > thi:
            raise ConfigError("texture_rgb_shift_range must be ordered")

    def to_dict(self) -> dict:
        return {
            "min_objects": self.min_objects,
            "max_objects": self.max_objects,
            "light_count_range": list(self.light_count_range),
            "p_colored_light": self.p_colored_light,
            "p_shadows": self.p_shadows,
            "scale_jitter": list(self.scale_jitter),
            "coverage_bounds": list(self.coverage_bounds),
            "bg_distance": self.bg_distance,
            "unit_scale": self.unit_scale,
            "max_cull_retries": self.max_cull_retries,
            "texture_rgb_shift_range": list(self.texture_rgb_shift_range),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentationParams":
        kwargs = {
            k: tuple(v) if isinstance(v, list) else v for k, v in data.items()
        }
        params = cls(**kwargs)
        params.validate()
        return params


@dataclass
class ObjectInstance:
    """One placed virtual object."""

    mesh_key: str
    transform: AffineTransform
    textures: dict  # surface group name -> texture key
    color_shift: tuple  # per-channel additive shift, 8-bit units
    material: Material

    def to_dict(self) -> dict:
        return {
            "mesh_key": self.mesh_key,
            "transform": self.transform.to_dict(),
            "textures": dict(self.textures),
            "color_shift": [int(c) for c in self.color_shift],
            "material": self.material.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ObjectInstance":
        return cls(
            mesh_key=data["mesh_key"],
            transform=AffineTransform.from_dict(data["transform"]),
            textures=dict(data["textures"]),
            color_shift=tuple(data["color_shift"]),
            material=Material.from_dict(data["material"]),
        )


@dataclass
class SceneSpec:
    """Complete, renderable description of one augmentation scene."""

    seed: int
    catalog_id: str
    camera: PinholeCamera
    bg_distance: float
    unit_scale: float
    coverage_bounds: tuple
    objects: list = field(default_factory=list)
    lights: list = field(default_factory=list)
    shadows: ShadowConfig = field(default_factory=ShadowConfig)

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "catalog_id": self.catalog_id,
            "camera": self.camera.to_dict(),
            "bg_distance": float(self.bg_distance),
            "unit_scale": float(self.unit_scale),
            "coverage_bounds": list(self.coverage_bounds),
            "objects": [o.to_dict() for o in self.objects],
            "lights": [l.to_dict() for l in self.lights],
            "shadows": self.shadows.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SceneSpec":
        return cls(
            seed=data["seed"],
            catalog_id=data["catalog_id"],
            camera=PinholeCamera.from_dict(data["camera"]),
            bg_distance=data["bg_distance"],
            unit_scale=data["unit_scale"],
            coverage_bounds=tuple(data["coverage_bounds"]),
            objects=[ObjectInstance.from_dict(o) for o in data["objects"]],
            lights=[Light.from_dict(l) for l in data["lights"]],
            shadows=ShadowConfig.from_dict(data["shadows"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "SceneSpec":
        return cls.from_dict(json.loads(text))


def uniform_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation matrix (quaternion subgroup algorithm)."""
    u1, u2, u3 = rng.random(3)
    a, b = np.sqrt(1.0 - u1), np.sqrt(u1)
    x = a * np.sin(2.0 * np.pi * u2)
    y = a * np.cos(2.0 * np.pi * u2)
    z = b * np.sin(2.0 * np.pi * u3)
    w = b * np.cos(2.0 * np.pi * u3)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def _random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > 1e-6:
            return v / n


def _random_light_color(rng: np.random.Generator, colored: bool) -> tuple:
    if not colored:
        return (1.0, 1.0, 1.0)
    hue = rng.uniform(0.0, 1.0)
    sat = rng.uniform(0.5, 1.0)
    return tuple(colorsys.hsv_to_rgb(hue, sat, 1.0))


def sample_light_rig(rng: np.random.Generator, params: AugmentationParams) -> list:
    """Sample the scene's lights.

    Each light's count is uniform over the configured range; each light
    is independently colored with probability p_colored_light. Point and
    spot intensities carry a gain that cancels distance attenuation at a
    fixed anchor inside the object zone, so total illumination stays
    near unity regardless of placement; everything is divided by the
    light count.
    """
    lo, hi = params.light_count_range
    count = int(rng.integers(lo, hi + 1))
    anchor = np.array([0.0, 0.0, params.bg_distance / 3.0])
    lights = []
    for _ in range(count):
        kind_draw = rng.random()
        kind = "directional" if kind_draw < 0.25 else ("point" if kind_draw < 0.75 else "spot")
        colored = rng.random() < params.p_colored_light
        color = _random_light_color(rng, colored)
        base = rng.uniform(0.7, 1.3)
        if kind == "directional":
            direction = _random_unit_vector(rng)
            lights.append(Light(
                kind=kind, color=color, intensity=base / count,
                direction=tuple(direction),
            ))
            continue
        position = anchor + _random_unit_vector(rng) * rng.uniform(0.25, 0.6) * params.bg_distance
        gain = 1.0 + float(np.sum((position - anchor) ** 2))
        if kind == "point":
            lights.append(Light(
                kind=kind, color=color, intensity=base * gain / count,
                position=tuple(position),
            ))
        else:
            aim = anchor + rng.uniform(-1.5, 1.5, size=3)
            direction = aim - position
            direction /= np.linalg.norm(direction)
            inner = rng.uniform(15.0, 30.0)
            outer = inner + rng.uniform(5.0, 15.0)
            lights.append(Light(
                kind=kind, color=color, intensity=base * gain / count,
                position=tuple(position), direction=tuple(direction),
                inner_angle_deg=inner, outer_angle_deg=outer,
            ))
    return lights


def sample_object_instance(rng: np.random.Generator, params: AugmentationParams,
                           catalog: AssetCatalog, camera: PinholeCamera,
                           n_objects: int, coverage_target: float) -> ObjectInstance:
    """Sample one object placement.

    The target screen footprint per object is coverage_target / n_objects;
    the scale that achieves it is derived from the mesh bounding radius
    and the sampled depth, then jittered.
    """
    mesh_keys = catalog.meshes.keys
    entry = catalog.meshes.entry(mesh_keys[int(rng.integers(0, len(mesh_keys)))])

    z = rng.uniform(0.15, 0.5) * params.bg_distance
    # Solid angle of the bounding disk -> screen fraction; shapes fill
    # roughly 60% of their bounding disk, hence the fudge factor.
    frac = coverage_target / n_objects
    pixel_area = camera.width * camera.height
    r_target = z * np.sqrt(frac * pixel_area / np.pi) / camera.fx * 1.29
    size_mult = rng.uniform(0.75, 1.3)
    base_scale = r_target * size_mult / entry.bounding_radius
    per_axis = base_scale * rng.uniform(params.scale_jitter[0], params.scale_jitter[1], size=3)

    rotation = uniform_rotation(rng)

    extent = float(per_axis.max()) * entry.bounding_radius
    z = max(z, camera.near_plane + 0.1 + extent)
    half_w, half_h = camera.frustum_half_extent(z)
    x = rng.uniform(-0.75, 0.75) * half_w
    y = rng.uniform(-0.75, 0.75) * half_h

    textures = {}
    tex_keys = catalog.textures.keys
    for group in entry.group_names:
        textures[group] = tex_keys[int(rng.integers(0, len(tex_keys)))]
    tlo, thi = params.texture_rgb_shift_range
    color_shift = tuple(int(v) for v in rng.integers(tlo, thi + 1, size=3))

    material = Material() if rng.random() < 0.6 else Material(reflection="diffuse")

    return ObjectInstance(
        mesh_key=entry.key,
        transform=AffineTransform(per_axis, rotation, np.array([x, y, z])),
        textures=textures,
        color_shift=color_shift,
        material=material,
    )


def sample_scene(seed: int, params: AugmentationParams, catalog: AssetCatalog,
                 camera: PinholeCamera | None = None) -> SceneSpec:
    """Sample a full scene from one seed.

    The draw order is fixed (object count, coverage target, lights,
    shadow settings, then objects); changing it would silently break
    reproducibility of stored scenes, so treat it as part of the format.
    """
    params.validate()
    if camera is None:
        camera = PinholeCamera.from_fov()
    rng = make_generator(seed)

    n_objects = int(rng.integers(params.min_objects, params.max_objects + 1))
    clo, chi = params.coverage_bounds
    margin = 0.1 * (chi - clo)
    coverage_target = rng.uniform(clo + margin, chi - margin)

    lights = sample_light_rig(rng, params)

    shadows_enabled = bool(rng.random() < params.p_shadows)
    normal_bias = float(rng.uniform(0.01, 0.05))
    depth_bias = float(rng.uniform(0.01, 0.05))
    shadows = ShadowConfig(
        enabled=shadows_enabled, softness_samples=4,
        normal_bias=normal_bias, depth_bias=depth_bias,
    )

    objects = [
        sample_object_instance(rng, params, catalog, camera, n_objects, coverage_target)
        for _ in range(n_objects)
    ]

    return SceneSpec(
        seed=int(seed),
        catalog_id=catalog.catalog_id,
        camera=camera,
        bg_distance=params.bg_distance,
        unit_scale=params.unit_scale,
        coverage_bounds=(clo, chi),
        objects=objects,
        lights=lights,
        shadows=shadows,
    )
