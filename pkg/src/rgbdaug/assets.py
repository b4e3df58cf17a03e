"""Asset catalogs: fixed libraries of meshes and textures.

The catalogs are generated procedurally but are frozen by construction:
entry parameters derive from a constant catalog seed, never from build
seeds, so every machine and every run sees byte-identical assets. Scenes
reference entries by key; the catalog_id string guards against rendering
a scene against a mismatched library.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .geometry import Mesh
from .primitives import make_primitive, primitive_group_names
from .rng import derive_stream_seed, make_generator
from .textures import DEFAULT_RESOLUTION, TEXTURE_FAMILIES, TextureSource, make_texture

CATALOG_SEED = 0x0C4A70
MESH_VARIANTS_PER_KIND = 12
TEXTURE_VARIANTS_PER_FAMILY = 52

_MESH_TAG_BASE = 0x3D0000
_TEXTURE_TAG_BASE = 0x7E0000

DETAIL_TIERS = {"low": 8, "standard": 20}


def _sample_box_dims(rng):
    return {"size": tuple(rng.uniform(0.5, 1.7, size=3))}


def _sample_cylinder_dims(rng):
    return {"radius": float(rng.uniform(0.25, 0.8)), "height": float(rng.uniform(0.6, 2.0))}


def _sample_prism_dims(rng):
    return {
        "sides": int(rng.integers(3, 9)),
        "radius": float(rng.uniform(0.3, 0.9)),
        "height": float(rng.uniform(0.6, 2.0)),
    }


def _sample_lathe_dims(rng):
    points = int(rng.integers(5, 10))
    height = float(rng.uniform(1.0, 2.2))
    ys = np.linspace(0.0, height, points)
    radii = rng.uniform(0.2, 1.0, size=points)
    # Light smoothing keeps silhouettes from being jagged.
    for _ in range(2):
        radii[1:-1] = 0.5 * radii[1:-1] + 0.25 * (radii[:-2] + radii[2:])
    radii = np.clip(radii, 0.15, None)
    if rng.random() < 0.5:
        radii[0] = 0.0
    if rng.random() < 0.5:
        radii[-1] = 0.0
    profile = [[float(r), float(y - height / 2.0)] for r, y in zip(radii, ys)]
    return {"profile": profile}


def _sample_torus_dims(rng):
    major = float(rng.uniform(0.5, 1.0))
    arc = 1.0 if rng.random() < 0.5 else float(rng.uniform(0.35, 0.9))
    return {
        "major_radius": major,
        "minor_radius": float(rng.uniform(0.18, 0.42) * major),
        "arc_fraction": arc,
    }


def _sample_table_dims(rng):
    return {
        "width": float(rng.uniform(1.2, 2.4)),
        "depth": float(rng.uniform(0.8, 1.6)),
        "height": float(rng.uniform(0.7, 1.2)),
        "top_thickness": float(rng.uniform(0.08, 0.16)),
        "leg_thickness": float(rng.uniform(0.08, 0.16)),
    }


def _sample_cabinet_dims(rng):
    return {
        "width": float(rng.uniform(0.8, 1.6)),
        "height": float(rng.uniform(1.2, 2.2)),
        "depth": float(rng.uniform(0.4, 0.7)),
        "door_inset": float(rng.uniform(0.04, 0.10)),
        "door_proud": float(rng.uniform(0.02, 0.05)),
    }


def _sample_vase_dims(rng):
    belly = float(rng.uniform(0.6, 1.0))
    return {
        "base_radius": float(rng.uniform(0.3, 0.6)),
        "belly_radius": belly,
        "neck_radius": float(rng.uniform(0.18, 0.45)),
        "mouth_radius": float(rng.uniform(0.25, 0.55)),
        "height": float(rng.uniform(1.2, 2.4)),
    }


_DIM_SAMPLERS = {
    "box": _sample_box_dims,
    "cylinder": _sample_cylinder_dims,
    "prism": _sample_prism_dims,
    "lathe_profile": _sample_lathe_dims,
    "torus_segment": _sample_torus_dims,
    "table_like": _sample_table_dims,
    "cabinet_like": _sample_cabinet_dims,
    "vase_profile": _sample_vase_dims,
}

MESH_KINDS = tuple(_DIM_SAMPLERS)


@dataclass
class MeshEntry:
    """One catalog mesh: parameters plus the tessellated result."""

    key: str
    kind: str
    detail: int
    dims: dict
    group_names: list[str]
    bounding_radius: float
    mesh: Mesh


class MeshCatalog:
    """Frozen library of procedural meshes.

    ``detail_tier`` picks the tessellation level ("standard" for
    production, "low" for fast tests); entry keys and dims are identical
    across tiers.
    """

    def __init__(self, detail_tier: str = "standard",
                 variants_per_kind: int = MESH_VARIANTS_PER_KIND):
        if detail_tier not in DETAIL_TIERS:
            raise ConfigError(f"unknown detail tier {detail_tier!r}")
        self.detail_tier = detail_tier
        detail = DETAIL_TIERS[detail_tier]
        self._entries: dict[str, MeshEntry] = {}
        for kind_idx, kind in enumerate(MESH_KINDS):
            for variant in range(variants_per_kind):
                tag = _MESH_TAG_BASE + kind_idx * 1000 + variant
                rng = make_generator(derive_stream_seed(CATALOG_SEED, tag))
                dims = _DIM_SAMPLERS[kind](rng)
                key = f"{kind}_{variant:02d}"
                mesh = make_primitive(kind, detail=detail, **dims)
                radius = float(np.linalg.norm(mesh.vertices, axis=1).max())
                self._entries[key] = MeshEntry(
                    key=key, kind=kind, detail=detail, dims=dims,
                    group_names=primitive_group_names(kind, **dims),
                    bounding_radius=radius, mesh=mesh,
                )

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def keys(self) -> list[str]:
        return list(self._entries)

    def entry(self, key: str) -> MeshEntry:
        if key not in self._entries:
            raise ConfigError(f"unknown mesh key {key!r}")
        return self._entries[key]

    def mesh(self, key: str) -> Mesh:
        return self.entry(key).mesh


class TextureCatalog:
    """Frozen library of procedural textures, generated lazily."""

    def __init__(self, resolution: int = DEFAULT_RESOLUTION,
                 variants_per_family: int = TEXTURE_VARIANTS_PER_FAMILY):
        self.resolution = int(resolution)
        self._seeds: dict[str, tuple[str, int]] = {}
        self._cache: dict[str, TextureSource] = {}
        for fam_idx, family in enumerate(TEXTURE_FAMILIES):
            for variant in range(variants_per_family):
                tag = _TEXTURE_TAG_BASE + fam_idx * 1000 + variant
                key = f"{family}_{variant:02d}"
                self._seeds[key] = (family, derive_stream_seed(CATALOG_SEED, tag))

    def __len__(self) -> int:
        return len(self._seeds)

    @property
    def keys(self) -> list[str]:
        return list(self._seeds)

    def texture(self, key: str) -> TextureSource:
        if key not in self._seeds:
            raise ConfigError(f"unknown texture key {key!r}")
        if key not in self._cache:
            family, seed = self._seeds[key]
            self._cache[key] = make_texture(family, seed, self.resolution)
        return self._cache[key]

    def family_of(self, key: str) -> str:
        if key not in self._seeds:
            raise ConfigError(f"unknown texture key {key!r}")
        return self._seeds[key][0]


@dataclass
class AssetCatalog:
    """Mesh and texture libraries bundled under one identity string."""

    meshes: MeshCatalog
    textures: TextureCatalog
    catalog_id: str = field(init=False)

    def __post_init__(self):
        self.catalog_id = (
            f"v1-m{len(self.meshes)}x{self.meshes.detail_tier}"
            f"-t{len(self.textures)}r{self.textures.resolution}"
            f"-s{CATALOG_SEED:08x}"
        )

    def manifest(self) -> dict:
        return {
            "catalog_id": self.catalog_id,
            "meshes": [
                {
                    "key": e.key,
                    "kind": e.kind,
                    "detail": e.detail,
                    "dims": e.dims,
                    "groups": e.group_names,
                    "bounding_radius": e.bounding_radius,
                }
                for e in (self.meshes.entry(k) for k in self.meshes.keys)
            ],
            "textures": [
                {"key": k, "family": self.textures.family_of(k),
                 "resolution": self.textures.resolution}
                for k in self.textures.keys
            ],
        }


@lru_cache(maxsize=2)
def get_default_catalog(detail_tier: str = "standard") -> AssetCatalog:
    """The standard asset library (96 meshes, 312 textures)."""
    return AssetCatalog(MeshCatalog(detail_tier), TextureCatalog())
