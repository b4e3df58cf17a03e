"""CPU rendering of virtual scenes over real color images.

Two visibility routes produce the same G-buffer: a rasterizer that tests
each triangle against ray samples inside its projected screen bounds,
and an exhaustive reference that tests every pixel against every
triangle. Both use the one shared ray-triangle predicate and the same
lexicographic (depth, object, triangle) winner rule, so they agree to
the bit; the rasterizer only prunes pairs that cannot hit. Shading,
soft shadows, silhouette blending, and quantization run in a single
pass shared by both routes.

Each pixel carries five ray samples: the center ray, which owns depth
and shading, and four corner subsamples at (+-0.25, +-0.25) whose hit
count drives the silhouette blend weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assets import AssetCatalog
from .errors import ConfigError
from .geometry import PinholeCamera, apply_transform
from .intersect import intersect_ray_triangles, intersect_rays_triangle
from .sampling import SceneSpec
from .shading import Light, ShadowConfig, shade_pixels, shadow_visibility
from .textures import sample_texture, shift_texture_colors

# Corner subsample offsets, in pixel units relative to the center.
COVERAGE_OFFSETS = ((-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25))

# Conservative margin (pixels) added to projected bounds; it only adds
# candidate pairs, never removes genuine hits.
_BBOX_MARGIN = 1e-4

DIRECTIONAL_RAY_FACTOR = 4.0


@dataclass
class RenderSoup:
    """Scene geometry flattened to world-space triangle arrays.

    Triangles are grouped contiguously per object (for occlusion
    pruning); those crossing the near plane are dropped outright, which
    both visibility routes therefore agree on by construction.
    """

    camera: PinholeCamera
    v0: np.ndarray  # (M, 3)
    v1: np.ndarray
    v2: np.ndarray
    n0: np.ndarray  # per-corner vertex normals
    n1: np.ndarray
    n2: np.ndarray
    uv0: np.ndarray  # (M, 2)
    uv1: np.ndarray
    uv2: np.ndarray
    object_id: np.ndarray  # (M,) int32
    tri_id: np.ndarray  # (M,) intrinsic triangle index within its object
    tex_index: np.ndarray  # (M,) index into textures
    textures: list  # float32 (H, W, 3) arrays, color shifts applied
    obj_tri_start: np.ndarray  # (O + 1,) prefix over triangle rows
    obj_min: np.ndarray  # (O, 3) object bounds
    obj_max: np.ndarray
    obj_ambient: np.ndarray  # per-object material parameters
    obj_specular: np.ndarray
    obj_shininess: np.ndarray
    obj_standard: np.ndarray  # bool
    lights: list = field(default_factory=list)
    shadows: ShadowConfig = field(default_factory=ShadowConfig)
    bg_distance: float = 21.0
    unit_scale: float = 10.0 / 21.0

    @property
    def triangle_count(self) -> int:
        return self.v0.shape[0]

    def occluder_arrays(self):
        return (self.v0, self.v1, self.v2,
                self.obj_tri_start, self.obj_min, self.obj_max)


@dataclass
class GBuffer:
    """Per-pixel hit attributes from the center ray plus subsample counts."""

    t: np.ndarray  # (H, W) planar depth, +inf where no hit
    tri: np.ndarray  # (H, W) winning soup triangle row, -1 where no hit
    u: np.ndarray  # (H, W) barycentric of corner 1
    v: np.ndarray  # (H, W) barycentric of corner 2
    cover: np.ndarray  # (H, W) uint8 subsample hit count, 0..4


@dataclass
class VirtualLayer:
    """Rendered virtual content ready for depth compositing."""

    rgb: np.ndarray  # (H, W, 3) uint8; background bytes outside the mask
    depth: np.ndarray  # (H, W) float64 scene units, 0 where no virtual surface
    mask: np.ndarray  # (H, W) bool, center-ray hits
    coverage: float  # mask fraction of the frame


def build_render_soup(spec: SceneSpec, catalog: AssetCatalog) -> RenderSoup:
    """Flatten a scene into transformed triangle arrays.

    Raises ConfigError when the scene references a different asset
    catalog than the one supplied.
    """
    if spec.catalog_id != catalog.catalog_id:
        raise ConfigError(
            f"scene was sampled against catalog {spec.catalog_id!r}, "
            f"got {catalog.catalog_id!r}"
        )
    camera = spec.camera
    chunks = {k: [] for k in (
        "v0", "v1", "v2", "n0", "n1", "n2", "uv0", "uv1", "uv2",
        "object_id", "tri_id", "tex_index",
    )}
    textures: list = []
    obj_tri_start = [0]
    obj_min, obj_max = [], []
    obj_ambient, obj_specular, obj_shininess, obj_standard = [], [], [], []

    for obj_idx, inst in enumerate(spec.objects):
        entry = catalog.meshes.entry(inst.mesh_key)
        mesh = apply_transform(entry.mesh, inst.transform)

        tex_of_group = {}
        for group_name, tex_key in inst.textures.items():
            base = catalog.textures.texture(tex_key).pixels
            textures.append(shift_texture_colors(base, inst.color_shift))
            tex_of_group[group_name] = len(textures) - 1
        group_to_tex = np.array([
            tex_of_group[name] for name in mesh.group_names
        ], dtype=np.int32)

        corners = mesh.vertices[mesh.triangles]  # (T, 3, 3)
        keep = np.all(corners[:, :, 2] > camera.near_plane, axis=1)
        kept = np.flatnonzero(keep)
        if kept.size:
            tri = mesh.triangles[kept]
            chunks["v0"].append(mesh.vertices[tri[:, 0]])
            chunks["v1"].append(mesh.vertices[tri[:, 1]])
            chunks["v2"].append(mesh.vertices[tri[:, 2]])
            chunks["n0"].append(mesh.normals[tri[:, 0]])
            chunks["n1"].append(mesh.normals[tri[:, 1]])
            chunks["n2"].append(mesh.normals[tri[:, 2]])
            uvs = mesh.uvs[kept]
            chunks["uv0"].append(uvs[:, 0])
            chunks["uv1"].append(uvs[:, 1])
            chunks["uv2"].append(uvs[:, 2])
            chunks["object_id"].append(np.full(kept.size, obj_idx, dtype=np.int32))
            chunks["tri_id"].append(kept.astype(np.int32))
            chunks["tex_index"].append(group_to_tex[mesh.group_ids[kept]])
            pts = corners[kept].reshape(-1, 3)
            obj_min.append(pts.min(axis=0))
            obj_max.append(pts.max(axis=0))
        else:
            obj_min.append(np.zeros(3))
            obj_max.append(np.zeros(3))
        obj_tri_start.append(obj_tri_start[-1] + kept.size)

        mat = inst.material
        obj_ambient.append(mat.ambient)
        obj_specular.append(mat.specular_strength)
        obj_shininess.append(mat.shininess)
        obj_standard.append(mat.reflection == "standard")

    def stack(name, width):
        if chunks[name]:
            return np.ascontiguousarray(np.concatenate(chunks[name]))
        dtype = np.int32 if name in ("object_id", "tri_id", "tex_index") else np.float64
        return np.zeros((0, width) if width else 0, dtype=dtype)

    return RenderSoup(
        camera=camera,
        v0=stack("v0", 3), v1=stack("v1", 3), v2=stack("v2", 3),
        n0=stack("n0", 3), n1=stack("n1", 3), n2=stack("n2", 3),
        uv0=stack("uv0", 2), uv1=stack("uv1", 2), uv2=stack("uv2", 2),
        object_id=stack("object_id", 0), tri_id=stack("tri_id", 0),
        tex_index=stack("tex_index", 0),
        textures=textures,
        obj_tri_start=np.asarray(obj_tri_start, dtype=np.int64),
        obj_min=np.asarray(obj_min, dtype=np.float64).reshape(-1, 3),
        obj_max=np.asarray(obj_max, dtype=np.float64).reshape(-1, 3),
        obj_ambient=np.asarray(obj_ambient, dtype=np.float64),
        obj_specular=np.asarray(obj_specular, dtype=np.float64),
        obj_shininess=np.asarray(obj_shininess, dtype=np.float64),
        obj_standard=np.asarray(obj_standard, dtype=bool),
        lights=list(spec.lights),
        shadows=spec.shadows,
        bg_distance=spec.bg_distance,
        unit_scale=spec.unit_scale,
    )


def _empty_gbuffer(camera: PinholeCamera) -> GBuffer:
    h, w = camera.height, camera.width
    return GBuffer(
        t=np.full((h, w), np.inf),
        tri=np.full((h, w), -1, dtype=np.int64),
        u=np.zeros((h, w)),
        v=np.zeros((h, w)),
        cover=np.zeros((h, w), dtype=np.uint8),
    )


def trace_gbuffer_raster(soup: RenderSoup) -> GBuffer:
    """Rasterize: per triangle, test only rays inside its projected bounds.

    The candidate set is conservative (projected vertices bound the
    projected triangle; subsample offsets widen it by 0.25 px), so no
    ray the reference route would hit is ever skipped, and shared
    predicate plus the (t, object, triangle) tie-break make the result
    identical to the exhaustive route.
    """
    camera = soup.camera
    gbuf = _empty_gbuffer(camera)
    m = soup.triangle_count
    if m == 0:
        return gbuf
    h, w = camera.height, camera.width

    obj_best = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
    trid_best = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
    cover = np.zeros((4, h, w), dtype=bool)

    px = np.empty((m, 3))
    py = np.empty((m, 3))
    for k, verts in enumerate((soup.v0, soup.v1, soup.v2)):
        uv, _ = camera.project_points(verts)
        px[:, k] = uv[:, 0]
        py[:, k] = uv[:, 1]
    pad = 0.25 + _BBOX_MARGIN
    x_lo = np.maximum(np.ceil(px.min(axis=1) - pad), 0).astype(np.int64)
    x_hi = np.minimum(np.floor(px.max(axis=1) + pad), w - 1).astype(np.int64)
    y_lo = np.maximum(np.ceil(py.min(axis=1) - pad), 0).astype(np.int64)
    y_hi = np.minimum(np.floor(py.max(axis=1) + pad), h - 1).astype(np.int64)

    offsets_x = np.array([0.0] + [o[0] for o in COVERAGE_OFFSETS])
    offsets_y = np.array([0.0] + [o[1] for o in COVERAGE_OFFSETS])

    for tri_row in range(m):
        if x_lo[tri_row] > x_hi[tri_row] or y_lo[tri_row] > y_hi[tri_row]:
            continue
        xs = np.arange(x_lo[tri_row], x_hi[tri_row] + 1)
        ys = np.arange(y_lo[tri_row], y_hi[tri_row] + 1)
        gx, gy = np.meshgrid(xs, ys, indexing="xy")
        gx = gx.ravel()
        gy = gy.ravel()
        k = gx.size

        sample_x = (gx[None, :] + offsets_x[:, None]).ravel()
        sample_y = (gy[None, :] + offsets_y[:, None]).ravel()
        dirs = camera.ray_dirs_for(sample_x, sample_y)
        u, v, t, hit = intersect_rays_triangle(
            dirs, soup.v0[tri_row], soup.v1[tri_row], soup.v2[tri_row]
        )
        u = u.reshape(5, k)
        v = v.reshape(5, k)
        t = t.reshape(5, k)
        hit = hit.reshape(5, k)

        ch = hit[0]
        if ch.any():
            cy, cx_ = gy[ch], gx[ch]
            tn = t[0][ch]
            cur_t = gbuf.t[cy, cx_]
            obj = int(soup.object_id[tri_row])
            trid = int(soup.tri_id[tri_row])
            better = (tn < cur_t) | (
                (tn == cur_t)
                & ((obj < obj_best[cy, cx_])
                   | ((obj == obj_best[cy, cx_]) & (trid < trid_best[cy, cx_])))
            )
            if better.any():
                uy, ux = cy[better], cx_[better]
                gbuf.t[uy, ux] = tn[better]
                gbuf.tri[uy, ux] = tri_row
                gbuf.u[uy, ux] = u[0][ch][better]
                gbuf.v[uy, ux] = v[0][ch][better]
                obj_best[uy, ux] = obj
                trid_best[uy, ux] = trid

        for s in range(4):
            sh = hit[s + 1]
            if sh.any():
                cover[s][gy[sh], gx[sh]] = True

    gbuf.cover = cover.sum(axis=0).astype(np.uint8)
    return gbuf


def trace_gbuffer_bruteforce(soup: RenderSoup) -> GBuffer:
    """Exhaustive reference: every ray against every triangle.

    Winner selection is the same lexicographic (t, object, triangle)
    rule the rasterizer applies incrementally. Quadratic cost; intended
    for validation at small frame sizes.
    """
    camera = soup.camera
    gbuf = _empty_gbuffer(camera)
    if soup.triangle_count == 0:
        return gbuf

    for y in range(camera.height):
        for x in range(camera.width):
            for s in range(5):
                ox = 0.0 if s == 0 else COVERAGE_OFFSETS[s - 1][0]
                oy = 0.0 if s == 0 else COVERAGE_OFFSETS[s - 1][1]
                d = camera.ray_dirs_for(np.float64(x + ox), np.float64(y + oy))
                u, v, t, hit = intersect_ray_triangles(d, soup.v0, soup.v1, soup.v2)
                hits = np.flatnonzero(hit)
                if hits.size == 0:
                    continue
                if s > 0:
                    gbuf.cover[y, x] += 1
                    continue
                order = np.lexsort((
                    soup.tri_id[hits], soup.object_id[hits], t[hits]
                ))
                win = hits[order[0]]
                gbuf.t[y, x] = t[win]
                gbuf.tri[y, x] = win
                gbuf.u[y, x] = u[win]
                gbuf.v[y, x] = v[win]
    return gbuf


def shade_gbuffer(soup: RenderSoup, gbuf: GBuffer,
                  background_rgb: np.ndarray) -> VirtualLayer:
    """Shared shading, blending, and quantization pass.

    Pixels without a center hit keep their background bytes untouched.
    Masked pixels are shaded, blended against the background with
    weight cover/4, and rounded (half-to-even) to 8 bits.
    """
    camera = soup.camera
    h, w = camera.height, camera.width
    if background_rgb.shape != (h, w, 3) or background_rgb.dtype != np.uint8:
        raise ConfigError("background must be uint8 with shape (H, W, 3)")

    rgb = background_rgb.copy()
    depth = np.zeros((h, w))
    mask = gbuf.tri >= 0
    coverage = float(mask.sum()) / float(h * w)
    if not mask.any():
        return VirtualLayer(rgb=rgb, depth=depth, mask=mask, coverage=coverage)

    depth[mask] = gbuf.t[mask]
    ys, xs = np.nonzero(mask)
    rows = gbuf.tri[mask]
    uu = gbuf.u[mask]
    vv = gbuf.v[mask]
    w0 = 1.0 - uu - vv

    dirs = camera.ray_dirs_for(xs.astype(np.float64), ys.astype(np.float64))
    points = dirs * gbuf.t[mask][:, None]

    normals = (w0[:, None] * soup.n0[rows]
               + uu[:, None] * soup.n1[rows]
               + vv[:, None] * soup.n2[rows])
    lengths = np.linalg.norm(normals, axis=1, keepdims=True)
    normals = normals / np.maximum(lengths, 1e-12)

    uv = (w0[:, None] * soup.uv0[rows]
          + uu[:, None] * soup.uv1[rows]
          + vv[:, None] * soup.uv2[rows])

    albedo = np.empty((rows.size, 3))
    tex_rows = soup.tex_index[rows]
    for tex_idx in np.unique(tex_rows):
        sel = tex_rows == tex_idx
        albedo[sel] = sample_texture(soup.textures[tex_idx], uv[sel, 0], uv[sel, 1])

    obj = soup.object_id[rows]
    ambient = soup.obj_ambient[obj]
    specular = soup.obj_specular[obj]
    shininess = soup.obj_shininess[obj]
    standard = soup.obj_standard[obj]

    ray_len = DIRECTIONAL_RAY_FACTOR * soup.bg_distance
    occ = soup.occluder_arrays()
    visibility = np.ones((rows.size, len(soup.lights)))
    for li, light in enumerate(soup.lights):
        visibility[:, li] = shadow_visibility(
            points, normals, xs, ys, light, li, occ, soup.shadows, ray_len
        )

    shaded = shade_pixels(
        points, normals, albedo, ambient, specular, shininess, standard,
        soup.lights, visibility, ray_len,
    )

    blend = (gbuf.cover[mask].astype(np.float64) / 4.0)[:, None]
    bg_float = background_rgb[mask].astype(np.float64) / 255.0
    out = blend * shaded + (1.0 - blend) * bg_float
    rgb[mask] = np.clip(np.rint(out * 255.0), 0, 255).astype(np.uint8)

    return VirtualLayer(rgb=rgb, depth=depth, mask=mask, coverage=coverage)


def render_virtual_layer(spec: SceneSpec, catalog: AssetCatalog,
                         background_rgb: np.ndarray,
                         route: str = "raster") -> VirtualLayer:
    """Render a scene's virtual content over a background image.

    ``route`` selects the visibility implementation; both give identical
    output. The returned depth is in scene units with 0 marking pixels
    without virtual content.
    """
    soup = build_render_soup(spec, catalog)
    if route == "raster":
        gbuf = trace_gbuffer_raster(soup)
    elif route == "bruteforce":
        gbuf = trace_gbuffer_bruteforce(soup)
    else:
        raise ConfigError(f"unknown render route {route!r}")
    return shade_gbuffer(soup, gbuf, background_rgb)
