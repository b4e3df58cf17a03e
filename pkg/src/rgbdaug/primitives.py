"""Procedural mesh primitives.

Eight parametric families (box, cylinder, prism, lathe/vase profiles,
torus segment, table, cabinet) stand in for a library of household-scale
3D assets. All builders emit shared-vertex meshes with area-weighted
vertex normals, per-corner uvs, and named surface groups; outward
orientation is guaranteed by construction and checked in tests.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .geometry import Mesh, compute_vertex_normals

PRIMITIVE_KINDS = (
    "box", "cylinder", "lathe_profile", "prism",
    "torus_segment", "table_like", "cabinet_like", "vase_profile",
)

_FACE_UV = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def _finish(vertices, triangles, uvs, group_ids, group_names) -> Mesh:
    vertices = np.asarray(vertices, dtype=np.float64)
    triangles = np.asarray(triangles, dtype=np.int32)
    mesh = Mesh(
        vertices,
        compute_vertex_normals(vertices, triangles),
        np.asarray(uvs, dtype=np.float64),
        triangles,
        np.asarray(group_ids, dtype=np.int32),
        list(group_names),
    )
    mesh.validate()
    return mesh


def _require_positive(**dims):
    for name, value in dims.items():
        if not np.all(np.asarray(value) > 0):
            raise ConfigError(f"primitive dimension {name!r} must be positive, got {value}")


def make_box(size=(1.0, 1.0, 1.0)) -> Mesh:
    """Axis-aligned box centered at the origin: 8 vertices, 12 triangles,
    one surface group per face."""
    _require_positive(size=size)
    hx, hy, hz = (float(s) / 2.0 for s in size)
    # Vertex i encodes signs of (x, y, z) in its bits.
    vertices = np.array([
        [sx * hx, sy * hy, sz * hz]
        for sz in (-1, 1) for sy in (-1, 1) for sx in (-1, 1)
    ])
    # Quads wound so cross(e1, e2) points outward.
    faces = {
        "+x": (3, 7, 5, 1),
        "-x": (4, 6, 2, 0),
        "+y": (6, 7, 3, 2),
        "-y": (1, 5, 4, 0),
        "+z": (5, 7, 6, 4),
        "-z": (2, 3, 1, 0),
    }
    triangles, uvs, group_ids, group_names = [], [], [], []
    for gid, (name, (a, b, c, d)) in enumerate(faces.items()):
        group_names.append(name)
        triangles.append((a, b, c))
        uvs.append(_FACE_UV[[0, 1, 2]])
        triangles.append((a, c, d))
        uvs.append(_FACE_UV[[0, 2, 3]])
        group_ids += [gid, gid]
    return _finish(vertices, triangles, uvs, group_ids, group_names)


def _ring(radius: float, y: float, n: int, phase: float = 0.0) -> np.ndarray:
    theta = phase + 2.0 * np.pi * np.arange(n) / n
    return np.stack([radius * np.cos(theta), np.full(n, y), radius * np.sin(theta)], axis=1)


def make_cylinder(radius=0.5, height=1.0, segments=16) -> Mesh:
    """Closed cylinder along y: 2n shared vertices, 2n side triangles,
    fan-triangulated caps (n-2 triangles each)."""
    _require_positive(radius=radius, height=height)
    n = int(segments)
    if n < 3:
        raise ConfigError("cylinder needs at least 3 segments")
    bottom = _ring(radius, -height / 2.0, n)
    top = _ring(radius, height / 2.0, n)
    vertices = np.vstack([bottom, top])
    b, t = np.arange(n), np.arange(n) + n

    triangles, uvs, group_ids = [], [], []
    # Side quads (b_i, t_i, t_j, b_j); wedge uvs carry u past 1 at the seam
    # so the texture wraps without a pinched segment.
    for i in range(n):
        j = (i + 1) % n
        u0, u1 = i / n, (i + 1) / n
        triangles.append((b[i], t[i], t[j]))
        uvs.append([[u0, 0.0], [u0, 1.0], [u1, 1.0]])
        triangles.append((b[i], t[j], b[j]))
        uvs.append([[u0, 0.0], [u1, 1.0], [u1, 0.0]])
        group_ids += [0, 0]

    def cap_uv(idx):
        p = vertices[idx]
        return [0.5 + 0.5 * p[0] / radius, 0.5 + 0.5 * p[2] / radius]

    for i in range(1, n - 1):
        triangles.append((t[0], t[i + 1], t[i]))
        uvs.append([cap_uv(t[0]), cap_uv(t[i + 1]), cap_uv(t[i])])
        group_ids.append(1)
        triangles.append((b[0], b[i], b[i + 1]))
        uvs.append([cap_uv(b[0]), cap_uv(b[i]), cap_uv(b[i + 1])])
        group_ids.append(2)

    return _finish(vertices, triangles, uvs, group_ids, ["side", "top", "bottom"])


def make_prism(sides=6, radius=0.5, height=1.0) -> Mesh:
    """Regular prism along y; same topology as a coarse cylinder."""
    if int(sides) < 3:
        raise ConfigError("prism needs at least 3 sides")
    return make_cylinder(radius=radius, height=height, segments=int(sides))


def make_lathe(profile, segments=16) -> Mesh:
    """Surface of revolution of an (r, y) polyline around the y axis.

    Profile points with r == 0 become poles; open ends with r > 0 are
    closed with fan caps so the result is watertight.
    """
    profile = np.asarray(profile, dtype=np.float64).reshape(-1, 2)
    if profile.shape[0] < 2:
        raise ConfigError("lathe profile needs at least 2 points")
    if np.any(profile[:, 0] < 0):
        raise ConfigError("lathe profile radii must be non-negative")
    n = int(segments)
    if n < 3:
        raise ConfigError("lathe needs at least 3 segments")

    vertices, ring_start = [], []
    for r, y in profile:
        if r == 0.0:
            ring_start.append(len(vertices))
            vertices.append([0.0, y, 0.0])
        else:
            ring_start.append(len(vertices))
            vertices.extend(_ring(r, y, n).tolist())
    vertices = np.asarray(vertices)

    vcoord = np.linspace(0.0, 1.0, profile.shape[0])
    triangles, uvs, group_ids = [], [], []

    def ring_uv(i_prof, j, u_override=None):
        return [j / n if u_override is None else u_override, vcoord[i_prof]]

    for i in range(profile.shape[0] - 1):
        r0, r1 = profile[i, 0], profile[i + 1, 0]
        s0, s1 = ring_start[i], ring_start[i + 1]
        if r0 == 0.0 and r1 == 0.0:
            continue
        if r0 == 0.0:
            # Fan from bottom pole up to ring i+1 (outward: pole below).
            for j in range(n):
                k = (j + 1) % n
                triangles.append((s0, s1 + j, s1 + k))
                uvs.append([
                    [(j + 0.5) / n, vcoord[i]],
                    ring_uv(i + 1, j), ring_uv(i + 1, j + 1, (j + 1) / n),
                ])
                group_ids.append(0)
        elif r1 == 0.0:
            # Fan from ring i up to the top pole.
            for j in range(n):
                k = (j + 1) % n
                triangles.append((s1, s0 + k, s0 + j))
                uvs.append([
                    [(j + 0.5) / n, vcoord[i + 1]],
                    ring_uv(i, j + 1, (j + 1) / n), ring_uv(i, j),
                ])
                group_ids.append(0)
        else:
            for j in range(n):
                k = (j + 1) % n
                u0, u1 = j / n, (j + 1) / n
                triangles.append((s0 + j, s1 + j, s1 + k))
                uvs.append([[u0, vcoord[i]], [u0, vcoord[i + 1]], [u1, vcoord[i + 1]]])
                triangles.append((s0 + j, s1 + k, s0 + k))
                uvs.append([[u0, vcoord[i]], [u1, vcoord[i + 1]], [u1, vcoord[i]]])
                group_ids += [0, 0]

    group_names = ["surface"]

    def close_end(i_prof, outward_up: bool):
        r = profile[i_prof, 0]
        if r == 0.0:
            return
        s = ring_start[i_prof]
        gid = len(group_names)
        group_names.append("cap_top" if outward_up else "cap_bottom")
        for j in range(1, n - 1):
            if outward_up:
                tri = (s, s + j + 1, s + j)
            else:
                tri = (s, s + j, s + j + 1)
            triangles.append(tri)
            uvs.append([
                [0.5 + 0.5 * vertices[v][0] / r, 0.5 + 0.5 * vertices[v][2] / r]
                for v in tri
            ])
            group_ids.append(gid)

    close_end(profile.shape[0] - 1, outward_up=True)
    close_end(0, outward_up=False)
    return _finish(vertices, triangles, uvs, group_ids, group_names)


def make_vase(base_radius=0.5, belly_radius=0.9, neck_radius=0.3,
              mouth_radius=0.45, height=2.0, segments=16, profile_points=12) -> Mesh:
    """Closed vase: a smooth radius profile through base/belly/neck/mouth
    control radii, revolved and capped at both ends."""
    _require_positive(base_radius=base_radius, belly_radius=belly_radius,
                      neck_radius=neck_radius, mouth_radius=mouth_radius, height=height)
    k = max(4, int(profile_points))
    knots_t = np.array([0.0, 0.40, 0.78, 1.0])
    knots_r = np.array([base_radius, belly_radius, neck_radius, mouth_radius])
    t = np.linspace(0.0, 1.0, k)
    # Cosine-eased interpolation between control radii keeps the silhouette smooth.
    radii = np.empty(k)
    for i, ti in enumerate(t):
        seg = min(np.searchsorted(knots_t, ti, side="right"), len(knots_t) - 1)
        t0, t1 = knots_t[seg - 1], knots_t[seg]
        w = 0.5 - 0.5 * np.cos(np.pi * (ti - t0) / (t1 - t0)) if t1 > t0 else 0.0
        radii[i] = knots_r[seg - 1] * (1 - w) + knots_r[seg] * w
    ys = t * height
    profile = [[0.0, 0.0]] + [[r, y] for r, y in zip(radii, ys)] + [[0.0, height]]
    mesh = make_lathe(profile, segments=segments)
    mesh.vertices[:, 1] -= height / 2.0
    return mesh


def make_torus_segment(major_radius=1.0, minor_radius=0.3, arc_fraction=1.0,
                       segments_u=16, segments_v=8) -> Mesh:
    """Torus (or a capped arc of one) around the y axis."""
    _require_positive(major_radius=major_radius, minor_radius=minor_radius,
                      arc_fraction=arc_fraction)
    if arc_fraction > 1.0:
        raise ConfigError("arc_fraction must be in (0, 1]")
    nu, nv = int(segments_u), int(segments_v)
    if nu < 3 or nv < 3:
        raise ConfigError("torus needs at least 3 segments per axis")
    closed = arc_fraction >= 1.0
    ucount = nu if closed else nu + 1
    theta = 2.0 * np.pi * arc_fraction * np.arange(ucount) / nu
    phi = 2.0 * np.pi * np.arange(nv) / nv

    verts = np.empty((ucount, nv, 3))
    for i, th in enumerate(theta):
        ring_r = major_radius + minor_radius * np.cos(phi)
        verts[i, :, 0] = ring_r * np.cos(th)
        verts[i, :, 1] = minor_radius * np.sin(phi)
        verts[i, :, 2] = ring_r * np.sin(th)
    vertices = verts.reshape(-1, 3).tolist()

    def vid(i, j):
        return (i % ucount) * nv + (j % nv)

    triangles, uvs, group_ids = [], [], []
    for i in range(nu):
        for j in range(nv):
            u0, u1 = i / nu, (i + 1) / nu
            v0, v1 = j / nv, (j + 1) / nv
            a, b = vid(i, j), vid(i + 1, j)
            c, d = vid(i + 1, j + 1), vid(i, j + 1)
            triangles.append((a, c, b))
            uvs.append([[u0, v0], [u1, v1], [u1, v0]])
            triangles.append((a, d, c))
            uvs.append([[u0, v0], [u0, v1], [u1, v1]])
            group_ids += [0, 0]
    group_names = ["surface"]

    if not closed:
        # Fan winding (center, ring_j, ring_j+1) faces toward increasing
        # arc angle, so the start cap is the one that needs reversing.
        for name, i_end, flip in (("cap_a", 0, True), ("cap_b", ucount - 1, False)):
            gid = len(group_names)
            group_names.append(name)
            th = theta[i_end]
            center = [major_radius * np.cos(th), 0.0, major_radius * np.sin(th)]
            cidx = len(vertices)
            vertices.append(center)
            for j in range(nv):
                a, b = vid(i_end, j), vid(i_end, j + 1)
                tri = (cidx, b, a) if flip else (cidx, a, b)
                triangles.append(tri)
                jv0, jv1 = j / nv, (j + 1) / nv
                uv_a, uv_b = [0.0, jv0], [0.0, jv1]
                uvs.append([[0.5, 0.5], uv_b, uv_a] if flip else [[0.5, 0.5], uv_a, uv_b])
                group_ids.append(gid)

    return _finish(vertices, triangles, uvs, group_ids, group_names)


def _merge(parts: list[tuple[Mesh, str]]) -> Mesh:
    """Concatenate sub-meshes, pooling their triangles under new group names."""
    vertices, triangles, uvs, group_ids = [], [], [], []
    group_names: list[str] = []
    offset = 0
    for mesh, group in parts:
        if group not in group_names:
            group_names.append(group)
        gid = group_names.index(group)
        vertices.append(mesh.vertices)
        triangles.append(mesh.triangles + offset)
        uvs.append(mesh.uvs)
        group_ids.append(np.full(mesh.triangle_count, gid))
        offset += mesh.vertex_count
    return _finish(
        np.vstack(vertices), np.vstack(triangles), np.vstack(uvs),
        np.concatenate(group_ids), group_names,
    )


def _shifted(mesh: Mesh, offset) -> Mesh:
    out = mesh.copy()
    out.vertices = out.vertices + np.asarray(offset, dtype=np.float64)
    return out


def make_table(width=2.0, depth=1.2, height=1.0, top_thickness=0.12,
               leg_thickness=0.12) -> Mesh:
    """Table: slab top on four corner legs. Groups: top, legs."""
    _require_positive(width=width, depth=depth, height=height,
                      top_thickness=top_thickness, leg_thickness=leg_thickness)
    if top_thickness >= height:
        raise ConfigError("table top_thickness must be smaller than height")
    top = _shifted(
        make_box((width, top_thickness, depth)),
        (0.0, height / 2.0 - top_thickness / 2.0, 0.0),
    )
    leg_h = height - top_thickness
    lx = width / 2.0 - leg_thickness / 2.0
    lz = depth / 2.0 - leg_thickness / 2.0
    parts = [(top, "top")]
    for sx in (-1, 1):
        for sz in (-1, 1):
            leg = _shifted(
                make_box((leg_thickness, leg_h, leg_thickness)),
                (sx * lx, -height / 2.0 + leg_h / 2.0, sz * lz),
            )
            parts.append((leg, "legs"))
    return _merge(parts)


def make_cabinet(width=1.4, height=2.0, depth=0.6, door_inset=0.06,
                 door_proud=0.03) -> Mesh:
    """Cabinet: body box with two door panels proud of the front face.
    Groups: body, doors."""
    _require_positive(width=width, height=height, depth=depth,
                      door_inset=door_inset, door_proud=door_proud)
    body = make_box((width, height, depth))
    door_w = width / 2.0 - door_inset
    door_h = height - 2.0 * door_inset
    if door_w <= 0 or door_h <= 0:
        raise ConfigError("cabinet door_inset leaves no room for doors")
    z_front = depth / 2.0 + door_proud / 2.0
    parts = [(body, "body")]
    for sx in (-1, 1):
        door = _shifted(
            make_box((door_w, door_h, door_proud)),
            (sx * (door_inset / 2.0 + door_w / 2.0), 0.0, z_front),
        )
        parts.append((door, "doors"))
    return _merge(parts)


def make_primitive(kind: str, detail: int = 16, **dims) -> Mesh:
    """Build a primitive by kind name.

    ``detail`` is the tessellation level (segment count) for the curved
    kinds; box-like kinds ignore it.
    """
    if kind not in PRIMITIVE_KINDS:
        raise ConfigError(f"unknown primitive kind {kind!r}")
    detail = int(detail)
    if kind in ("cylinder", "lathe_profile", "torus_segment", "vase_profile") and detail < 3:
        raise ConfigError("curved primitives need detail >= 3")
    if kind == "box":
        return make_box(**dims) if dims else make_box()
    if kind == "cylinder":
        return make_cylinder(segments=detail, **dims)
    if kind == "prism":
        return make_prism(**dims)
    if kind == "lathe_profile":
        profile = dims.pop("profile")
        return make_lathe(profile, segments=detail, **dims)
    if kind == "vase_profile":
        return make_vase(segments=detail, **dims)
    if kind == "torus_segment":
        return make_torus_segment(segments_u=detail, segments_v=max(3, detail // 2), **dims)
    if kind == "table_like":
        return make_table(**dims)
    return make_cabinet(**dims)


def primitive_group_names(kind: str, **dims) -> list[str]:
    """Surface-group names a kind will produce, without tessellating.

    Lets the scene sampler assign per-surface materials from catalog
    metadata alone.
    """
    if kind == "box":
        return ["+x", "-x", "+y", "-y", "+z", "-z"]
    if kind in ("cylinder", "prism"):
        return ["side", "top", "bottom"]
    if kind == "lathe_profile":
        profile = np.asarray(dims.get("profile"), dtype=np.float64).reshape(-1, 2)
        names = ["surface"]
        if profile[-1, 0] > 0:
            names.append("cap_top")
        if profile[0, 0] > 0:
            names.append("cap_bottom")
        return names
    if kind == "vase_profile":
        return ["surface"]
    if kind == "torus_segment":
        if float(dims.get("arc_fraction", 1.0)) >= 1.0:
            return ["surface"]
        return ["surface", "cap_a", "cap_b"]
    if kind == "table_like":
        return ["top", "legs"]
    if kind == "cabinet_like":
        return ["body", "doors"]
    raise ConfigError(f"unknown primitive kind {kind!r}")
