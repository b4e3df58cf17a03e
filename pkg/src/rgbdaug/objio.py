"""Wavefront OBJ import/export for the mesh subset used here.

Supports v/vt/vn/f/g records with negative indices and polygon fan
triangulation. Unknown record types are skipped so files written by
common modelling tools load without cleanup. Parse failures raise
MeshParseError tagged with the offending path and line number.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import MeshParseError
from .geometry import Mesh, compute_vertex_normals


def _parse_floats(parts, count, path, lineno, record):
    if len(parts) < count:
        raise MeshParseError(
            f"{record} record needs {count} values, got {len(parts)}", path, lineno
        )
    try:
        return [float(p) for p in parts[:count]]
    except ValueError as exc:
        raise MeshParseError(f"bad {record} value: {exc}", path, lineno) from None


def _resolve_index(raw, size, path, lineno, what):
    """OBJ indices are 1-based; negative values count back from the end."""
    if raw == 0 or abs(raw) > size:
        raise MeshParseError(f"{what} index {raw} out of range (have {size})", path, lineno)
    return raw - 1 if raw > 0 else size + raw


def load_obj(path: str | os.PathLike) -> Mesh:
    """Load an OBJ file as a triangle mesh.

    Polygons are fan-triangulated. Texture coordinates default to (0, 0)
    where absent; vertex normals are averaged from the file when given,
    recomputed from geometry otherwise.
    """
    path = os.fspath(path)
    positions: list[list[float]] = []
    texcoords: list[list[float]] = []
    file_normals: list[list[float]] = []

    corners: list[tuple[int, int | None, int | None]] = []  # flat, 3 per triangle
    tri_groups: list[int] = []
    group_names: list[str] = ["default"]
    current_group = 0

    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise MeshParseError(f"cannot open: {exc}", path) from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            record, args = parts[0], parts[1:]
            if record == "v":
                positions.append(_parse_floats(args, 3, path, lineno, "v"))
            elif record == "vt":
                texcoords.append(_parse_floats(args, 2, path, lineno, "vt"))
            elif record == "vn":
                file_normals.append(_parse_floats(args, 3, path, lineno, "vn"))
            elif record == "g":
                name = " ".join(args) if args else "default"
                if name not in group_names:
                    group_names.append(name)
                current_group = group_names.index(name)
            elif record == "f":
                if len(args) < 3:
                    raise MeshParseError("face needs at least 3 corners", path, lineno)
                face = []
                for token in args:
                    fields = token.split("/")
                    if len(fields) > 3 or fields[0] == "":
                        raise MeshParseError(f"bad face corner {token!r}", path, lineno)
                    try:
                        vi = int(fields[0])
                        ti = int(fields[1]) if len(fields) > 1 and fields[1] else None
                        ni = int(fields[2]) if len(fields) > 2 and fields[2] else None
                    except ValueError:
                        raise MeshParseError(
                            f"bad face corner {token!r}", path, lineno
                        ) from None
                    vi = _resolve_index(vi, len(positions), path, lineno, "vertex")
                    if ti is not None:
                        ti = _resolve_index(ti, len(texcoords), path, lineno, "texture")
                    if ni is not None:
                        ni = _resolve_index(ni, len(file_normals), path, lineno, "normal")
                    face.append((vi, ti, ni))
                for k in range(1, len(face) - 1):
                    corners.extend((face[0], face[k], face[k + 1]))
                    tri_groups.append(current_group)
            # Material, smoothing, object and library records are irrelevant
            # to geometry; skip anything unrecognized.

    if not corners:
        raise MeshParseError("no faces found", path)
    vertices = np.asarray(positions, dtype=np.float64)
    tri_count = len(corners) // 3

    triangles = np.array([c[0] for c in corners], dtype=np.int32).reshape(tri_count, 3)
    uvs = np.zeros((tri_count, 3, 2), dtype=np.float64)
    for flat, (_, ti, _) in enumerate(corners):
        if ti is not None:
            uvs[flat // 3, flat % 3] = texcoords[ti]

    has_normals = any(c[2] is not None for c in corners)
    if has_normals:
        normals = np.zeros((len(positions), 3), dtype=np.float64)
        for vi, _, ni in corners:
            if ni is not None:
                normals[vi] += file_normals[ni]
        lengths = np.linalg.norm(normals, axis=1, keepdims=True)
        fallback = compute_vertex_normals(vertices, triangles)
        normals = np.where(lengths > 1e-12, normals / np.maximum(lengths, 1e-300), fallback)
    else:
        normals = compute_vertex_normals(vertices, triangles)

    # Drop group names no face ever referenced (e.g. the implicit
    # "default" group in files that open with an explicit g record).
    group_ids = np.asarray(tri_groups, dtype=np.int32)
    used = sorted(set(group_ids.tolist()))
    remap = {old: new for new, old in enumerate(used)}
    group_ids = np.array([remap[g] for g in group_ids], dtype=np.int32)
    group_names = [group_names[old] for old in used]

    mesh = Mesh(
        vertices, normals, uvs, triangles,
        group_ids, group_names,
    )
    mesh.validate()
    return mesh


def save_obj(path: str | os.PathLike, mesh: Mesh) -> None:
    """Write a mesh as OBJ, preserving groups, uvs, and vertex normals.

    Texture coordinates are emitted per corner (three vt records per
    triangle), so wedge uvs survive a round trip exactly.
    """
    path = os.fspath(path)
    lines = []
    for v in mesh.vertices:
        lines.append(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}")
    for n in mesh.normals:
        lines.append(f"vn {n[0]:.17g} {n[1]:.17g} {n[2]:.17g}")
    for tri_uv in mesh.uvs:
        for uv in tri_uv:
            lines.append(f"vt {uv[0]:.17g} {uv[1]:.17g}")
    # Keep triangle order: repeating a g record when interleaved groups
    # alternate is valid OBJ and makes save -> load an exact round trip.
    last_group = None
    for t in range(len(mesh.triangles)):
        gid = int(mesh.group_ids[t])
        if gid != last_group:
            lines.append(f"g {mesh.group_names[gid]}")
            last_group = gid
        corner_ids = [
            f"{mesh.triangles[t, k] + 1}/{3 * int(t) + k + 1}/{mesh.triangles[t, k] + 1}"
            for k in range(3)
        ]
        lines.append("f " + " ".join(corner_ids))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
