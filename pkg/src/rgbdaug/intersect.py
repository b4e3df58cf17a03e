"""Ray-triangle intersection predicates.

The visibility pass and its exhaustive reference implementation must
agree bitwise, so both are built on the single Moller-Trumbore routine
here. Every arithmetic step is an explicit elementwise numpy operation
with a fixed evaluation order; results for a given (ray, triangle) pair
are therefore identical no matter how the pair is batched.

Shadow occlusion runs through a compiled any-hit kernel with per-object
bounding-box pruning; a pure numpy reference of the same predicate backs
it in tests.
"""

from __future__ import annotations

import numpy as np
from numba import njit

DET_EPS = 1e-12
SHADOW_T_MIN = 1e-7


def _mt_core(dx, dy, dz, ax, ay, az, bx, by, bz, cx, cy, cz, eps):
    """Moller-Trumbore for rays from the origin, in scalar-component form.

    Inputs broadcast; each output element depends only on its own
    (direction, triangle) operands, keeping results batch-independent.
    """
    e1x = bx - ax
    e1y = by - ay
    e1z = bz - az
    e2x = cx - ax
    e2y = cy - ay
    e2z = cz - az

    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    degenerate = np.abs(det) <= eps
    inv = 1.0 / np.where(degenerate, 1.0, det)

    # Ray origin is the camera origin, so tvec = -A.
    tx = -ax
    ty = -ay
    tz = -az
    u = (tx * px + ty * py + tz * pz) * inv

    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    t = (e2x * qx + e2y * qy + e2z * qz) * inv

    hit = (~degenerate) & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0) & (t > 0.0)
    return u, v, t, hit


def intersect_rays_triangle(dirs: np.ndarray, a, b, c, eps: float = DET_EPS):
    """Test many origin rays against one triangle.

    dirs is (N, 3); a, b, c are the triangle vertices. Returns
    (u, v, t, hit) arrays of shape (N,).
    """
    dirs = np.asarray(dirs, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    return _mt_core(
        dirs[..., 0], dirs[..., 1], dirs[..., 2],
        a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2], eps,
    )


def intersect_ray_triangles(direction, v0: np.ndarray, v1: np.ndarray,
                            v2: np.ndarray, eps: float = DET_EPS):
    """Test one origin ray against many triangles.

    direction is a 3-vector; v0, v1, v2 are (M, 3). Returns (u, v, t, hit)
    arrays of shape (M,).
    """
    direction = np.asarray(direction, dtype=np.float64)
    v0 = np.asarray(v0, dtype=np.float64)
    v1 = np.asarray(v1, dtype=np.float64)
    v2 = np.asarray(v2, dtype=np.float64)
    return _mt_core(
        direction[0], direction[1], direction[2],
        v0[:, 0], v0[:, 1], v0[:, 2],
        v1[:, 0], v1[:, 1], v1[:, 2],
        v2[:, 0], v2[:, 1], v2[:, 2], eps,
    )


@njit(cache=True)
def _any_hit_kernel(origins, dirs, max_ts, v0, v1, v2,
                    obj_tri_start, obj_min, obj_max, t_min, eps):  # pragma: no cover
    n_rays = origins.shape[0]
    n_obj = obj_tri_start.shape[0] - 1
    out = np.zeros(n_rays, dtype=np.uint8)
    for r in range(n_rays):
        ox, oy, oz = origins[r, 0], origins[r, 1], origins[r, 2]
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        tmax_ray = max_ts[r]
        hit = False
        for o in range(n_obj):
            if hit:
                break
            # Slab test against the object's bounding box.
            t0, t1 = t_min, tmax_ray
            reject = False
            for axis in range(3):
                od = origins[r, axis]
                dd = dirs[r, axis]
                lo = obj_min[o, axis]
                hi = obj_max[o, axis]
                if dd > 1e-300 or dd < -1e-300:
                    inv = 1.0 / dd
                    ta = (lo - od) * inv
                    tb = (hi - od) * inv
                    if ta > tb:
                        ta, tb = tb, ta
                    if ta > t0:
                        t0 = ta
                    if tb < t1:
                        t1 = tb
                    if t0 > t1:
                        reject = True
                        break
                elif od < lo or od > hi:
                    reject = True
                    break
            if reject:
                continue
            for k in range(obj_tri_start[o], obj_tri_start[o + 1]):
                e1x = v1[k, 0] - v0[k, 0]
                e1y = v1[k, 1] - v0[k, 1]
                e1z = v1[k, 2] - v0[k, 2]
                e2x = v2[k, 0] - v0[k, 0]
                e2y = v2[k, 1] - v0[k, 1]
                e2z = v2[k, 2] - v0[k, 2]
                px = dy * e2z - dz * e2y
                py = dz * e2x - dx * e2z
                pz = dx * e2y - dy * e2x
                det = e1x * px + e1y * py + e1z * pz
                if -eps <= det <= eps:
                    continue
                inv = 1.0 / det
                tx = ox - v0[k, 0]
                ty = oy - v0[k, 1]
                tz = oz - v0[k, 2]
                u = (tx * px + ty * py + tz * pz) * inv
                if u < 0.0 or u > 1.0:
                    continue
                qx = ty * e1z - tz * e1y
                qy = tz * e1x - tx * e1z
                qz = tx * e1y - ty * e1x
                v = (dx * qx + dy * qy + dz * qz) * inv
                if v < 0.0 or u + v > 1.0:
                    continue
                t = (e2x * qx + e2y * qy + e2z * qz) * inv
                if t_min < t < tmax_ray:
                    hit = True
                    break
        out[r] = 1 if hit else 0
    return out


def occlusion_any_hit(origins, dirs, max_ts, v0, v1, v2, obj_tri_start,
                      obj_min, obj_max, t_min: float = SHADOW_T_MIN,
                      eps: float = DET_EPS) -> np.ndarray:
    """Boolean shadow test: does any triangle block each ray before max_t?

    Rays are (origin, direction) with t limited to (t_min, max_t); the
    direction scale defines the t unit. Triangles are grouped into
    contiguous index ranges per object (obj_tri_start prefix array),
    each with an axis-aligned bounding box used to skip whole objects.
    """
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    dirs = np.ascontiguousarray(dirs, dtype=np.float64)
    max_ts = np.ascontiguousarray(max_ts, dtype=np.float64)
    if origins.ndim != 2 or origins.shape[1] != 3 or origins.shape != dirs.shape:
        raise ValueError("origins and dirs must both be (N, 3)")
    return _any_hit_kernel(
        origins, dirs, max_ts,
        np.ascontiguousarray(v0, dtype=np.float64),
        np.ascontiguousarray(v1, dtype=np.float64),
        np.ascontiguousarray(v2, dtype=np.float64),
        np.ascontiguousarray(obj_tri_start, dtype=np.int64),
        np.ascontiguousarray(obj_min, dtype=np.float64),
        np.ascontiguousarray(obj_max, dtype=np.float64),
        float(t_min), float(eps),
    ).astype(bool)


def occlusion_reference(origins, dirs, max_ts, v0, v1, v2,
                        t_min: float = SHADOW_T_MIN, eps: float = DET_EPS) -> np.ndarray:
    """Numpy any-hit reference with the same predicate as the kernel.

    Quadratic in rays x triangles; for validation, not production.
    """
    origins = np.asarray(origins, dtype=np.float64)[:, None, :]
    dirs = np.asarray(dirs, dtype=np.float64)[:, None, :]
    max_ts = np.asarray(max_ts, dtype=np.float64)[:, None]
    a = np.asarray(v0, dtype=np.float64)[None, :, :]
    b = np.asarray(v1, dtype=np.float64)[None, :, :]
    c = np.asarray(v2, dtype=np.float64)[None, :, :]

    e1 = b - a
    e2 = c - a
    p = np.cross(dirs, e2)
    det = np.sum(e1 * p, axis=-1)
    ok = np.abs(det) > eps
    inv = 1.0 / np.where(ok, det, 1.0)
    tvec = origins - a
    u = np.sum(tvec * p, axis=-1) * inv
    q = np.cross(tvec, e1)
    v = np.sum(dirs * q, axis=-1) * inv
    t = np.sum(e2 * q, axis=-1) * inv
    hit = ok & (u >= 0.0) & (u <= 1.0) & (v >= 0.0) & (u + v <= 1.0)
    hit &= (t > t_min) & (t < max_ts)
    return hit.any(axis=1)
