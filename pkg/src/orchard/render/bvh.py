"""Bounding volume hierarchy over a triangle soup, plus brute-force intersection.

Nearest-hit queries are a total function: among hits at equal distance the
lowest triangle index wins, in both the accelerated and brute-force paths, so
the two are interchangeable bit for bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba as nb
import numpy as np

from ..errors import BuildError

LEAF_SIZE = 4
STACK_SIZE = 128
_JIT = dict(cache=True, nogil=True, error_model="numpy")


@dataclass(frozen=True, eq=False)
class BVH:
    """Flattened node arrays. ``count > 0`` marks a leaf holding
    ``order[start:start+count]``; inner nodes use ``left``/``right``."""

    box_min: np.ndarray
    box_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    axis: np.ndarray
    start: np.ndarray
    count: np.ndarray
    order: np.ndarray

    def __len__(self):
        return len(self.count)

    def arrays(self):
        return (self.box_min, self.box_max, self.left, self.right, self.axis,
                self.start, self.count, self.order)


@dataclass(frozen=True, eq=False)
class TriangleSet:
    """Precomputed Moller-Trumbore operands."""

    v0: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    @classmethod
    def from_triangles(cls, triangles) -> TriangleSet:
        t = np.asarray(triangles, dtype=np.float64)
        return cls(np.ascontiguousarray(t[:, 0]), np.ascontiguousarray(t[:, 1] - t[:, 0]),
                   np.ascontiguousarray(t[:, 2] - t[:, 0]))


@nb.njit(**_JIT)
def _build(tri_min, tri_max, centroid, leaf_size, pad):
    n = tri_min.shape[0]
    cap = 2 * n
    bmin = np.empty((cap, 3))
    bmax = np.empty((cap, 3))
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    axis = np.zeros(cap, np.int64)
    start = np.zeros(cap, np.int64)
    count = np.zeros(cap, np.int64)
    order = np.arange(n)
    # Work stack of (node, lo, hi).
    work = np.empty((cap, 3), np.int64)
    work[0, 0], work[0, 1], work[0, 2] = 0, 0, n
    sp = 1
    used = 1
    while sp > 0:
        sp -= 1
        node, lo, hi = work[sp, 0], work[sp, 1], work[sp, 2]
        cmin = np.full(3, np.inf)
        cmax = np.full(3, -np.inf)
        for k in range(3):
            bmin[node, k] = np.inf
            bmax[node, k] = -np.inf
        for i in range(lo, hi):
            t = order[i]
            for k in range(3):
                bmin[node, k] = min(bmin[node, k], tri_min[t, k])
                bmax[node, k] = max(bmax[node, k], tri_max[t, k])
                cmin[k] = min(cmin[k], centroid[t, k])
                cmax[k] = max(cmax[k], centroid[t, k])
        for k in range(3):
            bmin[node, k] -= pad
            bmax[node, k] += pad
        if hi - lo <= leaf_size:
            start[node] = lo
            count[node] = hi - lo
            continue
        ax = 0
        ext = cmax - cmin
        if ext[1] > ext[ax]:
            ax = 1
        if ext[2] > ext[ax]:
            ax = 2
        sub = order[lo:hi].copy()
        keys = np.empty(hi - lo)
        for i in range(hi - lo):
            keys[i] = centroid[sub[i], ax]
        perm = np.argsort(keys, kind="mergesort")
        for i in range(hi - lo):
            order[lo + i] = sub[perm[i]]
        mid = (lo + hi) // 2
        l_id, r_id = used, used + 1
        used += 2
        left[node], right[node], axis[node] = l_id, r_id, ax
        work[sp, 0], work[sp, 1], work[sp, 2] = r_id, mid, hi
        sp += 1
        work[sp, 0], work[sp, 1], work[sp, 2] = l_id, lo, mid
        sp += 1
    return (bmin[:used].copy(), bmax[:used].copy(), left[:used].copy(), right[:used].copy(),
            axis[:used].copy(), start[:used].copy(), count[:used].copy(), order)


def build_bvh(triangles) -> BVH:
    """Median split on the longest centroid axis; leaves hold at most 4 triangles."""
    tris = np.asarray(triangles, dtype=np.float64)
    if tris.ndim != 3 or len(tris) == 0:
        raise BuildError("cannot build a BVH over zero triangles")
    tmin, tmax = tris.min(axis=1), tris.max(axis=1)
    extent = float(np.max(np.abs(tris))) if len(tris) else 1.0
    # Padding absorbs rounding in the slab test; parents stay supersets of children.
    pad = 1e-9 * (1.0 + extent)
    arrays = _build(np.ascontiguousarray(tmin), np.ascontiguousarray(tmax),
                    np.ascontiguousarray(tris.mean(axis=1)), LEAF_SIZE, pad)
    for a in arrays:
        a.setflags(write=False)
    return BVH(*arrays)


@nb.njit(inline="always", **_JIT)
def triangle_hit(i, ox, oy, oz, dx, dy, dz, v0, e1, e2):
    """Moller-Trumbore. Returns (t, u, v); t is NaN on a miss."""
    e1x, e1y, e1z = e1[i, 0], e1[i, 1], e1[i, 2]
    e2x, e2y, e2z = e2[i, 0], e2[i, 1], e2[i, 2]
    px = dy * e2z - dz * e2y
    py = dz * e2x - dx * e2z
    pz = dx * e2y - dy * e2x
    det = e1x * px + e1y * py + e1z * pz
    if det == 0.0:
        return np.nan, 0.0, 0.0
    inv = 1.0 / det
    tx, ty, tz = ox - v0[i, 0], oy - v0[i, 1], oz - v0[i, 2]
    u = (tx * px + ty * py + tz * pz) * inv
    if u < 0.0 or u > 1.0:
        return np.nan, 0.0, 0.0
    qx = ty * e1z - tz * e1y
    qy = tz * e1x - tx * e1z
    qz = tx * e1y - ty * e1x
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < 0.0 or u + v > 1.0:
        return np.nan, 0.0, 0.0
    t = (e2x * qx + e2y * qy + e2z * qz) * inv
    return t, u, v


@nb.njit(inline="always", **_JIT)
def _better(t, i, best_t, best_i):
    return t < best_t or (t == best_t and best_i >= 0 and i < best_i)


@nb.njit(**_JIT)
def intersect_brute(ox, oy, oz, dx, dy, dz, t_min, t_max, v0, e1, e2):
    """Returns (t, index, u, v); index -1 on a miss."""
    best_t, best_i, bu, bv = t_max, -1, 0.0, 0.0
    for i in range(v0.shape[0]):
        t, u, v = triangle_hit(i, ox, oy, oz, dx, dy, dz, v0, e1, e2)
        if t > t_min and _better(t, i, best_t, best_i):
            best_t, best_i, bu, bv = t, i, u, v
    return best_t, best_i, bu, bv


@nb.njit(inline="always", **_JIT)
def _slab(o, d, lo, hi, t0, t1):
    if d == 0.0:
        if o < lo or o > hi:
            return 1.0, 0.0
        return t0, t1
    inv = 1.0 / d
    a = (lo - o) * inv
    b = (hi - o) * inv
    if a > b:
        a, b = b, a
    return max(t0, a), min(t1, b)


@nb.njit(inline="always", **_JIT)
def _box_entry(node, ox, oy, oz, dx, dy, dz, t_min, t_max, bmin, bmax):
    t0, t1 = _slab(ox, dx, bmin[node, 0], bmax[node, 0], t_min, t_max)
    t0, t1 = _slab(oy, dy, bmin[node, 1], bmax[node, 1], t0, t1)
    t0, t1 = _slab(oz, dz, bmin[node, 2], bmax[node, 2], t0, t1)
    if t0 > t1:
        return np.inf
    return t0


@nb.njit(**_JIT)
def intersect_bvh(ox, oy, oz, dx, dy, dz, t_min, t_max, v0, e1, e2,
                  bmin, bmax, left, right, axis, start, count, order, stack):
    best_t, best_i, bu, bv = t_max, -1, 0.0, 0.0
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        # Inclusive bound keeps equal-distance hits in lower-index triangles reachable.
        if _box_entry(node, ox, oy, oz, dx, dy, dz, t_min, best_t, bmin, bmax) == np.inf:
            continue
        c = count[node]
        if c > 0:
            s = start[node]
            for k in range(s, s + c):
                i = order[k]
                t, u, v = triangle_hit(i, ox, oy, oz, dx, dy, dz, v0, e1, e2)
                if t > t_min and _better(t, i, best_t, best_i):
                    best_t, best_i, bu, bv = t, i, u, v
        else:
            ax = axis[node]
            dcomp = dx if ax == 0 else (dy if ax == 1 else dz)
            near, far = left[node], right[node]
            if dcomp < 0.0:
                near, far = far, near
            stack[sp] = far
            stack[sp + 1] = near
            sp += 2
    return best_t, best_i, bu, bv


@nb.njit(**_JIT)
def intersect_many(origins, dirs, t_min, t_max, v0, e1, e2,
                   bmin, bmax, left, right, axis, start, count, order, use_bvh):
    n = origins.shape[0]
    ts = np.empty(n)
    idx = np.empty(n, np.int64)
    stack = np.empty(STACK_SIZE, np.int64)
    for r in range(n):
        ox, oy, oz = origins[r, 0], origins[r, 1], origins[r, 2]
        dx, dy, dz = dirs[r, 0], dirs[r, 1], dirs[r, 2]
        if use_bvh:
            t, i, _, _ = intersect_bvh(ox, oy, oz, dx, dy, dz, t_min, t_max, v0, e1, e2,
                                       bmin, bmax, left, right, axis, start, count, order, stack)
        else:
            t, i, _, _ = intersect_brute(ox, oy, oz, dx, dy, dz, t_min, t_max, v0, e1, e2)
        ts[r] = t if i >= 0 else np.inf
        idx[r] = i
    return ts, idx
