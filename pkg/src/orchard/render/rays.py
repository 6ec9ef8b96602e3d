"""Single-ray and batched nearest-hit queries against a scene."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..scene import Scene, SemanticClass
from .bvh import BVH, STACK_SIZE, intersect_brute, intersect_bvh, intersect_many


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float, float]
    direction: tuple[float, float, float]
    t_min: float = 0.0
    t_max: float = math.inf

    def __post_init__(self):
        d = np.asarray(self.direction, dtype=float)
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("ray direction must be unit length")
        if not self.t_min < self.t_max:
            raise ValueError("need t_min < t_max")


@dataclass(frozen=True)
class Hit:
    t: float
    triangle_index: int
    barycentrics: tuple[float, float, float]
    normal: tuple[float, float, float]
    label: SemanticClass


def intersect(bvh: BVH | None, scene: Scene, ray: Ray) -> Hit | None:
    """Nearest hit in (t_min, t_max); ``bvh=None`` scans every triangle."""
    ts = scene.triangle_set
    o, d = ray.origin, ray.direction
    if len(scene) == 0:
        return None
    if bvh is None:
        t, i, u, v = intersect_brute(*o, *d, ray.t_min, ray.t_max, ts.v0, ts.e1, ts.e2)
    else:
        stack = np.empty(STACK_SIZE, np.int64)
        t, i, u, v = intersect_bvh(*o, *d, ray.t_min, ray.t_max, ts.v0, ts.e1, ts.e2,
                                   *bvh.arrays(), stack)
    if i < 0:
        return None
    return Hit(float(t), int(i), (1.0 - u - v, float(u), float(v)),
               tuple(scene.normals[i].tolist()), SemanticClass(int(scene.labels[i])))


def intersect_batch(scene: Scene, origins, directions, accelerate: bool = True,
                    t_min: float = 0.0, t_max: float = math.inf) -> tuple[np.ndarray, np.ndarray]:
    """Nearest (t, triangle index) per ray; misses give (inf, -1)."""
    ts = scene.triangle_set
    origins = np.ascontiguousarray(origins, dtype=np.float64)
    directions = np.ascontiguousarray(directions, dtype=np.float64)
    if accelerate:
        arrays = scene.bvh.arrays()
    else:
        z3, zi = np.zeros((1, 3)), np.zeros(1, np.int64)
        arrays = (z3, z3, zi, zi, zi, zi, zi, zi)
    return intersect_many(origins, directions, t_min, t_max, ts.v0, ts.e1, ts.e2,
                          *arrays, accelerate)
