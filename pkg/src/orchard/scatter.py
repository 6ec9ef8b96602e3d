"""Fruit and leaf placement on a bare skeleton, and their renderable geometry."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError
from .scene import LabeledMesh, SemanticClass
from .treegen import TreeSkeleton

# Rotation by pi about X: local +Z (stem direction) maps to world -Z.
HANGING = (0.0, 1.0, 0.0, 0.0)


class AttachmentKind(str, enum.Enum):
    FRUIT = "FRUIT"
    LEAF = "LEAF"


@dataclass(frozen=True)
class ScatterParams:
    """Linear densities are counts per meter of eligible branch length."""

    fruit_density: float = 1.2
    leaf_density: float = 40.0
    fruit_radius_mean: float = 0.04
    fruit_radius_jitter: float = 0.15
    leaf_size_mean: float = 0.08
    leaf_size_jitter: float = 0.25
    eligible_min_level: int = 1
    fruit_stem_length: float = 0.03
    fruit_subdivision: int = 2

    def __post_init__(self):
        for name in ("fruit_density", "leaf_density"):
            if not getattr(self, name) >= 0:
                raise ParameterError(name, "must be >= 0")
        for name in ("fruit_radius_mean", "leaf_size_mean"):
            if not getattr(self, name) > 0:
                raise ParameterError(name, "must be > 0")
        for name in ("fruit_radius_jitter", "leaf_size_jitter"):
            if not 0 <= getattr(self, name) < 1:
                raise ParameterError(name, "must be in [0, 1)")
        if self.eligible_min_level < 0:
            raise ParameterError("eligible_min_level", "must be >= 0")
        if self.fruit_stem_length < 0:
            raise ParameterError("fruit_stem_length", "must be >= 0")
        if self.fruit_subdivision < 0:
            raise ParameterError("fruit_subdivision", "must be >= 0")


@dataclass(frozen=True)
class Attachment:
    kind: AttachmentKind
    branch_id: int
    t: float
    anchor: tuple[float, float, float]
    orientation: tuple[float, float, float, float]  # unit quaternion (w, x, y, z)
    scale: float
    stem_length: float = 0.0


def eligible_branches(skeleton: TreeSkeleton, min_level: int) -> tuple[np.ndarray, np.ndarray]:
    ids = np.array([i for i, b in enumerate(skeleton.branches) if b.level >= min_level], dtype=int)
    lengths = np.array([skeleton.branches[i].length for i in ids], dtype=float)
    return ids, lengths


def eligible_length(skeleton: TreeSkeleton, min_level: int) -> float:
    return float(eligible_branches(skeleton, min_level)[1].sum())


def _random_quaternions(rng: np.random.Generator, n: int) -> np.ndarray:
    # Shoemake's uniform rotation sampling.
    u1, u2, u3 = rng.random((3, n))
    a, b = np.sqrt(1.0 - u1), np.sqrt(u1)
    return np.stack([a * np.sin(2 * np.pi * u2), a * np.cos(2 * np.pi * u2),
                     b * np.sin(2 * np.pi * u3), b * np.cos(2 * np.pi * u3)], axis=1)


def scatter_attachments(skeleton: TreeSkeleton, params: ScatterParams,
                        stream: np.random.Generator) -> list[Attachment]:
    """Poisson counts, positions uniform in arc length over eligible branches."""
    ids, lengths = eligible_branches(skeleton, params.eligible_min_level)
    total = float(lengths.sum())
    if total <= 0.0:
        return []
    n_fruit = int(stream.poisson(params.fruit_density * total))
    n_leaf = int(stream.poisson(params.leaf_density * total))
    cum = np.concatenate([[0.0], np.cumsum(lengths)])

    def place(n):
        s = stream.random(n) * total
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(ids) - 1)
        t = np.clip((s - cum[k]) / lengths[k], 0.0, 1.0)
        return k, t

    out: list[Attachment] = []
    k, t = place(n_fruit)
    scales = params.fruit_radius_mean * (1 + params.fruit_radius_jitter * stream.uniform(-1, 1, n_fruit))
    for ki, ti, sc in zip(k, t, scales):
        b = int(ids[ki])
        anchor = tuple(skeleton.branches[b].point_at(float(ti)).tolist())
        out.append(Attachment(AttachmentKind.FRUIT, b, float(ti), anchor, HANGING,
                              float(sc), params.fruit_stem_length))
    k, t = place(n_leaf)
    scales = params.leaf_size_mean * (1 + params.leaf_size_jitter * stream.uniform(-1, 1, n_leaf))
    quats = _random_quaternions(stream, n_leaf)
    for ki, ti, sc, q in zip(k, t, scales, quats):
        b = int(ids[ki])
        anchor = tuple(skeleton.branches[b].point_at(float(ti)).tolist())
        out.append(Attachment(AttachmentKind.LEAF, b, float(ti), anchor,
                              tuple(q.tolist()), float(sc)))
    return out


def quaternion_matrix(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


@lru_cache(maxsize=8)
def icosphere(subdivision: int) -> np.ndarray:
    """Unit icosphere as a triangle soup of shape (20 * 4**subdivision, 3, 3), outward winding."""
    p = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array([[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
                  [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
                  [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]], dtype=float)
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    tris = v[np.array(faces)]
    for _ in range(subdivision):
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        ab, bc, ca = a + b, b + c, c + a
        ab /= np.linalg.norm(ab, axis=1, keepdims=True)
        bc /= np.linalg.norm(bc, axis=1, keepdims=True)
        ca /= np.linalg.norm(ca, axis=1, keepdims=True)
        tris = np.concatenate([np.stack(t, axis=1) for t in
                               ((a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca))])
    tris.setflags(write=False)
    return tris


_LEAF_CARD = np.array([[[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0], [0.5, 1.0, 0.0]],
                       [[-0.5, 0.0, 0.0], [0.5, 1.0, 0.0], [-0.5, 1.0, 0.0]]])


def instantiate_attachments(attachments, subdivision: int = 2) -> LabeledMesh:
    """Fruits become icospheres hanging below their stem; leaves become quad cards
    rooted at the anchor and extending along their local +Y."""
    if subdivision < 0:
        raise ParameterError("subdivision", "must be >= 0")
    sphere = icosphere(subdivision)
    tris, labels = [], []
    for a in attachments:
        rot = quaternion_matrix(a.orientation)
        anchor = np.asarray(a.anchor)
        if a.kind is AttachmentKind.FRUIT:
            center = anchor + rot @ np.array([0.0, 0.0, a.stem_length + a.scale])
            tris.append(center + a.scale * sphere)
            labels.append(np.full(len(sphere), SemanticClass.FRUIT, dtype=np.uint8))
        else:
            tris.append(anchor + (a.scale * _LEAF_CARD) @ rot.T)
            labels.append(np.full(2, SemanticClass.LEAF, dtype=np.uint8))
    if not tris:
        return LabeledMesh.empty()
    return LabeledMesh(np.concatenate(tris), np.concatenate(labels))
