"""Recursive parametric tree skeletons and their tube tessellation.

A reduced Weber-Penn style model: a trunk along +Z spawns children on its
distal part, each child shorter and thinner by fixed per-level ratios,
recursing to a fixed depth.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .scene import LabeledMesh, SemanticClass

LENGTH_JITTER = 0.1
ATTACH_RANGE = (0.3, 1.0)

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class TreeParams:
    """Tree shape knobs.

    ``down_angle_deg`` is the angle between a child axis and its parent axis.
    Negative values measure the same angle from the *reversed* parent axis,
    so -30 grows children 150 degrees away from the parent direction (drooping).
    """

    levels: int = 4
    trunk_length: float = 3.0
    length_ratio: float = 0.5
    trunk_radius: float = 0.12
    radius_ratio: float = 0.55
    children_min: int = 3
    children_max: int = 6
    down_angle_deg: float = 50.0
    down_angle_jitter_deg: float = 12.0
    curvature_deg: float = 25.0
    segments_per_branch: int = 5
    phyllotaxis_deg: float = 137.5
    sides: int = 8

    def __post_init__(self):
        checks = [
            ("levels", self.levels >= 1, ">= 1"),
            ("trunk_length", self.trunk_length > 0, "> 0"),
            ("length_ratio", 0 < self.length_ratio <= 1, "in (0, 1]"),
            ("trunk_radius", self.trunk_radius > 0, "> 0"),
            ("radius_ratio", 0 < self.radius_ratio <= 1, "in (0, 1]"),
            ("children_min", self.children_min >= 1, ">= 1"),
            ("children_max", self.children_max >= self.children_min, ">= children_min"),
            ("down_angle_jitter_deg", self.down_angle_jitter_deg >= 0, ">= 0"),
            ("segments_per_branch", self.segments_per_branch >= 1, ">= 1"),
            ("sides", self.sides >= 3, ">= 3"),
        ]
        for name, ok, bound in checks:
            if not ok:
                raise ParameterError(name, f"must be {bound}, got {getattr(self, name)!r}")
        for name in ("levels", "children_min", "children_max", "segments_per_branch", "sides"):
            if int(getattr(self, name)) != getattr(self, name):
                raise ParameterError(name, "must be an integer")


@dataclass(frozen=True)
class BranchSegment:
    start: Vec3
    end: Vec3
    radius_start: float
    radius_end: float

    @property
    def length(self) -> float:
        return math.dist(self.start, self.end)


@dataclass
class Branch:
    level: int
    segments: list[BranchSegment]
    parent_id: int | None = None
    attach_t: float = 0.0
    children: list[int] = field(default_factory=list)

    @property
    def length(self) -> float:
        return sum(s.length for s in self.segments)

    def polyline(self) -> np.ndarray:
        pts = [self.segments[0].start] + [s.end for s in self.segments]
        return np.array(pts)

    def _locate(self, t: float) -> tuple[int, float]:
        n = len(self.segments)
        k = min(int(t * n), n - 1)
        return k, t * n - k

    def point_at(self, t: float) -> np.ndarray:
        # Segments within a branch have equal length, so t is also the arc fraction.
        k, s = self._locate(t)
        seg = self.segments[k]
        a, b = np.array(seg.start), np.array(seg.end)
        return a + s * (b - a)

    def tangent_at(self, t: float) -> np.ndarray:
        seg = self.segments[self._locate(t)[0]]
        d = np.subtract(seg.end, seg.start)
        return d / np.linalg.norm(d)

    def radius_at(self, t: float) -> float:
        k, s = self._locate(t)
        seg = self.segments[k]
        return seg.radius_start + s * (seg.radius_end - seg.radius_start)


@dataclass
class TreeSkeleton:
    branches: list[Branch]
    params_echo: TreeParams
    seed: int

    def __eq__(self, other):
        if not isinstance(other, TreeSkeleton):
            return NotImplemented
        return (self.seed == other.seed and self.params_echo == other.params_echo
                and self.branches == other.branches)


@dataclass
class SkeletonStats:
    counts: list[int]
    lengths: list[float]
    max_radius: float

    @property
    def total_branches(self) -> int:
        return sum(self.counts)

    @property
    def total_length(self) -> float:
        return sum(self.lengths)


def _rotate(v: np.ndarray, axis: np.ndarray, angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(axis, v) * s + axis * np.dot(axis, v) * (1.0 - c)


def perpendicular_basis(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([0.0, 0.0, 1.0]) if abs(d[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(d, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(d, e1)


def _deviation_deg(params: TreeParams, rng: np.random.Generator) -> float:
    jitter = rng.uniform(-params.down_angle_jitter_deg, params.down_angle_jitter_deg)
    base = params.down_angle_deg if params.down_angle_deg >= 0 else 180.0 + params.down_angle_deg
    return min(180.0, max(0.0, base + jitter))


def _grow(params, rng, branches, level, start, direction, length, base_radius,
          parent_id, attach_t):
    n = params.segments_per_branch
    e1, e2 = perpendicular_basis(direction)
    bend_az = rng.uniform(0.0, 2.0 * math.pi)
    bend_axis = math.cos(bend_az) * e1 + math.sin(bend_az) * e2
    step = math.radians(params.curvature_deg) / n
    tip_radius = base_radius * params.radius_ratio

    segments = []
    p = np.asarray(start, dtype=np.float64)
    for k in range(n):
        d = _rotate(direction, bend_axis, k * step)
        q = p + d * (length / n)
        r0 = base_radius + (tip_radius - base_radius) * (k / n)
        r1 = base_radius + (tip_radius - base_radius) * ((k + 1) / n)
        segments.append(BranchSegment(tuple(p.tolist()), tuple(q.tolist()), r0, r1))
        p = q
    branch = Branch(level, segments, parent_id, attach_t)
    my_id = len(branches)
    branches.append(branch)
    if parent_id is not None:
        branches[parent_id].children.append(my_id)

    if level >= params.levels - 1:
        return
    count = int(rng.integers(params.children_min, params.children_max + 1))
    az0 = rng.uniform(0.0, 2.0 * math.pi)
    draws = []
    for _ in range(count):
        t = rng.uniform(*ATTACH_RANGE)
        dev = _deviation_deg(params, rng)
        scale = 1.0 + LENGTH_JITTER * rng.uniform(-1.0, 1.0)
        draws.append((t, dev, scale))
    draws.sort(key=lambda x: x[0])
    child_level = level + 1
    nominal = params.trunk_length * params.length_ratio ** child_level
    for i, (t, dev, scale) in enumerate(draws):
        tangent = branch.tangent_at(t)
        c1, c2 = perpendicular_basis(tangent)
        az = az0 + math.radians(params.phyllotaxis_deg) * i
        radial = math.cos(az) * c1 + math.sin(az) * c2
        th = math.radians(dev)
        child_dir = math.cos(th) * tangent + math.sin(th) * radial
        child_dir /= np.linalg.norm(child_dir)
        _grow(params, rng, branches, child_level, branch.point_at(t), child_dir,
              nominal * scale, branch.radius_at(t) * params.radius_ratio, my_id, t)


def generate_skeleton(params: TreeParams, seed: int) -> TreeSkeleton:
    """Grow a tree deterministically from ``(params, seed)``.

    The trunk starts at the origin along +Z with exactly ``trunk_length``;
    deeper levels get ``trunk_length * length_ratio**level`` with +-10% jitter.
    Each branch bends by ``curvature_deg * k / segments`` at segment k, about a
    random axis normal to its initial direction.
    """
    if not isinstance(params, TreeParams):
        raise ParameterError("params", "expected TreeParams")
    rng = np.random.Generator(np.random.PCG64(seed))
    branches: list[Branch] = []
    _grow(params, rng, branches, 0, np.zeros(3), np.array([0.0, 0.0, 1.0]),
          params.trunk_length, params.trunk_radius, None, 0.0)
    return TreeSkeleton(branches, params, seed)


def skeleton_stats(skeleton: TreeSkeleton) -> SkeletonStats:
    depth = max(b.level for b in skeleton.branches) + 1
    counts = [0] * depth
    lengths = [0.0] * depth
    max_radius = 0.0
    for b in skeleton.branches:
        counts[b.level] += 1
        lengths[b.level] += b.length
        max_radius = max(max_radius, max(s.radius_start for s in b.segments))
    return SkeletonStats(counts, lengths, max_radius)


def _ring_frames(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Parallel-transported (normal, binormal) at each joint, perpendicular to the bisector."""
    dirs = np.diff(pts, axis=0)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    axes = np.empty_like(pts)
    axes[0], axes[-1] = dirs[0], dirs[-1]
    for k in range(1, len(pts) - 1):
        a = dirs[k - 1] + dirs[k]
        na = np.linalg.norm(a)
        axes[k] = a / na if na > 1e-9 else dirs[k]
    normals = np.empty_like(pts)
    normals[0] = perpendicular_basis(axes[0])[0]
    for k in range(1, len(pts)):
        v = normals[k - 1] - axes[k] * np.dot(normals[k - 1], axes[k])
        nv = np.linalg.norm(v)
        normals[k] = v / nv if nv > 1e-9 else perpendicular_basis(axes[k])[0]
    return normals, np.cross(axes, normals)


def tube_mesh(skeleton: TreeSkeleton, sides: int | None = None) -> LabeledMesh:
    """One generalized cylinder per branch, fan-capped at both ends."""
    sides = skeleton.params_echo.sides if sides is None else sides
    if sides < 3:
        raise ParameterError("sides", "must be >= 3")
    ang = 2.0 * np.pi * np.arange(sides) / sides
    cos_a, sin_a = np.cos(ang), np.sin(ang)
    nxt = (np.arange(sides) + 1) % sides
    tris, labels = [], []
    for b in skeleton.branches:
        pts = b.polyline()
        radii = np.array([s.radius_start for s in b.segments] + [b.segments[-1].radius_end])
        normals, binormals = _ring_frames(pts)
        rings = (pts[:, None, :] + radii[:, None, None]
                 * (cos_a[None, :, None] * normals[:, None, :]
                    + sin_a[None, :, None] * binormals[:, None, :]))
        a, b_ = rings[:-1], rings[1:]
        side1 = np.stack([a, a[:, nxt], b_[:, nxt]], axis=2)
        side2 = np.stack([a, b_[:, nxt], b_], axis=2)
        start_cap = np.stack([np.broadcast_to(pts[0], (sides, 3)), rings[0][nxt], rings[0]], axis=1)
        end_cap = np.stack([np.broadcast_to(pts[-1], (sides, 3)), rings[-1], rings[-1][nxt]], axis=1)
        t = np.concatenate([side1.reshape(-1, 3, 3), side2.reshape(-1, 3, 3), start_cap, end_cap])
        tris.append(t)
        cls = SemanticClass.TRUNK if b.level == 0 else SemanticClass.BRANCH
        labels.append(np.full(len(t), cls, dtype=np.uint8))
    return LabeledMesh(np.concatenate(tris), np.concatenate(labels))
