"""Camera pose sampling from two coaxial cylinders, and interpolated trajectories.

The origin is drawn volume-uniformly from a hollow outer cylinder around the
model and the look-at target from a solid inner cylinder enclosing it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

Vec3 = tuple[float, float, float]
WORLD_UP: Vec3 = (0.0, 0.0, 1.0)
FALLBACK_UP: Vec3 = (1.0, 0.0, 0.0)


class DegenerateViewError(ValueError):
    """The view direction is parallel to the up hint."""


def _vec(v) -> Vec3:
    return tuple(float(c) for c in v)


@dataclass(frozen=True)
class CylinderRegion:
    center: Vec3 = (0.0, 0.0, 0.0)
    inner_radius: float = 0.0
    outer_radius: float = 1.0
    z_min: float = -1.0
    z_max: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", _vec(self.center))
        # Zero-size regions are allowed so a fixed target can be expressed.
        if not 0.0 <= self.inner_radius <= self.outer_radius:
            raise ParameterError("inner_radius", "need 0 <= inner_radius <= outer_radius")
        if self.inner_radius == self.outer_radius and self.outer_radius > 0:
            raise ParameterError("outer_radius", "hollow region has zero thickness")
        if self.z_min > self.z_max:
            raise ParameterError("z_min", "need z_min <= z_max")

    def contains(self, point, tol: float = 1e-9) -> bool:
        d = np.subtract(point, self.center)
        r = math.hypot(d[0], d[1])
        return (self.inner_radius - tol <= r <= self.outer_radius + tol
                and self.z_min - tol <= d[2] <= self.z_max + tol)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        r1, r2 = self.inner_radius, self.outer_radius
        r = math.sqrt(rng.random() * (r2 * r2 - r1 * r1) + r1 * r1)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        z = rng.uniform(self.z_min, self.z_max)
        cx, cy, cz = self.center
        return np.array([cx + r * math.cos(phi), cy + r * math.sin(phi), cz + z])


@dataclass(frozen=True)
class CameraSampler:
    external: CylinderRegion
    internal: CylinderRegion

    def __post_init__(self):
        if self.internal.outer_radius > self.external.inner_radius:
            raise ParameterError(
                "internal.outer_radius",
                "target cylinder must fit inside the hollow of the origin cylinder")


@dataclass(frozen=True)
class CameraPose:
    origin: Vec3
    target: Vec3
    right: Vec3
    up: Vec3
    forward: Vec3
    vertical_fov_deg: float = 60.0

    def __post_init__(self):
        for name in ("origin", "target", "right", "up", "forward"):
            object.__setattr__(self, name, _vec(getattr(self, name)))

    def basis(self) -> np.ndarray:
        return np.array([self.right, self.up, self.forward])


def look_at(origin, target, up_hint=WORLD_UP) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (right, up, forward). Raises DegenerateViewError if forward is parallel to up_hint."""
    f = np.subtract(target, origin, dtype=np.float64)
    n = np.linalg.norm(f)
    if n == 0.0:
        raise ValueError("origin and target coincide")
    f = f / n
    r = np.cross(f, np.asarray(up_hint, dtype=np.float64))
    rn = np.linalg.norm(r)
    if rn < 1e-9:
        raise DegenerateViewError("forward is parallel to the up hint")
    r = r / rn
    u = np.cross(r, f)
    return r, u, f


def make_pose(origin, target, fov_deg: float = 60.0) -> CameraPose:
    try:
        r, u, f = look_at(origin, target, WORLD_UP)
    except DegenerateViewError:
        r, u, f = look_at(origin, target, FALLBACK_UP)
    return CameraPose(origin, target, r, u, f, fov_deg)


def translate_pose(pose: CameraPose, delta) -> CameraPose:
    """Rigidly shift origin and target; the orientation is unchanged."""
    o = np.add(pose.origin, delta)
    t = np.add(pose.target, delta)
    return CameraPose(o, t, pose.right, pose.up, pose.forward, pose.vertical_fov_deg)


def translate_region(region: CylinderRegion, delta) -> CylinderRegion:
    return CylinderRegion(tuple(np.add(region.center, delta)), region.inner_radius,
                          region.outer_radius, region.z_min, region.z_max)


def sample_pose(sampler: CameraSampler, stream: np.random.Generator, fov_deg: float = 60.0) -> CameraPose:
    origin = sampler.external.sample(stream)
    target = sampler.internal.sample(stream)
    return make_pose(origin, target, fov_deg)


def trajectory(start: CameraPose, end: CameraPose, n: int) -> list[CameraPose]:
    if n < 2:
        raise ValueError("trajectory needs n >= 2")
    o0, o1 = np.array(start.origin), np.array(end.origin)
    t0, t1 = np.array(start.target), np.array(end.target)
    poses = [start]
    for i in range(1, n - 1):
        s = i / (n - 1)
        fov = start.vertical_fov_deg + s * (end.vertical_fov_deg - start.vertical_fov_deg)
        poses.append(make_pose(o0 + s * (o1 - o0), t0 + s * (t1 - t0), fov))
    poses.append(end)
    return poses


def default_sampler(bounds_lo, bounds_hi) -> CameraSampler:
    """Cylinders sized from a model's bounding box.

    The inner cylinder tightly encloses the box; the outer one spans 1.5x to 3x
    the box's horizontal half-diagonal, between 0.2x and 1.2x the model height
    above its base.
    """
    lo, hi = np.asarray(bounds_lo, float), np.asarray(bounds_hi, float)
    center = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    radius = max(math.hypot(half[0], half[1]), 1e-3)
    height = max(hi[2] - lo[2], 1e-3)
    internal = CylinderRegion(tuple(center), 0.0, radius, -half[2], half[2])
    base = lo[2] - center[2]
    external = CylinderRegion(tuple(center), 1.5 * radius, 3.0 * radius,
                              base + 0.2 * height, base + 1.2 * height)
    return CameraSampler(external, internal)
