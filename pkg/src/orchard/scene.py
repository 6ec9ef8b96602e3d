"""Labeled geometry, materials, environment maps and scene assembly."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import AssemblyError


class SemanticClass(enum.IntEnum):
    # Values are the on-disk ground-truth encoding; never renumber.
    BACKGROUND = 0
    TRUNK = 1
    BRANCH = 2
    LEAF = 3
    FRUIT = 4


NUM_CLASSES = len(SemanticClass)


@dataclass
class LabeledMesh:
    """Triangle soup: ``triangles`` is (T, 3, 3), ``labels`` is (T,) class ids."""

    triangles: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.triangles = np.asarray(self.triangles, dtype=np.float64).reshape(-1, 3, 3)
        self.labels = np.asarray(self.labels, dtype=np.uint8).reshape(-1)
        if len(self.labels) != len(self.triangles):
            raise ValueError("one label per triangle required")

    def __len__(self):
        return len(self.triangles)

    @classmethod
    def empty(cls) -> LabeledMesh:
        return cls(np.zeros((0, 3, 3)), np.zeros(0, dtype=np.uint8))

    @classmethod
    def concatenate(cls, meshes) -> LabeledMesh:
        meshes = list(meshes)
        if not meshes:
            return cls.empty()
        return cls(np.concatenate([m.triangles for m in meshes]),
                   np.concatenate([m.labels for m in meshes]))

    def areas(self) -> np.ndarray:
        t = self.triangles
        return 0.5 * np.linalg.norm(np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0]), axis=1)


@dataclass(frozen=True)
class Material:
    albedo: tuple[float, float, float] = (0.8, 0.8, 0.8)
    specular_weight: float = 0.0
    roughness: float = 1.0

    def __post_init__(self):
        if len(self.albedo) != 3 or any(not 0.0 <= a <= 1.0 for a in self.albedo):
            raise ValueError(f"albedo must be in [0,1]^3, got {self.albedo}")
        if not 0.0 <= self.specular_weight <= 1.0:
            raise ValueError(f"specular_weight must be in [0,1], got {self.specular_weight}")
        if not 0.0 < self.roughness <= 1.0:
            raise ValueError(f"roughness must be in (0,1], got {self.roughness}")


DEFAULT_MATERIALS: dict[SemanticClass, Material] = {
    SemanticClass.BACKGROUND: Material((0.0, 0.0, 0.0)),
    SemanticClass.TRUNK: Material((0.22, 0.14, 0.08), 0.0, 1.0),
    SemanticClass.BRANCH: Material((0.28, 0.19, 0.11), 0.0, 1.0),
    SemanticClass.LEAF: Material((0.10, 0.32, 0.07), 0.08, 0.5),
    SemanticClass.FRUIT: Material((0.80, 0.36, 0.05), 0.15, 0.3),
}

# Display colors for label visualisation; ids are what gets written to disk.
LABEL_PALETTE: dict[SemanticClass, tuple[int, int, int]] = {
    SemanticClass.BACKGROUND: (0, 0, 0),
    SemanticClass.TRUNK: (120, 72, 30),
    SemanticClass.BRANCH: (190, 140, 80),
    SemanticClass.LEAF: (40, 170, 40),
    SemanticClass.FRUIT: (255, 130, 0),
}


class EnvironmentKind(str, enum.Enum):
    LOADED_HDR = "LOADED_HDR"
    PROCEDURAL_SKY = "PROCEDURAL_SKY"


@dataclass(frozen=True, eq=False)
class EnvironmentMap:
    """Equirectangular radiance grid of shape (height, width, 3); row 0 is the zenith."""

    radiance: np.ndarray
    kind: EnvironmentKind = EnvironmentKind.PROCEDURAL_SKY

    def __post_init__(self):
        rad = np.ascontiguousarray(self.radiance, dtype=np.float64)
        if rad.ndim != 3 or rad.shape[2] != 3 or rad.shape[0] < 1 or rad.shape[1] < 1:
            raise ValueError(f"radiance must be (H, W, 3), got {rad.shape}")
        if not np.all(np.isfinite(rad)) or np.any(rad < 0):
            raise ValueError("radiance must be finite and non-negative")
        rad.setflags(write=False)
        object.__setattr__(self, "radiance", rad)

    @property
    def width(self) -> int:
        return self.radiance.shape[1]

    @property
    def height(self) -> int:
        return self.radiance.shape[0]

    @classmethod
    def constant(cls, value, width: int = 8, height: int = 4) -> EnvironmentMap:
        rgb = np.broadcast_to(np.asarray(value, dtype=np.float64), (3,))
        return cls(np.tile(rgb, (height, width, 1)), EnvironmentKind.PROCEDURAL_SKY)


def texel_of(width: int, height: int, direction) -> tuple[int, int]:
    """(row, col) of the texel looked up for ``direction``."""
    x, y, z = (float(c) for c in direction)
    u = (math.atan2(y, x) + math.pi) / (2.0 * math.pi)
    v = math.acos(min(1.0, max(-1.0, z))) / math.pi
    col = min(int(u * width), width - 1)
    row = min(int(v * height), height - 1)
    return row, col


def texel_direction(width: int, height: int, row: int, col: int) -> np.ndarray:
    """Unit direction through the center of texel (row, col)."""
    phi = (col + 0.5) / width * 2.0 * math.pi - math.pi
    theta = (row + 0.5) / height * math.pi
    s = math.sin(theta)
    return np.array([s * math.cos(phi), s * math.sin(phi), math.cos(theta)])


def env_radiance(env: EnvironmentMap, direction) -> np.ndarray:
    row, col = texel_of(env.width, env.height, direction)
    return env.radiance[row, col].copy()


def procedural_sky(zenith_rgb=(0.35, 0.55, 0.95), horizon_rgb=(0.85, 0.9, 1.0),
                   ground_rgb=(0.3, 0.26, 0.2), sun_direction=(0.3, 0.2, 0.93),
                   sun_intensity=50.0, sun_angular_radius_deg=2.0,
                   width: int = 256, height: int = 128) -> EnvironmentMap:
    """Analytic sky: horizon-to-zenith and horizon-to-ground blends plus a sun disc.

    Blend weight is sin(|elevation|), evaluated at texel centers.
    """
    if sun_intensity < 0 or min(zenith_rgb) < 0 or min(horizon_rgb) < 0 or min(ground_rgb) < 0:
        raise ValueError("sky intensities must be non-negative")
    zen, hor, gnd = (np.asarray(c, dtype=np.float64) for c in (zenith_rgb, horizon_rgb, ground_rgb))
    theta = (np.arange(height) + 0.5) / height * np.pi
    phi = (np.arange(width) + 0.5) / width * 2.0 * np.pi - np.pi
    elev_sin = np.cos(theta)  # sin(elevation)
    w = np.abs(elev_sin)[:, None]
    rows = np.where(elev_sin[:, None] >= 0, hor + w * (zen - hor), hor + w * (gnd - hor))
    rad = np.repeat(rows[:, None, :], width, axis=1)

    if sun_intensity > 0:
        sd = np.asarray(sun_direction, dtype=np.float64)
        sd = sd / np.linalg.norm(sd)
        st, ct = np.sin(theta)[:, None], np.cos(theta)[:, None]
        dirs = np.stack([st * np.cos(phi)[None, :], st * np.sin(phi)[None, :],
                         np.broadcast_to(ct, (height, width))], axis=-1)
        inside = dirs @ sd >= math.cos(math.radians(sun_angular_radius_deg))
        rad = rad + inside[..., None] * float(sun_intensity)
    return EnvironmentMap(rad, EnvironmentKind.PROCEDURAL_SKY)


@dataclass(frozen=True, eq=False)
class Scene:
    """Immutable render input. Geometry is recentered so its box center is the origin."""

    triangles: np.ndarray
    labels: np.ndarray
    materials: tuple[Material, ...]
    environment: EnvironmentMap
    bounds: tuple[np.ndarray, np.ndarray] = field(repr=False)
    offset: np.ndarray = field(repr=False)  # translation applied during assembly

    def __len__(self):
        return len(self.triangles)

    @cached_property
    def normals(self) -> np.ndarray:
        t = self.triangles
        n = np.cross(t[:, 1] - t[:, 0], t[:, 2] - t[:, 0])
        length = np.linalg.norm(n, axis=1, keepdims=True)
        n = np.divide(n, length, out=np.zeros_like(n), where=length > 0)
        n.setflags(write=False)
        return n

    @property
    def extent(self) -> float:
        lo, hi = self.bounds
        return float(np.max(hi - lo))

    @cached_property
    def bvh(self):
        from .render.bvh import build_bvh
        return build_bvh(self.triangles)

    @cached_property
    def triangle_set(self):
        from .render.bvh import TriangleSet
        return TriangleSet.from_triangles(self.triangles.reshape(-1, 3, 3))

    @classmethod
    def empty(cls, env: EnvironmentMap, materials=None) -> Scene:
        """A geometry-free scene (only the environment is visible)."""
        z = np.zeros(3)
        return cls(np.zeros((0, 3, 3)), np.zeros(0, dtype=np.uint8), _material_table(materials),
                   env, (z, z), z)

    def material_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        albedo = np.array([m.albedo for m in self.materials], dtype=np.float64)
        spec = np.array([m.specular_weight for m in self.materials], dtype=np.float64)
        rough = np.array([m.roughness for m in self.materials], dtype=np.float64)
        return albedo, spec, rough


def _material_table(materials) -> tuple[Material, ...]:
    table = dict(DEFAULT_MATERIALS)
    if materials:
        for key, mat in materials.items():
            table[SemanticClass(key) if not isinstance(key, str) else SemanticClass[key.upper()]] = mat
    return tuple(table[c] for c in SemanticClass)


def assemble(meshes, materials=None, env: EnvironmentMap | None = None) -> Scene:
    """Concatenate meshes into a scene centered on the environment sphere center."""
    meshes = [m for m in meshes if len(m)]
    if not meshes:
        raise AssemblyError("scene has no geometry")
    merged = LabeledMesh.concatenate(meshes)
    pts = merged.triangles.reshape(-1, 3)
    center = 0.5 * (pts.min(axis=0) + pts.max(axis=0))
    tris = merged.triangles - center
    pts = tris.reshape(-1, 3)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    for arr in (tris, merged.labels, lo, hi, center):
        arr.setflags(write=False)
    return Scene(
        triangles=tris,
        labels=merged.labels,
        materials=_material_table(materials),
        environment=env if env is not None else procedural_sky(),
        bounds=(lo, hi),
        offset=-center,
    )
