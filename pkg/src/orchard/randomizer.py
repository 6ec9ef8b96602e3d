"""Per-frame domain randomization driven by counter-based random streams.

Every random decision in a run is drawn from a stream whose state is a pure
function of ``(master_seed, index, purpose)``:

    key = mix64(mix64(mix64(seed + GOLDEN) ^ (index * GOLDEN)) ^ fnv1a64(purpose))

``mix64`` is the splitmix64 finalizer and ``fnv1a64`` the 64-bit FNV-1a hash of
the UTF-8 purpose label. The key seeds a PCG64 generator. Frames can therefore be
resolved in any order, or concurrently, with identical results.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraPose, CameraSampler, sample_pose
from .errors import ParameterError

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
MIX_M1 = 0xBF58476D1CE4E5B9
MIX_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * MIX_M1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_M2) & MASK64
    return z ^ (z >> 31)


def fnv1a64(label: str) -> int:
    h = 0xCBF29CE484222325
    for b in label.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


def stream_key(master_seed: int, index: int, purpose: str) -> int:
    k = mix64((master_seed + GOLDEN) & MASK64)
    k = mix64(k ^ ((index * GOLDEN) & MASK64))
    return mix64(k ^ fnv1a64(purpose))


def derive_stream(master_seed: int, frame_index: int, purpose: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(stream_key(master_seed, frame_index, purpose)))


class FocusMode(str, enum.Enum):
    AT_TARGET = "at_target"
    FIXED = "fixed"


@dataclass(frozen=True)
class RandomizationSpec:
    spp_range: tuple[int, int] = (16, 64)
    aperture_range: tuple[float, float] = (0.0, 0.02)
    focus_mode: FocusMode = FocusMode.AT_TARGET
    focus_distance: float = 3.0  # used only in FIXED mode
    env_pool: tuple[str, ...] = ("sky",)
    env_change_period: int = 1

    def __post_init__(self):
        object.__setattr__(self, "spp_range", tuple(int(v) for v in self.spp_range))
        object.__setattr__(self, "aperture_range", tuple(float(v) for v in self.aperture_range))
        object.__setattr__(self, "env_pool", tuple(self.env_pool))
        object.__setattr__(self, "focus_mode", FocusMode(self.focus_mode))
        lo, hi = self.spp_range
        if not 1 <= lo <= hi:
            raise ParameterError("spp_range", f"need 1 <= min <= max, got {self.spp_range}")
        lo, hi = self.aperture_range
        if not 0.0 <= lo <= hi:
            raise ParameterError("aperture_range", f"need 0 <= min <= max, got {self.aperture_range}")
        if not self.env_pool:
            raise ParameterError("env_pool", "must not be empty")
        if self.env_change_period < 1:
            raise ParameterError("env_change_period", "must be >= 1")
        if self.focus_mode is FocusMode.FIXED and not self.focus_distance > 0:
            raise ParameterError("focus_distance", "must be > 0")


@dataclass(frozen=True)
class FrameConfig:
    frame_index: int
    camera: CameraPose
    env_id: str
    spp: int
    aperture: float
    focus_distance: float
    stream_tag: dict = field(default_factory=dict)  # purpose -> 64-bit stream key


def env_for_frame(spec: RandomizationSpec, frame_index: int) -> str:
    return spec.env_pool[(frame_index // spec.env_change_period) % len(spec.env_pool)]


def resolve_frame(spec: RandomizationSpec, sampler: CameraSampler, master_seed: int,
                  frame_index: int, fov_deg: float = 60.0,
                  pose: CameraPose | None = None) -> FrameConfig:
    """Resolve one frame's randomized settings.

    ``pose`` bypasses camera sampling (trajectory mode); the camera stream is
    still recorded so manifests have a uniform shape.
    """
    tags = {p: stream_key(master_seed, frame_index, p) for p in ("camera", "render", "pixels")}
    if pose is None:
        pose = sample_pose(sampler, derive_stream(master_seed, frame_index, "camera"), fov_deg)
    rng = derive_stream(master_seed, frame_index, "render")
    spp = int(rng.integers(spec.spp_range[0], spec.spp_range[1] + 1))
    aperture = float(rng.uniform(*spec.aperture_range))
    if spec.focus_mode is FocusMode.AT_TARGET:
        focus = float(np.linalg.norm(np.subtract(pose.target, pose.origin)))
    else:
        focus = float(spec.focus_distance)
    return FrameConfig(frame_index, pose, env_for_frame(spec, frame_index), spp, aperture,
                       focus, tags)
