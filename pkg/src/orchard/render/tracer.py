"""CPU path tracer producing a linear RGB image and a pixel-aligned label map.

Every pixel owns a splitmix64 stream keyed on ``(frame key, pixel index)``, so
results do not depend on how rows are split between workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba as nb
import numpy as np

from ..camera import CameraPose
from ..randomizer import GOLDEN, MASK64, MIX_M1, MIX_M2, mix64, stream_key
from ..scene import Scene
from .bvh import STACK_SIZE, intersect_brute, intersect_bvh

_JIT = dict(cache=True, nogil=True, error_model="numpy")
_GOLDEN = np.uint64(GOLDEN)
_M1 = np.uint64(MIX_M1)
_M2 = np.uint64(MIX_M2)
_INV53 = 1.0 / 9007199254740992.0
TILE_ROWS = 8


@dataclass(frozen=True)
class RenderSettings:
    """``aperture`` is the lens diameter in meters; 0 gives a pinhole camera.

    ``pixel_jitter=False`` sends every sample through the pixel center.
    """

    width: int = 512
    height: int = 512
    spp: int = 16
    max_depth: int = 4
    aperture: float = 0.0
    focus_distance: float = 1.0
    vertical_fov_deg: float = 60.0
    pixel_jitter: bool = True

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.spp < 1:
            raise ValueError("spp must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.aperture < 0:
            raise ValueError("aperture must be >= 0")
        if self.aperture > 0 and not self.focus_distance > 0:
            raise ValueError("focus_distance must be > 0 with a finite aperture")
        if not 0 < self.vertical_fov_deg < 180:
            raise ValueError("vertical_fov_deg must be in (0, 180)")


def pixel_seed(frame_key: int, pixel_index: int) -> int:
    """Reference twin of the in-kernel per-pixel seed."""
    return mix64(frame_key ^ mix64(((pixel_index + 1) * GOLDEN) & MASK64))


@nb.njit(inline="always", **_JIT)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@nb.njit(**_JIT)
def kernel_pixel_seed(key, pixel_index):
    return _mix(key ^ _mix((np.uint64(pixel_index) + np.uint64(1)) * _GOLDEN))


@nb.njit(inline="always", **_JIT)
def _uniform(state):
    state[0] += _GOLDEN
    return float(_mix(state[0]) >> np.uint64(11)) * _INV53


@nb.njit(**_JIT)
def uniform_sequence(key, pixel_index, n):
    state = np.empty(1, np.uint64)
    state[0] = kernel_pixel_seed(key, pixel_index)
    out = np.empty(n)
    for i in range(n):
        out[i] = _uniform(state)
    return out


@nb.njit(inline="always", **_JIT)
def _env_lookup(env, dx, dy, dz):
    h, w = env.shape[0], env.shape[1]
    u = (math.atan2(dy, dx) + math.pi) / (2.0 * math.pi)
    v = math.acos(min(1.0, max(-1.0, dz))) / math.pi
    col = min(int(u * w), w - 1)
    row = min(int(v * h), h - 1)
    return env[row, col, 0], env[row, col, 1], env[row, col, 2]


@nb.njit(inline="always", **_JIT)
def _primary_ray(x, y, jx, jy, l1, l2, width, height, cam, tan_half, aperture, focus):
    aspect = width / height
    sx = (2.0 * (x + jx) / width - 1.0) * tan_half * aspect
    sy = (1.0 - 2.0 * (y + jy) / height) * tan_half
    dx = cam[3, 0] + sx * cam[1, 0] + sy * cam[2, 0]
    dy = cam[3, 1] + sx * cam[1, 1] + sy * cam[2, 1]
    dz = cam[3, 2] + sx * cam[1, 2] + sy * cam[2, 2]
    n = math.sqrt(dx * dx + dy * dy + dz * dz)
    dx, dy, dz = dx / n, dy / n, dz / n
    ox, oy, oz = cam[0, 0], cam[0, 1], cam[0, 2]
    if aperture > 0.0:
        r = 0.5 * aperture * math.sqrt(l1)
        th = 2.0 * math.pi * l2
        lx, ly = r * math.cos(th), r * math.sin(th)
        cos_f = dx * cam[3, 0] + dy * cam[3, 1] + dz * cam[3, 2]
        s = focus / cos_f
        fx, fy, fz = ox + s * dx, oy + s * dy, oz + s * dz
        ox = ox + lx * cam[1, 0] + ly * cam[2, 0]
        oy = oy + lx * cam[1, 1] + ly * cam[2, 1]
        oz = oz + lx * cam[1, 2] + ly * cam[2, 2]
        dx, dy, dz = fx - ox, fy - oy, fz - oz
        n = math.sqrt(dx * dx + dy * dy + dz * dz)
        dx, dy, dz = dx / n, dy / n, dz / n
    return ox, oy, oz, dx, dy, dz


@nb.njit(inline="always", **_JIT)
def _onb(nx, ny, nz):
    # Duff et al. 2017 branchless basis.
    sign = 1.0 if nz >= 0.0 else -1.0
    a = -1.0 / (sign + nz)
    b = nx * ny * a
    return (1.0 + sign * nx * nx * a, sign * b, -sign * nx,
            b, sign + ny * ny * a, -ny)


@nb.njit(inline="always", **_JIT)
def _nearest(ox, oy, oz, dx, dy, dz, v0, e1, e2, bvh_min, bvh_max, left, right,
             axis, start, count, order, stack, use_bvh):
    if use_bvh:
        return intersect_bvh(ox, oy, oz, dx, dy, dz, 0.0, np.inf, v0, e1, e2,
                             bvh_min, bvh_max, left, right, axis, start, count, order, stack)
    return intersect_brute(ox, oy, oz, dx, dy, dz, 0.0, np.inf, v0, e1, e2)


@nb.njit(**_JIT)
def _trace_path(ox, oy, oz, dx, dy, dz, state, max_depth, eps, v0, e1, e2, normals, labels,
                albedo, spec_w, rough, env, bvh_min, bvh_max, left, right, axis, start,
                count, order, stack, use_bvh):
    """Returns (r, g, b, primary_hit)."""
    tr, tg, tb = 1.0, 1.0, 1.0
    lr, lg, lb = 0.0, 0.0, 0.0
    primary_hit = False
    for depth in range(max_depth + 1):
        t, i, _, _ = _nearest(ox, oy, oz, dx, dy, dz, v0, e1, e2, bvh_min, bvh_max,
                              left, right, axis, start, count, order, stack, use_bvh)
        if i < 0:
            er, eg, eb = _env_lookup(env, dx, dy, dz)
            lr += tr * er
            lg += tg * eg
            lb += tb * eb
            break
        if depth == 0:
            primary_hit = True
        if depth == max_depth:
            break
        nx, ny, nz = normals[i, 0], normals[i, 1], normals[i, 2]
        if nx * dx + ny * dy + nz * dz > 0.0:
            nx, ny, nz = -nx, -ny, -nz
        px, py, pz = ox + t * dx, oy + t * dy, oz + t * dz
        c = labels[i]
        if _uniform(state) < spec_w[c]:
            k = 2.0 * (dx * nx + dy * ny + dz * nz)
            rx, ry, rz = dx - k * nx, dy - k * ny, dz - k * nz
            z = 1.0 - 2.0 * _uniform(state)
            phi = 2.0 * math.pi * _uniform(state)
            rad = rough[c] * _uniform(state) ** (1.0 / 3.0)
            sxy = math.sqrt(max(0.0, 1.0 - z * z))
            rx += rad * sxy * math.cos(phi)
            ry += rad * sxy * math.sin(phi)
            rz += rad * z
            n = math.sqrt(rx * rx + ry * ry + rz * rz)
            if n == 0.0 or rx * nx + ry * ny + rz * nz <= 0.0:
                break
            dx, dy, dz = rx / n, ry / n, rz / n
        else:
            u1 = _uniform(state)
            u2 = _uniform(state)
            r = math.sqrt(u1)
            phi = 2.0 * math.pi * u2
            lx, ly, lz = r * math.cos(phi), r * math.sin(phi), math.sqrt(max(0.0, 1.0 - u1))
            b1x, b1y, b1z, b2x, b2y, b2z = _onb(nx, ny, nz)
            dx = lx * b1x + ly * b2x + lz * nx
            dy = lx * b1y + ly * b2y + lz * ny
            dz = lx * b1z + ly * b2z + lz * nz
            n = math.sqrt(dx * dx + dy * dy + dz * dz)
            dx, dy, dz = dx / n, dy / n, dz / n
            tr *= albedo[c, 0]
            tg *= albedo[c, 1]
            tb *= albedo[c, 2]
        ox, oy, oz = px + eps * nx, py + eps * ny, pz + eps * nz
    return lr, lg, lb, primary_hit


@nb.njit(**_JIT)
def render_rows(y0, y1, width, height, spp, max_depth, jitter, cam, tan_half, aperture,
                focus, key, eps, v0, e1, e2, normals, labels, albedo, spec_w, rough, env,
                bvh_min, bvh_max, left, right, axis, start, count, order, use_bvh,
                out_rgb, out_hits):
    stack = np.empty(STACK_SIZE, np.int64)
    state = np.empty(1, np.uint64)
    inv_spp = 1.0 / spp
    for y in range(y0, y1):
        for x in range(width):
            state[0] = kernel_pixel_seed(key, y * width + x)
            ar, ag, ab = 0.0, 0.0, 0.0
            hits = 0
            for _ in range(spp):
                if jitter:
                    jx = _uniform(state)
                    jy = _uniform(state)
                else:
                    jx, jy = 0.5, 0.5
                # Lens draws are consumed even for a pinhole so aperture -> 0 is continuous.
                l1 = _uniform(state)
                l2 = _uniform(state)
                ox, oy, oz, dx, dy, dz = _primary_ray(x, y, jx, jy, l1, l2, width, height,
                                                      cam, tan_half, aperture, focus)
                r, g, b, hit = _trace_path(ox, oy, oz, dx, dy, dz, state, max_depth, eps,
                                           v0, e1, e2, normals, labels, albedo, spec_w,
                                           rough, env, bvh_min, bvh_max, left, right,
                                           axis, start, count, order, stack, use_bvh)
                ar += r
                ag += g
                ab += b
                if hit:
                    hits += 1
            out_rgb[y - y0, x, 0] = ar * inv_spp
            out_rgb[y - y0, x, 1] = ag * inv_spp
            out_rgb[y - y0, x, 2] = ab * inv_spp
            out_hits[y - y0, x] = hits


@nb.njit(**_JIT)
def label_rows(y0, y1, width, height, cam, tan_half, v0, e1, e2, labels,
               bvh_min, bvh_max, left, right, axis, start, count, order, use_bvh, out):
    stack = np.empty(STACK_SIZE, np.int64)
    for y in range(y0, y1):
        for x in range(width):
            ox, oy, oz, dx, dy, dz = _primary_ray(x, y, 0.5, 0.5, 0.0, 0.0, width, height,
                                                  cam, tan_half, 0.0, 1.0)
            _, i, _, _ = _nearest(ox, oy, oz, dx, dy, dz, v0, e1, e2, bvh_min, bvh_max,
                                  left, right, axis, start, count, order, stack, use_bvh)
            out[y - y0, x] = labels[i] if i >= 0 else 0


def _camera_array(pose: CameraPose) -> np.ndarray:
    return np.array([pose.origin, pose.right, pose.up, pose.forward], dtype=np.float64)


def _accel_arrays(scene: Scene, accelerate: bool):
    if accelerate and len(scene):
        return scene.bvh.arrays(), True
    z3 = np.zeros((1, 3))
    zi = np.zeros(1, np.int64)
    return (z3, z3, zi, zi, zi, zi, zi, zi), False


def _bands(height: int, rows) -> list[tuple[int, int]]:
    y0, y1 = (0, height) if rows is None else rows
    if not 0 <= y0 <= y1 <= height:
        raise ValueError(f"row range {rows} outside image of height {height}")
    return [(y, min(y + TILE_ROWS, y1)) for y in range(y0, y1, TILE_ROWS)]


def _run_bands(fn, bands, workers: int):
    if workers <= 1 or len(bands) <= 1:
        for b in bands:
            fn(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fn, bands))


def _render(scene, pose, settings, frame_key, workers, accelerate, rows):
    ts = scene.triangle_set
    accel, use_bvh = _accel_arrays(scene, accelerate)
    albedo, spec, rough = scene.material_arrays()
    normals = np.ascontiguousarray(scene.normals)
    labels = np.ascontiguousarray(scene.labels, dtype=np.int64)
    env = scene.environment.radiance
    cam = _camera_array(pose)
    tan_half = math.tan(math.radians(settings.vertical_fov_deg) / 2.0)
    eps = 1e-6 * (1.0 + scene.extent)
    bands = _bands(settings.height, rows)
    base = bands[0][0] if bands else 0
    n_rows = (bands[-1][1] - base) if bands else 0
    rgb = np.zeros((n_rows, settings.width, 3))
    hits = np.zeros((n_rows, settings.width), np.int32)
    key = np.uint64(frame_key)

    def work(band):
        y0, y1 = band
        render_rows(y0, y1, settings.width, settings.height, settings.spp, settings.max_depth,
                    settings.pixel_jitter, cam, tan_half, settings.aperture,
                    settings.focus_distance, key, eps, ts.v0, ts.e1, ts.e2, normals, labels,
                    albedo, spec, rough, env, *accel, use_bvh,
                    rgb[y0 - base:y1 - base], hits[y0 - base:y1 - base])

    _run_bands(work, bands, workers)
    return rgb, hits


def render_rgb(scene: Scene, pose: CameraPose, settings: RenderSettings, master_seed: int,
               frame_index: int, *, workers: int = 1, accelerate: bool = True,
               rows: tuple[int, int] | None = None) -> np.ndarray:
    """Linear RGB of shape (H, W, 3), or only rows ``[y0, y1)`` when ``rows`` is given."""
    key = stream_key(master_seed, frame_index, "pixels")
    return _render(scene, pose, settings, key, workers, accelerate, rows)[0]


def primary_hit_mask(scene: Scene, pose: CameraPose, settings: RenderSettings,
                     master_seed: int = 0, frame_index: int = 0, *, workers: int = 1,
                     accelerate: bool = True) -> np.ndarray:
    """Which pixels' center ray hits geometry, taken from a 1-spp unjittered RGB pass."""
    centered = RenderSettings(settings.width, settings.height, 1, settings.max_depth,
                              settings.aperture, settings.focus_distance,
                              settings.vertical_fov_deg, pixel_jitter=False)
    key = stream_key(master_seed, frame_index, "pixels")
    return _render(scene, pose, centered, key, workers, accelerate, None)[1] > 0


def render_labels(scene: Scene, pose: CameraPose, settings: RenderSettings, *,
                  workers: int = 1, accelerate: bool = True) -> np.ndarray:
    """Class id per pixel from one pinhole ray through each pixel center."""
    ts = scene.triangle_set
    accel, use_bvh = _accel_arrays(scene, accelerate)
    labels = np.ascontiguousarray(scene.labels, dtype=np.int64)
    cam = _camera_array(pose)
    tan_half = math.tan(math.radians(settings.vertical_fov_deg) / 2.0)
    out = np.zeros((settings.height, settings.width), np.uint8)

    def work(band):
        y0, y1 = band
        label_rows(y0, y1, settings.width, settings.height, cam, tan_half, ts.v0, ts.e1,
                   ts.e2, labels, *accel, use_bvh, out[y0:y1])

    _run_bands(work, _bands(settings.height, None), workers)
    return out


def tonemap_srgb(rgb: np.ndarray) -> tuple[np.ndarray, int]:
    """Clamp, apply the sRGB transfer curve and quantize to 8 bits.

    Non-finite pixels become 0; their count is returned alongside the image.
    """
    x = np.asarray(rgb, dtype=np.float64)
    bad = ~np.isfinite(x)
    n_bad = int(np.count_nonzero(np.any(bad, axis=-1))) if x.ndim == 3 else int(bad.sum())
    x = np.where(bad, 0.0, x).clip(0.0, 1.0)
    srgb = np.where(x <= 0.0031308, 12.92 * x, 1.055 * np.power(x, 1.0 / 2.4) - 0.055)
    return np.floor(srgb * 255.0 + 0.5).astype(np.uint8), n_bad
