"""Frame loop: resolve, render, write image pairs, and certify with a manifest.

Output layout::

    <out>/rgb/frame_000000.png      8-bit sRGB truecolor
    <out>/labels/frame_000000.png   8-bit grayscale, pixel value = class id
    <out>/manifest.json             written last, atomically
"""
from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import __version__
from .camera import (CameraSampler, default_sampler, make_pose, trajectory, translate_pose,
                     translate_region)
from .errors import OrchardError
from .hdr import load_hdr_file
from .randomizer import derive_stream, resolve_frame, stream_key
from .recipe import CameraMode, HDREnvironment, Recipe, resolve_asset, to_dict
from .render import RenderSettings, render_labels, render_rgb, tonemap_srgb
from .scatter import instantiate_attachments, scatter_attachments
from .scene import LABEL_PALETTE, EnvironmentMap, Scene, SemanticClass, assemble, procedural_sky
from .treegen import generate_skeleton, tube_mesh

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
WALL_TIME_KEYS = ("render_wall_time_s", "total_wall_time_s")


class DatasetError(OrchardError):
    pass


@dataclass
class Violation:
    kind: str  # missing-file, missing-manifest, record-count, dimensions, label-range, config
    message: str
    path: str | None = None

    def __str__(self):
        return f"[{self.kind}] {self.message}"


@dataclass
class Model:
    index: int
    tree_seed: int
    scene: Scene
    sampler: CameraSampler
    n_attachments: dict = field(default_factory=dict)


def rgb_path(frame_index: int) -> str:
    return f"rgb/frame_{frame_index:06d}.png"


def label_path(frame_index: int) -> str:
    return f"labels/frame_{frame_index:06d}.png"


def write_rgb_png(grid: np.ndarray, path) -> None:
    grid = np.asarray(grid)
    if grid.dtype != np.uint8 or grid.ndim != 3 or grid.shape[2] != 3:
        raise ValueError("RGB grid must be uint8 of shape (H, W, 3)")
    try:
        Image.fromarray(grid).save(path, format="PNG")
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc}") from exc


def write_label_png(grid: np.ndarray, path) -> None:
    grid = np.asarray(grid)
    if grid.ndim != 2 or grid.size and grid.max() >= len(SemanticClass):
        raise ValueError("label grid must be 2-D with values in the class range")
    try:
        Image.fromarray(grid.astype(np.uint8)).save(path, format="PNG")
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc}") from exc


def read_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im)


def label_palette() -> list[dict]:
    return [{"id": int(c), "name": c.name, "color": list(LABEL_PALETTE[c])} for c in SemanticClass]


def load_environment(env, base_dir=None) -> EnvironmentMap:
    if isinstance(env, HDREnvironment):
        path = resolve_asset(env.path, base_dir)
        if path is None:
            raise DatasetError(f"environment {env.id!r}: HDR file {env.path!r} not found")
        try:
            return load_hdr_file(path)
        except OrchardError as exc:
            raise DatasetError(f"environment {env.id!r}: {exc}") from exc
    return procedural_sky(env.zenith_rgb, env.horizon_rgb, env.ground_rgb, env.sun_direction,
                          env.sun_intensity, env.sun_angular_radius_deg, env.width, env.height)


def model_index(recipe: Recipe, frame_index: int) -> int:
    """Frames are split into ``models_per_dataset`` contiguous blocks, one model each."""
    return frame_index * recipe.models_per_dataset // recipe.frames


def build_model(recipe: Recipe, index: int, env: EnvironmentMap) -> Model:
    seed = stream_key(recipe.master_seed, index, "tree")
    skeleton = generate_skeleton(recipe.tree, seed)
    attachments = scatter_attachments(skeleton, recipe.scatter,
                                      derive_stream(recipe.master_seed, index, "scatter"))
    meshes = [tube_mesh(skeleton, recipe.tree.sides),
              instantiate_attachments(attachments, recipe.scatter.fruit_subdivision)]
    scene = assemble(meshes, recipe.material_table(), env)
    cam = recipe.camera
    if cam.external is not None:
        # Recipe cylinders are in model coordinates; the scene was recentered.
        sampler = CameraSampler(translate_region(cam.external, scene.offset),
                                translate_region(cam.internal, scene.offset))
    else:
        sampler = default_sampler(*scene.bounds)
    counts = {"fruit": sum(a.kind == "FRUIT" for a in attachments),
              "leaf": sum(a.kind == "LEAF" for a in attachments)}
    return Model(index, seed, scene, sampler, counts)


def _with_environment(scene: Scene, env: EnvironmentMap) -> Scene:
    if scene.environment is env:
        return scene
    clone = Scene(scene.triangles, scene.labels, scene.materials, env, scene.bounds, scene.offset)
    # Share cached acceleration data; geometry is identical.
    for name in ("bvh", "triangle_set", "normals"):
        if name in scene.__dict__:
            clone.__dict__[name] = scene.__dict__[name]
    return clone


def _pose_record(pose) -> dict:
    return {"origin": list(pose.origin), "target": list(pose.target), "right": list(pose.right),
            "up": list(pose.up), "forward": list(pose.forward),
            "vertical_fov_deg": pose.vertical_fov_deg}


def generate_dataset(recipe: Recipe, out_dir, *, workers: int = 1, base_dir=None,
                     progress=None) -> dict:
    """Render every frame of ``recipe`` into ``out_dir`` and return the manifest.

    Any failure before the last frame leaves images on disk but no manifest.
    """
    out = Path(out_dir)
    try:
        (out / "rgb").mkdir(parents=True, exist_ok=True)
        (out / "labels").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DatasetError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise DatasetError(f"output directory {out} is not writable")

    pool = recipe.randomization.env_pool
    envs = {eid: load_environment(recipe.environment_by_id(eid), base_dir) for eid in dict.fromkeys(pool)}

    t_start = time.perf_counter()
    models: dict[int, Model] = {}
    records = []
    fov = recipe.camera.fov_deg
    poses = None
    if recipe.camera.mode is CameraMode.TRAJECTORY:
        start, end = recipe.camera.start, recipe.camera.end
        poses = trajectory(make_pose(start.origin, start.target, fov),
                           make_pose(end.origin, end.target, fov), max(recipe.frames, 2))

    for i in range(recipe.frames):
        m = model_index(recipe, i)
        if m not in models:
            models.clear()  # one live model at a time keeps memory flat
            models[m] = build_model(recipe, m, envs[pool[0]])
            log.info("model %d: %d triangles", m, len(models[m].scene))
        model = models[m]
        offset = model.scene.offset
        cfg = resolve_frame(recipe.randomization, model.sampler, recipe.master_seed, i, fov,
                            pose=None if poses is None else translate_pose(poses[i], offset))
        # Manifest poses are in model coordinates (trunk base at the origin).
        model_pose = poses[i] if poses is not None else translate_pose(cfg.camera, -offset)
        scene = _with_environment(model.scene, envs[cfg.env_id])
        settings = RenderSettings(recipe.image.width, recipe.image.height, cfg.spp,
                                  recipe.render.max_depth, cfg.aperture, cfg.focus_distance, fov)
        t0 = time.perf_counter()
        rgb = render_rgb(scene, cfg.camera, settings, recipe.master_seed, i, workers=workers)
        labels = render_labels(scene, cfg.camera, settings, workers=workers)
        wall = time.perf_counter() - t0
        srgb, warnings = tonemap_srgb(rgb)
        if warnings:
            log.warning("frame %d: %d non-finite pixels set to 0", i, warnings)
        write_rgb_png(srgb, out / rgb_path(i))
        write_label_png(labels, out / label_path(i))
        records.append({
            "frame_index": i,
            "rgb_path": rgb_path(i),
            "label_path": label_path(i),
            "model_index": m,
            "tree_seed": model.tree_seed,
            "camera": _pose_record(model_pose),
            "env_id": cfg.env_id,
            "spp": cfg.spp,
            "aperture": cfg.aperture,
            "focus_distance": cfg.focus_distance,
            "stream_tag": cfg.stream_tag,
            "render_wall_time_s": wall,
            "warning_count": warnings,
        })
        if progress is not None:
            progress(i, recipe.frames)

    manifest = {
        "format_version": FORMAT_VERSION,
        "tool_version": __version__,
        "master_seed": recipe.master_seed,
        "recipe": to_dict(recipe),
        "label_palette": label_palette(),
        "frames": records,
        "total_wall_time_s": time.perf_counter() - t_start,
    }
    tmp = out / (MANIFEST_NAME + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=2))
    os.replace(tmp, out / MANIFEST_NAME)
    return manifest


def load_manifest(directory) -> dict:
    return json.loads((Path(directory) / MANIFEST_NAME).read_text())


def strip_wall_times(manifest):
    """Copy of a manifest without timing fields, for reproducibility comparisons."""
    if isinstance(manifest, dict):
        return {k: strip_wall_times(v) for k, v in manifest.items() if k not in WALL_TIME_KEYS}
    if isinstance(manifest, list):
        return [strip_wall_times(v) for v in manifest]
    return manifest


def validate_manifest(manifest: dict, directory) -> list[Violation]:
    directory = Path(directory)
    out: list[Violation] = []
    recipe = manifest.get("recipe", {})
    image = recipe.get("image", {})
    width, height = image.get("width", 512), image.get("height", 512)
    rnd = recipe.get("randomization", {})
    frames = manifest.get("frames", [])

    expected = recipe.get("frames")
    if expected is not None and len(frames) != expected:
        out.append(Violation("record-count", f"{len(frames)} frame records, recipe asks for {expected}"))
    palette_ids = [p.get("id") for p in manifest.get("label_palette", [])]
    if palette_ids != [int(c) for c in SemanticClass]:
        out.append(Violation("palette", f"label palette ids {palette_ids} do not match class ids"))

    for rec in frames:
        idx = rec.get("frame_index")
        lo, hi = rnd.get("spp_range", [1, 1 << 30])
        if not lo <= rec.get("spp", 0) <= hi:
            out.append(Violation("config", f"frame {idx}: spp {rec.get('spp')} outside {[lo, hi]}"))
        lo, hi = rnd.get("aperture_range", [0.0, float("inf")])
        if not lo <= rec.get("aperture", -1.0) <= hi:
            out.append(Violation("config", f"frame {idx}: aperture outside {[lo, hi]}"))
        pool = rnd.get("env_pool")
        if pool is not None and rec.get("env_id") not in pool:
            out.append(Violation("config", f"frame {idx}: env_id {rec.get('env_id')!r} not in pool"))

        shapes = {}
        for key, want_ndim in (("rgb_path", 3), ("label_path", 2)):
            rel = rec.get(key)
            path = directory / rel if rel else None
            if path is None or not path.is_file():
                out.append(Violation("missing-file", f"frame {idx}: {key} {rel} is missing", str(path)))
                continue
            try:
                img = read_png(path)
            except OSError as exc:
                out.append(Violation("unreadable", f"frame {idx}: {rel}: {exc}", str(path)))
                continue
            shapes[key] = img.shape[:2]
            if img.ndim != want_ndim or img.shape[:2] != (height, width):
                out.append(Violation("dimensions", f"frame {idx}: {rel} has shape {img.shape}, "
                                                   f"expected {height}x{width}", str(path)))
            if key == "label_path":
                bad = np.setdiff1d(np.unique(img), [int(c) for c in SemanticClass])
                if bad.size:
                    out.append(Violation("label-range",
                                         f"frame {idx}: label values {bad.tolist()} are not class ids",
                                         str(path)))
        if len(shapes) == 2 and shapes["rgb_path"] != shapes["label_path"]:
            out.append(Violation("dimensions", f"frame {idx}: rgb and label sizes differ"))
    return out


def validate_dataset(directory) -> list[Violation]:
    path = Path(directory) / MANIFEST_NAME
    if not path.is_file():
        return [Violation("missing-manifest", f"{path} not found", str(path))]
    try:
        manifest = load_manifest(directory)
    except (OSError, json.JSONDecodeError) as exc:
        return [Violation("unreadable", f"{path}: {exc}", str(path))]
    return validate_manifest(manifest, directory)
