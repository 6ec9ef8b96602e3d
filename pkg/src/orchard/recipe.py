"""Declarative JSON recipe: parsing with defaults, strict key checking, serialization.

Example (every key optional except as noted; omitted keys take defaults)::

    {
      "master_seed": 7,
      "frames": 10,
      "image": {"width": 512, "height": 512},
      "render": {"max_depth": 4},
      "tree": {"levels": 4, "length_ratio": 0.5, "down_angle_deg": 50},
      "scatter": {"fruit_density": 1.5, "leaf_density": 40},
      "camera": {"fov_deg": 60, "mode": "random"},
      "randomization": {"spp_range": [16, 64], "env_change_period": 3},
      "environment": [
        {"id": "sky", "kind": "procedural_sky", "sun_intensity": 40},
        {"id": "park", "kind": "hdr", "path": "park_2k.hdr"}
      ],
      "materials": {"fruit": {"albedo": [0.7, 0.1, 0.05]}},
      "models_per_dataset": 1
    }

Relative HDR paths are searched under ``$ORCHARD_ASSET_DIR``, then next to the
recipe file, then in the working directory.
"""
from __future__ import annotations

import dataclasses
import enum
import json
import os
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

from .camera import CylinderRegion
from .errors import ParameterError, RecipeError
from .randomizer import RandomizationSpec
from .scatter import ScatterParams
from .scene import Material, SemanticClass
from .treegen import TreeParams

ASSET_DIR_ENV = "ORCHARD_ASSET_DIR"


class CameraMode(str, enum.Enum):
    RANDOM = "random"
    TRAJECTORY = "trajectory"


@dataclass(frozen=True)
class ImageSize:
    width: int = 512
    height: int = 512

    def __post_init__(self):
        if self.width < 1:
            raise ParameterError("width", "must be >= 1")
        if self.height < 1:
            raise ParameterError("height", "must be >= 1")


@dataclass(frozen=True)
class RenderOptions:
    max_depth: int = 4

    def __post_init__(self):
        if self.max_depth < 1:
            raise ParameterError("max_depth", "must be >= 1")


@dataclass(frozen=True)
class Endpoint:
    origin: tuple[float, float, float]
    target: tuple[float, float, float]

    def __post_init__(self):
        if tuple(self.origin) == tuple(self.target):
            raise ParameterError("target", "must differ from origin")


@dataclass(frozen=True)
class CameraConfig:
    """Cylinders left as null are sized from the model's bounding box."""

    fov_deg: float = 60.0
    mode: CameraMode = CameraMode.RANDOM
    external: CylinderRegion | None = None
    internal: CylinderRegion | None = None
    start: Endpoint | None = None
    end: Endpoint | None = None

    def __post_init__(self):
        if not 0 < self.fov_deg < 180:
            raise ParameterError("fov_deg", "must be in (0, 180)")
        if (self.external is None) != (self.internal is None):
            raise ParameterError("internal", "give both cylinders or neither")
        if self.external is not None and self.internal.outer_radius > self.external.inner_radius:
            raise ParameterError("internal.outer_radius", "must be <= external.inner_radius")
        if self.mode is CameraMode.TRAJECTORY and (self.start is None or self.end is None):
            raise ParameterError("start", "trajectory mode needs start and end endpoints")


@dataclass(frozen=True)
class SkyEnvironment:
    id: str = "sky"
    kind: str = "procedural_sky"
    zenith_rgb: tuple[float, float, float] = (0.35, 0.55, 0.95)
    horizon_rgb: tuple[float, float, float] = (0.85, 0.9, 1.0)
    ground_rgb: tuple[float, float, float] = (0.3, 0.26, 0.2)
    sun_direction: tuple[float, float, float] = (0.3, 0.2, 0.93)
    sun_intensity: float = 50.0
    sun_angular_radius_deg: float = 2.0
    width: int = 256
    height: int = 128

    def __post_init__(self):
        for name in ("zenith_rgb", "horizon_rgb", "ground_rgb"):
            if min(getattr(self, name)) < 0:
                raise ParameterError(name, "must be non-negative")
        if self.sun_intensity < 0:
            raise ParameterError("sun_intensity", "must be >= 0")
        if not any(self.sun_direction):
            raise ParameterError("sun_direction", "must be non-zero")


@dataclass(frozen=True)
class HDREnvironment:
    id: str
    path: str
    kind: str = "hdr"


Environment = typing.Union[SkyEnvironment, HDREnvironment]


@dataclass(frozen=True)
class Recipe:
    master_seed: int = 0
    frames: int = 1
    image: ImageSize = field(default_factory=ImageSize)
    render: RenderOptions = field(default_factory=RenderOptions)
    tree: TreeParams = field(default_factory=TreeParams)
    scatter: ScatterParams = field(default_factory=ScatterParams)
    camera: CameraConfig = field(default_factory=CameraConfig)
    randomization: RandomizationSpec = field(default_factory=RandomizationSpec)
    environment: tuple[Environment, ...] = (SkyEnvironment(),)
    materials: dict = field(default_factory=dict)  # class name -> Material
    models_per_dataset: int = 1

    def __post_init__(self):
        if not 0 <= self.master_seed < 2 ** 64:
            raise ParameterError("master_seed", "must be a 64-bit unsigned integer")
        if self.frames < 1:
            raise ParameterError("frames", "must be >= 1")
        if not 1 <= self.models_per_dataset <= self.frames:
            raise ParameterError("models_per_dataset", "must be in [1, frames]")
        ids = [e.id for e in self.environment]
        if not ids:
            raise ParameterError("environment", "at least one environment is required")
        if len(set(ids)) != len(ids):
            raise ParameterError("environment", f"duplicate ids in {ids}")
        missing = [e for e in self.randomization.env_pool if e not in ids]
        if missing:
            raise ParameterError("randomization.env_pool", f"unknown environment ids {missing}")
        for name in self.materials:
            if name.upper() not in SemanticClass.__members__:
                raise ParameterError("materials", f"unknown class {name!r}")

    def environment_by_id(self, env_id: str) -> Environment:
        return next(e for e in self.environment if e.id == env_id)

    def material_table(self) -> dict[SemanticClass, Material]:
        return {SemanticClass[k.upper()]: v for k, v in self.materials.items()}


# ---- generic dataclass <-> JSON plumbing ----

def _is_optional(tp) -> tuple[bool, typing.Any]:
    args = typing.get_args(tp)
    if typing.get_origin(tp) in (typing.Union, types.UnionType) and type(None) in args:
        rest = [a for a in args if a is not type(None)]
        return True, rest[0] if len(rest) == 1 else typing.Union[tuple(rest)]
    return False, tp


def _convert(tp, value, where: str):
    optional, tp = _is_optional(tp)
    if value is None:
        if optional:
            return None
        raise RecipeError(f"{where}: null is not allowed", field=where)
    origin = typing.get_origin(tp)
    if tp is Environment:
        return _environment(value, where)
    if dataclasses.is_dataclass(tp):
        return _from_dict(tp, value, where)
    if isinstance(tp, type) and issubclass(tp, enum.Enum):
        try:
            return tp(value.lower() if isinstance(value, str) and tp is CameraMode else value)
        except ValueError:
            allowed = [m.value for m in tp]
            raise RecipeError(f"{where}: {value!r} is not one of {allowed}", field=where) from None
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise RecipeError(f"{where}: expected a list", field=where)
        args = typing.get_args(tp)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_convert(args[0], v, f"{where}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise RecipeError(f"{where}: expected {len(args)} values, got {len(value)}", field=where)
        return tuple(_convert(a, v, f"{where}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if tp is bool:
        if not isinstance(value, bool):
            raise RecipeError(f"{where}: expected true/false", field=where)
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise RecipeError(f"{where}: expected an integer", field=where)
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise RecipeError(f"{where}: expected a number", field=where)
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise RecipeError(f"{where}: expected a string", field=where)
        return value
    if tp is dict or origin is dict:
        if not isinstance(value, dict):
            raise RecipeError(f"{where}: expected an object", field=where)
        return {k: _from_dict(Material, v, f"{where}.{k}") for k, v in value.items()}
    raise TypeError(f"unsupported recipe field type {tp!r}")


def _environment(value, where):
    if not isinstance(value, dict):
        raise RecipeError(f"{where}: expected an object", field=where)
    kind = value.get("kind", "procedural_sky")
    if kind == "procedural_sky":
        return _from_dict(SkyEnvironment, value, where)
    if kind == "hdr":
        return _from_dict(HDREnvironment, value, where)
    raise RecipeError(f"{where}.kind: must be 'procedural_sky' or 'hdr', got {kind!r}",
                      field=f"{where}.kind")


def _from_dict(cls, data, where: str):
    if not isinstance(data, dict):
        raise RecipeError(f"{where or 'recipe'}: expected an object", field=where)
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        path = f"{where}.{unknown[0]}" if where else unknown[0]
        raise RecipeError(f"unknown key {path!r}", field=path)
    kwargs = {k: _convert(hints[k], v, f"{where}.{k}" if where else k) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except ParameterError as exc:
        path = f"{where}.{exc.field}" if where else exc.field
        raise RecipeError(f"{path}: {str(exc).split(': ', 1)[-1]}", field=path) from None
    except (TypeError, ValueError) as exc:
        raise RecipeError(f"{where or 'recipe'}: {exc}", field=where) from None


def to_dict(obj):
    """JSON-ready structure; inverse of parsing."""
    if dataclasses.is_dataclass(obj):
        return {f.name: to_dict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (list, tuple)):
        return [to_dict(v) for v in obj]
    if isinstance(obj, dict):
        return {k: to_dict(v) for k, v in obj.items()}
    return obj


def serialize_recipe(recipe: Recipe) -> bytes:
    return json.dumps(to_dict(recipe), indent=2).encode("utf-8")


def resolve_asset(path: str, base_dir: str | os.PathLike | None = None) -> Path | None:
    p = Path(path)
    if p.is_absolute():
        return p if p.is_file() else None
    roots = [os.environ.get(ASSET_DIR_ENV), base_dir, os.getcwd()]
    for root in roots:
        if root and (Path(root) / p).is_file():
            return Path(root) / p
    return None


def recipe_from_dict(data: dict, base_dir=None, check_assets: bool = True) -> Recipe:
    if not isinstance(data, dict):
        raise RecipeError("recipe must be a JSON object")
    data = dict(data)
    # The environment pool defaults to every declared environment.
    rnd = data.get("randomization")
    if rnd is None or (isinstance(rnd, dict) and "env_pool" not in rnd):
        envs = data.get("environment", [{"id": "sky"}])
        ids = [e.get("id", "sky") if isinstance(e, dict) else None for e in envs] \
            if isinstance(envs, list) else []
        if ids and all(isinstance(i, str) for i in ids):
            data["randomization"] = {**(rnd or {}), "env_pool": ids}
    recipe = _from_dict(Recipe, data, "")
    if check_assets:
        for env in recipe.environment:
            if isinstance(env, HDREnvironment) and resolve_asset(env.path, base_dir) is None:
                raise RecipeError(f"environment {env.id!r}: HDR file {env.path!r} not found",
                                  field="environment.path")
    return recipe


def parse_recipe(data: bytes | str, base_dir=None, check_assets: bool = True) -> Recipe:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise RecipeError(f"JSON syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                          line=exc.lineno, column=exc.colno) from None
    except UnicodeDecodeError as exc:
        raise RecipeError(f"recipe is not UTF-8: {exc}") from None
    return recipe_from_dict(doc, base_dir, check_assets)


def load_recipe(path: str | os.PathLike, check_assets: bool = True) -> Recipe:
    path = Path(path)
    return parse_recipe(path.read_bytes(), base_dir=path.parent, check_assets=check_assets)
