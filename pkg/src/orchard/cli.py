"""Command line entry point: ``orchard generate | stats | validate``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .dataset import DatasetError, build_model, generate_dataset, validate_dataset
from .errors import OrchardError, RecipeError
from .randomizer import stream_key
from .recipe import load_recipe
from .scatter import eligible_length
from .scene import EnvironmentMap
from .treegen import generate_skeleton, skeleton_stats


def _load(path: str, overrides: dict | None = None):
    recipe = load_recipe(path)
    if overrides:
        fields = {k: v for k, v in overrides.items() if v is not None}
        if fields:
            try:
                recipe = dataclasses.replace(recipe, **fields)
            except (ValueError, OrchardError) as exc:
                raise RecipeError(f"override rejected: {exc}") from None
    return recipe


def cmd_generate(args) -> int:
    recipe = _load(args.recipe, {"master_seed": args.seed, "frames": args.frames})

    def progress(i, n):
        print(f"frame {i + 1}/{n}", file=sys.stderr)

    manifest = generate_dataset(recipe, args.out, workers=args.workers,
                                base_dir=Path(args.recipe).parent,
                                progress=None if args.quiet else progress)
    print(f"wrote {len(manifest['frames'])} frame pairs to {args.out}")
    return 0


def cmd_stats(args) -> int:
    recipe = _load(args.recipe)
    seed = stream_key(recipe.master_seed, 0, "tree")
    skeleton = generate_skeleton(recipe.tree, seed)
    stats = skeleton_stats(skeleton)
    length = eligible_length(skeleton, recipe.scatter.eligible_min_level)
    print(f"tree seed: {seed}")
    print(f"branches: {stats.total_branches}")
    for level, (count, total) in enumerate(zip(stats.counts, stats.lengths)):
        print(f"  level {level}: {count} branches, {total:.3f} m")
    print(f"max radius: {stats.max_radius:.4f} m")
    print(f"eligible length: {length:.3f} m")
    print(f"expected fruits: {recipe.scatter.fruit_density * length:.1f}")
    print(f"expected leaves: {recipe.scatter.leaf_density * length:.1f}")
    if args.triangles:
        model = build_model(recipe, 0, EnvironmentMap.constant(1.0))
        print(f"triangles: {len(model.scene)}")
    return 0


def cmd_validate(args) -> int:
    violations = validate_dataset(args.dataset)
    if violations:
        print(f"{len(violations)} violation(s); first: {violations[0]}", file=sys.stderr)
        for v in violations[1:]:
            print(f"  {v}", file=sys.stderr)
        return 1
    print(f"{args.dataset}: valid")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="orchard", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="render a labeled dataset from a recipe")
    g.add_argument("--recipe", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--frames", type=int, help="override recipe frames")
    g.add_argument("--seed", type=int, help="override recipe master_seed")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--quiet", action="store_true")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("stats", help="print skeleton statistics without rendering")
    s.add_argument("--recipe", required=True)
    s.add_argument("--triangles", action="store_true", help="also build the mesh and count triangles")
    s.set_defaults(func=cmd_stats)

    v = sub.add_parser("validate", help="check a generated dataset against its manifest")
    v.add_argument("--dataset", required=True)
    v.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (RecipeError, DatasetError, OrchardError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
