"""Render a small dataset and tile RGB and colorized labels into one preview PNG."""
import argparse
import dataclasses
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from orchard.dataset import generate_dataset, read_png
from orchard.recipe import Recipe, load_recipe

PALETTE = np.array([[0, 0, 0], [120, 72, 30], [200, 160, 80], [40, 170, 40], [230, 40, 30]],
                   dtype=np.uint8)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--recipe", type=Path)
    ap.add_argument("--frames", type=int, default=4)
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--out", type=Path, default=Path("preview.png"))
    args = ap.parse_args()

    recipe = load_recipe(args.recipe) if args.recipe else Recipe()
    recipe = dataclasses.replace(recipe, frames=args.frames,
                                 image=dataclasses.replace(recipe.image, width=args.size,
                                                           height=args.size))
    with tempfile.TemporaryDirectory() as tmp:
        manifest = generate_dataset(recipe, tmp, base_dir=args.recipe.parent if args.recipe else None)
        rows = []
        for rec in manifest["frames"]:
            rgb = read_png(Path(tmp) / rec["rgb_path"])
            lab = PALETTE[read_png(Path(tmp) / rec["label_path"])]
            rows.append(np.concatenate([rgb, lab], axis=1))
    Image.fromarray(np.concatenate(rows, axis=0)).save(args.out)
    print(f"wrote {args.out} ({len(rows)} frames)")


if __name__ == "__main__":
    main()
