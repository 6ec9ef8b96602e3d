"""White furnace: a white diffuse sphere under a unit environment should render as 1 everywhere."""
import argparse
import time

import numpy as np

from orchard.camera import make_pose
from orchard.render import RenderSettings, render_rgb
from orchard.scatter import icosphere
from orchard.scene import EnvironmentMap, LabeledMesh, Material, SemanticClass, assemble


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--spp", type=int, default=256)
    ap.add_argument("--depth", type=int, default=8)
    args = ap.parse_args()

    tris = icosphere(3)
    white = {c: Material((1.0, 1.0, 1.0), 0.0, 1.0) for c in SemanticClass}
    scene = assemble([LabeledMesh(tris, np.full(len(tris), SemanticClass.FRUIT, np.uint8))],
                     white, EnvironmentMap.constant(1.0))
    pose = make_pose((0.0, -2.2, 0.3), (0.0, 0.0, 0.0))
    s = RenderSettings(args.size, args.size, args.spp, args.depth)
    t0 = time.perf_counter()
    img = render_rgb(scene, pose, s, 0, 0)
    print(f"{args.size}x{args.size} @ {args.spp} spp in {time.perf_counter() - t0:.2f} s")
    print(f"pixel range [{img.min():.6f}, {img.max():.6f}], mean {img.mean():.6f}")

    # Grey albedo: radiance drops below 1 but never above.
    grey = {c: Material((0.5, 0.5, 0.5), 0.0, 1.0) for c in SemanticClass}
    dim = render_rgb(assemble([LabeledMesh(tris, np.full(len(tris), 4, np.uint8))], grey,
                              EnvironmentMap.constant(1.0)), pose, s, 0, 0)
    print(f"albedo 0.5: min {dim.min():.4f}, max {dim.max():.4f}")


if __name__ == "__main__":
    main()
