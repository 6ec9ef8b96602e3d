"""Time BVH against brute-force traversal on the default tree at a few resolutions."""
import argparse
import time

from orchard.dataset import build_model, load_environment
from orchard.randomizer import resolve_frame
from orchard.recipe import Recipe
from orchard.render import RenderSettings, render_rgb


def timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 64])
    ap.add_argument("--spp", type=int, default=4)
    args = ap.parse_args()

    recipe = Recipe()
    model, t_build = timed(lambda: build_model(recipe, 0, load_environment(recipe.environment[0])))
    _, t_bvh_build = timed(lambda: model.scene.bvh)
    print(f"{len(model.scene)} triangles; mesh {t_build:.2f} s, BVH {t_bvh_build:.2f} s")
    cfg = resolve_frame(recipe.randomization, model.sampler, recipe.master_seed, 0)

    # Compile both kernels first.
    tiny = RenderSettings(4, 4, 1)
    for accel in (True, False):
        render_rgb(model.scene, cfg.camera, tiny, 0, 0, accelerate=accel)

    print(f"{'size':>6} {'bvh s':>8} {'brute s':>9} {'ratio':>7} identical")
    for n in args.sizes:
        s = RenderSettings(n, n, args.spp)
        a, ta = timed(lambda: render_rgb(model.scene, cfg.camera, s, 0, 0))
        b, tb = timed(lambda: render_rgb(model.scene, cfg.camera, s, 0, 0, accelerate=False))
        print(f"{n:>6} {ta:>8.3f} {tb:>9.2f} {tb / ta:>7.0f} {a.tobytes() == b.tobytes()}")


if __name__ == "__main__":
    main()
