from .bvh import BVH, build_bvh
from .rays import Hit, Ray, intersect, intersect_batch
from .tracer import (RenderSettings, primary_hit_mask, render_labels, render_rgb,
                     tonemap_srgb)

__all__ = [
    "BVH", "Hit", "Ray", "RenderSettings", "build_bvh", "intersect", "intersect_batch",
    "primary_hit_mask", "render_labels", "render_rgb", "tonemap_srgb",
]
