import numpy as np
import pytest
from hypothesis import settings

from orchard.scatter import icosphere
from orchard.scene import LabeledMesh, SemanticClass, assemble, EnvironmentMap, Material

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def sphere_mesh(radius=1.0, center=(0.0, 0.0, 0.0), subdivision=3, label=SemanticClass.FRUIT):
    tris = np.asarray(center) + radius * icosphere(subdivision)
    return LabeledMesh(tris, np.full(len(tris), label, dtype=np.uint8))


def random_mesh(rng, n, spread=1.0, size=0.2):
    """n random triangles scattered in a cube, random labels 1..4."""
    centers = rng.uniform(-spread, spread, (n, 1, 3))
    tris = centers + rng.normal(0.0, size, (n, 3, 3))
    return LabeledMesh(tris, rng.integers(1, 5, n).astype(np.uint8))


def numpy_nearest(origins, dirs, tris, t_min=0.0, t_max=np.inf, chunk=128):
    """All-pairs Moller-Trumbore in numpy; ties go to the lowest index.

    Same operation order as the kernel, so hits agree bit for bit.
    """
    v0 = tris[:, 0]
    e1 = tris[:, 1] - v0
    e2 = tris[:, 2] - v0
    ts = np.full(len(origins), np.inf)
    idx = np.full(len(origins), -1)
    for lo in range(0, len(origins), chunk):
        o = origins[lo:lo + chunk, None, :]
        d = dirs[lo:lo + chunk, None, :]
        px = d[..., 1] * e2[:, 2] - d[..., 2] * e2[:, 1]
        py = d[..., 2] * e2[:, 0] - d[..., 0] * e2[:, 2]
        pz = d[..., 0] * e2[:, 1] - d[..., 1] * e2[:, 0]
        det = e1[:, 0] * px + e1[:, 1] * py + e1[:, 2] * pz
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / det
            tv = o - v0
            tx, ty, tz = tv[..., 0], tv[..., 1], tv[..., 2]
            u = (tx * px + ty * py + tz * pz) * inv
            qx = ty * e1[:, 2] - tz * e1[:, 1]
            qy = tz * e1[:, 0] - tx * e1[:, 2]
            qz = tx * e1[:, 1] - ty * e1[:, 0]
            v = (d[..., 0] * qx + d[..., 1] * qy + d[..., 2] * qz) * inv
            t = (e2[:, 0] * qx + e2[:, 1] * qy + e2[:, 2] * qz) * inv
        ok = (det != 0) & (u >= 0) & (u <= 1) & (v >= 0) & (u + v <= 1) & (t > t_min) & (t < t_max)
        t = np.where(ok, t, np.inf)
        best = t.min(axis=1)
        first = np.argmax(t == best[:, None], axis=1)  # lowest index among equal minima
        hit = np.isfinite(best)
        ts[lo:lo + chunk] = best
        idx[lo:lo + chunk] = np.where(hit, first, -1)
    return ts, idx


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def white_sphere_scene():
    mats = {c: Material((1.0, 1.0, 1.0), 0.0, 1.0) for c in SemanticClass}
    return assemble([sphere_mesh(1.0, subdivision=3)], mats, EnvironmentMap.constant(1.0))
