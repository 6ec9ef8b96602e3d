import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orchard.errors import AssemblyError
from orchard.scene import (EnvironmentMap, LabeledMesh, SemanticClass, assemble, env_radiance,
                           procedural_sky, texel_direction)

from conftest import random_mesh


def test_recentering():
    tri = np.array([[[10, 10, 10], [11, 10, 10], [10, 12, 10.5]]], dtype=float)
    scene = assemble([LabeledMesh(tri, [1])])
    lo, hi = scene.bounds
    np.testing.assert_allclose((lo + hi) / 2, 0.0, atol=1e-12)


def test_concatenation_preserves_classes(rng):
    a = LabeledMesh(rng.normal(size=(32, 3, 3)), np.full(32, 1))
    b = LabeledMesh(rng.normal(size=(20, 3, 3)), np.full(20, 4))
    scene = assemble([a, b])
    assert len(scene) == 52
    assert scene.labels.tolist() == [1] * 32 + [4] * 20


@given(st.lists(st.integers(1, 30), min_size=1, max_size=5), st.integers(0, 1000))
def test_class_multiset_preserved(sizes, seed):
    rng = np.random.default_rng(seed)
    meshes = [random_mesh(rng, n) for n in sizes]
    expected = Counter(int(c) for m in meshes for c in m.labels)
    assert Counter(assemble(meshes).labels.tolist()) == expected


def test_empty_geometry_rejected():
    with pytest.raises(AssemblyError):
        assemble([])
    with pytest.raises(AssemblyError):
        assemble([LabeledMesh.empty()])


def test_scene_is_immutable(rng):
    scene = assemble([random_mesh(rng, 5)])
    with pytest.raises(ValueError):
        scene.triangles[0, 0, 0] = 1.0
    with pytest.raises(AttributeError):
        scene.environment = None


def test_constant_sky():
    env = procedural_sky((1, 1, 1), (1, 1, 1), (1, 1, 1), sun_intensity=0.0)
    np.testing.assert_array_equal(env.radiance, 1.0)


def test_sun_at_zenith():
    base = procedural_sky((0.2, 0.3, 0.4), (0.5, 0.5, 0.5), (0.1, 0.1, 0.1), (0, 0, 1), 0.0, 10.0)
    sun = procedural_sky((0.2, 0.3, 0.4), (0.5, 0.5, 0.5), (0.1, 0.1, 0.1), (0, 0, 1), 7.0, 10.0)
    np.testing.assert_allclose(env_radiance(sun, (0, 0, 1)), env_radiance(base, (0, 0, 1)) + 7.0)


def test_gradient_monotone_in_elevation():
    env = procedural_sky((0.9, 0.8, 0.7), (0.5, 0.5, 0.5), (0.1, 0.2, 0.3), sun_intensity=0.0,
                         width=16, height=64)
    rows = env.radiance[:, 0, :]
    # Row 0 is the zenith: radiance falls monotonically towards the ground.
    assert np.all(np.diff(rows, axis=0) <= 1e-15)
    assert np.all(env.radiance == env.radiance[:, :1, :])


def test_constant_map_lookup():
    env = EnvironmentMap.constant((0.3, 0.2, 0.1))
    for d in [(1, 0, 0), (0, 0, -1), (0, -1, 0), (0.6, 0.0, 0.8)]:
        np.testing.assert_array_equal(env_radiance(env, d), (0.3, 0.2, 0.1))


def test_zenith_is_row_zero():
    rad = np.zeros((4, 8, 3))
    rad[0] = 5.0
    assert env_radiance(EnvironmentMap(rad), (0, 0, 1))[0] == 5.0


def test_texel_centers_fetch_own_texel():
    rad = np.arange(4 * 2 * 3, dtype=float).reshape(2, 4, 3)
    env = EnvironmentMap(rad)
    for row in range(2):
        for col in range(4):
            d = texel_direction(4, 2, row, col)
            np.testing.assert_array_equal(env_radiance(env, d), rad[row, col])


@given(st.floats(0, math.pi), st.floats(-math.pi, math.pi))
def test_lookup_total(theta, phi):
    env = procedural_sky(width=32, height=16)
    d = (math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))
    v = env_radiance(env, d)
    assert v.shape == (3,) and np.all(np.isfinite(v))


@pytest.mark.parametrize("d", [(0, 0, 1), (0, 0, -1), (-1, 0, 0), (-1, -0.0, 0), (-1, 1e-300, 0)])
def test_lookup_poles_and_seam(d):
    env = procedural_sky(width=32, height=16)
    assert np.all(np.isfinite(env_radiance(env, d)))


def test_environment_rejects_negative():
    with pytest.raises(ValueError):
        EnvironmentMap(-np.ones((2, 2, 3)))
    with pytest.raises(ValueError):
        EnvironmentMap(np.full((2, 2, 3), np.nan))


def test_semantic_class_values_stable():
    assert [(c.name, int(c)) for c in SemanticClass] == [
        ("BACKGROUND", 0), ("TRUNK", 1), ("BRANCH", 2), ("LEAF", 3), ("FRUIT", 4)]
