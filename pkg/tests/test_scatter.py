import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from orchard.scatter import (AttachmentKind, ScatterParams, eligible_length, icosphere,
                             instantiate_attachments, scatter_attachments, Attachment, HANGING)
from orchard.scene import SemanticClass
from orchard.treegen import TreeParams, generate_skeleton

STRAIGHT = TreeParams(levels=1, trunk_length=10.0, curvature_deg=0.0, segments_per_branch=4)


def polyline_distance(p, poly):
    best = np.inf
    for a, b in zip(poly[:-1], poly[1:]):
        ab = b - a
        t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0, 1)
        best = min(best, np.linalg.norm(p - (a + t * ab)))
    return best


def test_zero_density_empty():
    sk = generate_skeleton(TreeParams(), 1)
    out = scatter_attachments(sk, ScatterParams(fruit_density=0, leaf_density=0), np.random.default_rng(0))
    assert out == []


def test_poisson_mean_fruit_count():
    sk = generate_skeleton(STRAIGHT, 0)
    params = ScatterParams(fruit_density=2.0, leaf_density=0.0, eligible_min_level=0)
    assert eligible_length(sk, 0) == pytest.approx(10.0)
    counts = [len(scatter_attachments(sk, params, np.random.default_rng(s))) for s in range(2000)]
    assert abs(np.mean(counts) - 20.0) <= 3 * np.sqrt(20) / np.sqrt(2000)


def test_positions_uniform_on_straight_branch():
    sk = generate_skeleton(STRAIGHT, 0)
    params = ScatterParams(fruit_density=0.0, leaf_density=1000.0, eligible_min_level=0)
    ts = np.array([a.t for a in scatter_attachments(sk, params, np.random.default_rng(3))])
    assert len(ts) > 9000
    ts = ts[:10_000]
    assert stats.kstest(ts, "uniform").statistic < 0.0163


@given(st.integers(0, 2**32))
def test_anchors_on_axis_and_eligibility(seed):
    sk = generate_skeleton(TreeParams(levels=3), seed)
    params = ScatterParams(fruit_density=3.0, leaf_density=5.0, eligible_min_level=1)
    out = scatter_attachments(sk, params, np.random.default_rng(seed))
    for a in out:
        b = sk.branches[a.branch_id]
        assert b.level >= 1
        assert a.scale > 0
        assert polyline_distance(np.array(a.anchor), b.polyline()) <= 1e-9
        np.testing.assert_allclose(a.anchor, b.point_at(a.t), atol=1e-12)
        assert np.linalg.norm(a.orientation) == pytest.approx(1.0)


def test_same_stream_state_same_output():
    sk = generate_skeleton(TreeParams(), 2)
    p = ScatterParams()
    assert scatter_attachments(sk, p, np.random.default_rng(8)) == scatter_attachments(sk, p, np.random.default_rng(8))


def test_icosphere_counts_and_winding():
    for s in range(4):
        tris = icosphere(s)
        assert len(tris) == 20 * 4 ** s
        n = np.cross(tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0])
        assert np.all(np.einsum("ij,ij->i", n, tris.mean(axis=1)) > 0)


def test_single_fruit_mesh():
    a = Attachment(AttachmentKind.FRUIT, 0, 0.5, (1.0, 2.0, 3.0), HANGING, 0.05, 0.02)
    mesh = instantiate_attachments([a], 0)
    assert len(mesh) == 20
    assert set(mesh.labels.tolist()) == {SemanticClass.FRUIT}


def test_fruit_subdivided_on_sphere():
    a = Attachment(AttachmentKind.FRUIT, 0, 0.5, (1.0, 2.0, 3.0), HANGING, 0.05, 0.02)
    mesh = instantiate_attachments([a], 2)
    assert len(mesh) == 320
    center = np.array([1.0, 2.0, 3.0 - 0.02 - 0.05])  # hangs below the anchor
    r = np.linalg.norm(mesh.triangles.reshape(-1, 3) - center, axis=1)
    np.testing.assert_allclose(r, 0.05, atol=1e-6)


def test_single_leaf_card():
    q = np.array([0.3, -0.2, 0.5, 0.7])
    a = Attachment(AttachmentKind.LEAF, 0, 0.1, (0.0, 0.0, 1.0), tuple(q / np.linalg.norm(q)), 0.1)
    mesh = instantiate_attachments([a])
    assert len(mesh) == 2
    assert mesh.labels.tolist() == [SemanticClass.LEAF] * 2
    n = np.cross(mesh.triangles[:, 1] - mesh.triangles[:, 0], mesh.triangles[:, 2] - mesh.triangles[:, 0])
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    assert abs(np.dot(n[0], n[1])) == pytest.approx(1.0)


def test_label_purity():
    sk = generate_skeleton(TreeParams(), 5)
    mesh = instantiate_attachments(scatter_attachments(sk, ScatterParams(), np.random.default_rng(5)))
    assert set(mesh.labels.tolist()) <= {SemanticClass.FRUIT, SemanticClass.LEAF}


@pytest.mark.parametrize("field, value", [("fruit_density", -1.0), ("leaf_size_mean", 0.0),
                                          ("fruit_radius_jitter", 1.0)])
def test_invalid(field, value):
    with pytest.raises(ValueError):
        ScatterParams(**{field: value})
