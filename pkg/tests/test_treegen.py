import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from orchard.errors import ParameterError
from orchard.scene import SemanticClass
from orchard.treegen import (LENGTH_JITTER, TreeParams, generate_skeleton, skeleton_stats,
                             tube_mesh)


def point_segment_distance(p, a, b):
    ab = b - a
    t = np.clip(np.dot(p - a, ab) / np.dot(ab, ab), 0.0, 1.0)
    return np.linalg.norm(p - (a + t * ab))


tree_params = st.builds(
    TreeParams,
    levels=st.integers(1, 4),
    trunk_length=st.floats(0.5, 5.0),
    length_ratio=st.floats(0.2, 1.0),
    trunk_radius=st.floats(0.02, 0.4),
    radius_ratio=st.floats(0.3, 1.0),
    children_min=st.integers(1, 3),
    children_max=st.integers(3, 4),
    down_angle_deg=st.floats(-120, 120),
    down_angle_jitter_deg=st.floats(0, 20),
    curvature_deg=st.floats(-60, 60),
    segments_per_branch=st.integers(1, 6),
    sides=st.integers(3, 10),
)


def test_single_trunk():
    p = TreeParams(levels=1, trunk_length=2.0, curvature_deg=0.0)
    sk = generate_skeleton(p, 123)
    assert len(sk.branches) == 1
    trunk = sk.branches[0]
    assert trunk.segments[0].start == (0.0, 0.0, 0.0)
    np.testing.assert_allclose(trunk.segments[-1].end, (0, 0, 2.0), atol=1e-12)


def test_single_trunk_bent_tip_within_bend():
    p = TreeParams(levels=1, trunk_length=2.0, curvature_deg=30.0, segments_per_branch=4)
    tip = np.array(generate_skeleton(p, 5).branches[0].segments[-1].end)
    # Arc of total angle <= 30 deg: the chord tip stays within 2 * L * sin(15 deg) of the straight tip.
    assert np.linalg.norm(tip - (0, 0, 2.0)) <= 2 * 2.0 * math.sin(math.radians(15)) + 1e-12
    assert tip[2] > 0


def test_fixed_fanout_count():
    sk = generate_skeleton(TreeParams(levels=3, children_min=3, children_max=3), 9)
    assert len(sk.branches) == 13
    assert skeleton_stats(sk).counts == [1, 3, 9]


def test_child_count_mean_over_seeds():
    p = TreeParams(levels=2, children_min=2, children_max=4)
    counts = np.array([len(generate_skeleton(p, s).branches) - 1 for s in range(1000)])
    sigma = np.sqrt(2.0 / 3.0) / np.sqrt(1000)  # std of Uniform{2,3,4}
    assert abs(counts.mean() - 3.0) <= 3 * sigma


def test_determinism():
    p = TreeParams()
    a, b = generate_skeleton(p, 77), generate_skeleton(p, 77)
    assert a == b
    assert generate_skeleton(p, 78) != a


def test_stats_single_segment():
    sk = generate_skeleton(TreeParams(levels=1, trunk_length=2.0, segments_per_branch=1), 0)
    st_ = skeleton_stats(sk)
    assert st_.counts == [1]
    assert st_.lengths[0] == pytest.approx(2.0, abs=1e-12)


def test_stats_total_length_matches_retraversal():
    sk = generate_skeleton(TreeParams(), 31)
    total = 0.0
    for b in sk.branches:
        for s in b.segments:
            total += math.sqrt(sum((e - a) ** 2 for a, e in zip(s.start, s.end)))
    assert skeleton_stats(sk).total_length == pytest.approx(total, rel=1e-12)


@pytest.mark.parametrize("segments, sides, expected", [(1, 8, 32), (3, 6, 48)])
def test_tube_triangle_counts(segments, sides, expected):
    sk = generate_skeleton(TreeParams(levels=1, segments_per_branch=segments), 1)
    mesh = tube_mesh(sk, sides)
    assert len(mesh) == expected
    assert set(mesh.labels.tolist()) == {SemanticClass.TRUNK}


def test_tube_labels_by_level():
    sk = generate_skeleton(TreeParams(levels=2, children_min=2, children_max=2, segments_per_branch=2, sides=5), 4)
    mesh = tube_mesh(sk)
    per_branch = 2 * 5 * 2 + 2 * 5
    assert mesh.labels[:per_branch].tolist() == [SemanticClass.TRUNK] * per_branch
    assert set(mesh.labels[per_branch:].tolist()) == {SemanticClass.BRANCH}


@given(tree_params, st.integers(0, 2**63))
def test_tube_vertices_near_axis(params, seed):
    sk = generate_skeleton(params, seed)
    mesh = tube_mesh(sk)
    offset = 0
    for b in sk.branches:
        n_tri = 2 * params.sides * len(b.segments) + 2 * params.sides
        verts = mesh.triangles[offset:offset + n_tri].reshape(-1, 3)
        offset += n_tri
        poly = b.polyline()
        rmax = max(s.radius_start for s in b.segments)
        for v in verts[:: max(1, len(verts) // 40)]:
            d = min(point_segment_distance(v, poly[k], poly[k + 1]) for k in range(len(poly) - 1))
            assert d <= rmax + 1e-9


@given(tree_params, st.integers(0, 2**63))
def test_tube_no_degenerate_triangles(params, seed):
    mesh = tube_mesh(generate_skeleton(params, seed))
    assert mesh.areas().min() > 1e-12


@given(tree_params, st.integers(0, 2**63))
def test_growth_laws(params, seed):
    sk = generate_skeleton(params, seed)
    branches = sk.branches
    assert sum(b.level == 0 for b in branches) == 1
    for i, b in enumerate(branches):
        assert (b.parent_id is None) == (b.level == 0)
        if b.parent_id is not None:
            parent = branches[b.parent_id]
            assert parent.level == b.level - 1
            assert b.parent_id < i
            assert 0.3 <= b.attach_t <= 1.0
            assert b.segments[0].radius_start <= parent.radius_at(b.attach_t) + 1e-15
            assert b.segments[0].radius_start == pytest.approx(
                parent.radius_at(b.attach_t) * params.radius_ratio, rel=1e-12)
        for s0, s1 in zip(b.segments, b.segments[1:]):
            assert s0.end == s1.start
            assert s1.radius_start <= s0.radius_start
        for s in b.segments:
            assert s.radius_end <= s.radius_start
        nominal = params.trunk_length * params.length_ratio ** b.level
        j = LENGTH_JITTER if b.level else 0.0
        assert (1 - j) * nominal - 1e-9 <= b.length <= (1 + j) * nominal + 1e-9
        if b.level < params.levels - 1:
            assert params.children_min <= len(b.children) <= params.children_max
        else:
            assert b.children == []


@given(st.floats(-150, 150), st.integers(0, 2**32))
def test_child_deviation_angle(angle, seed):
    p = TreeParams(levels=2, down_angle_deg=angle, down_angle_jitter_deg=5.0, curvature_deg=0.0)
    sk = generate_skeleton(p, seed)
    expected = angle if angle >= 0 else 180.0 + angle
    for b in sk.branches[1:]:
        parent = sk.branches[b.parent_id]
        d = np.subtract(b.segments[0].end, b.segments[0].start)
        cos = np.dot(d / np.linalg.norm(d), parent.tangent_at(b.attach_t))
        got = math.degrees(math.acos(np.clip(cos, -1, 1)))
        assert abs(got - min(180, max(0, expected))) <= 5.0 + 1e-6


@pytest.mark.parametrize("field, value", [
    ("levels", 0), ("trunk_length", 0.0), ("length_ratio", 1.5), ("length_ratio", 0.0),
    ("radius_ratio", 1.2), ("children_min", 0), ("segments_per_branch", 0), ("sides", 2),
])
def test_invalid_params_name_field(field, value):
    with pytest.raises(ParameterError) as exc:
        TreeParams(**{field: value})
    assert exc.value.field == field


def test_children_max_below_min():
    with pytest.raises(ParameterError) as exc:
        TreeParams(children_min=4, children_max=2)
    assert exc.value.field == "children_max"
