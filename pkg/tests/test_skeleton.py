import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gesturelog.skeleton import (
    HAND_EDGES,
    NUM_LANDMARKS,
    DegenerateSkeleton,
    Handedness,
    HandSkeleton,
    featurize_batch,
    normalize,
)

from conftest import make_random_skeleton


def reference_normalize(triples, rotate=True):
    """Independent scalar reimplementation of the three normalization steps.

    Kept deliberately free of numpy and of any shared code with the package:
    translate wrist to origin, divide by the wrist-to-middle-MCP distance,
    rotate x-y so that direction points along -y.
    """
    wx, wy, wz = triples[0]
    moved = [(x - wx, y - wy, z - wz) for x, y, z in triples]
    mx, my, mz = moved[9]
    d = math.sqrt(mx * mx + my * my + mz * mz)
    scaled = [(x / d, y / d, z / d) for x, y, z in moved]
    sx, sy, _ = scaled[9]
    r = math.sqrt(sx * sx + sy * sy)
    out = []
    for x, y, z in scaled:
        if rotate and r > 1e-12:
            sin_t = -sx / r
            cos_t = -sy / r
            out.extend([cos_t * x - sin_t * y, sin_t * x + cos_t * y, z])
        else:
            out.extend([x, y, z])
    return out


def test_edge_list_shape_and_connectivity():
    assert len(HAND_EDGES) == 21
    assert len({tuple(sorted(e)) for e in HAND_EDGES}) == 21
    assert all(0 <= a <= 20 and 0 <= b <= 20 for a, b in HAND_EDGES)
    # breadth-first reachability from the wrist must cover all 21 nodes
    adjacency = {i: set() for i in range(NUM_LANDMARKS)}
    for a, b in HAND_EDGES:
        adjacency[a].add(b)
        adjacency[b].add(a)
    seen = {0}
    frontier = [0]
    while frontier:
        node = frontier.pop()
        for nxt in adjacency[node]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    assert seen == set(range(NUM_LANDMARKS))


def test_skeleton_validation():
    with pytest.raises(ValueError):
        HandSkeleton(np.zeros((20, 3)))
    bad = np.zeros((21, 3))
    bad[3, 1] = np.nan
    with pytest.raises(ValueError):
        HandSkeleton(bad)
    skel = HandSkeleton(np.random.default_rng(0).uniform(size=(21, 3)), "Left")
    assert skel.handedness is Handedness.LEFT
    with pytest.raises(ValueError):
        skel.landmarks[0, 0] = 5.0  # frozen array


def test_normalize_axis_aligned_case():
    pts = np.random.default_rng(1).uniform(size=(21, 3))
    pts[0] = (0.5, 0.5, 0.0)
    pts[9] = (0.5, 0.3, 0.0)
    feats = normalize(HandSkeleton(pts))
    assert np.allclose(feats[0:3], (0.0, 0.0, 0.0), atol=1e-12)
    assert np.allclose(feats[27:30], (0.0, -1.0, 0.0), atol=1e-12)


def test_normalize_translation_invariance_example():
    pts = np.random.default_rng(2).uniform(size=(21, 3))
    pts[0] = (0.5, 0.5, 0.0)
    pts[9] = (0.5, 0.3, 0.0)
    shifted = pts + np.array([0.2, 0.1, 0.0])
    a = normalize(HandSkeleton(pts))
    b = normalize(HandSkeleton(shifted))
    assert np.max(np.abs(a - b)) < 1e-9


def test_normalize_matches_reference_on_random_skeletons(rng):
    for _ in range(100):
        skel = make_random_skeleton(rng)
        got = normalize(skel)
        want = reference_normalize([tuple(p) for p in skel.landmarks])
        assert np.max(np.abs(got - np.array(want))) < 1e-9


def test_normalize_no_rotation_flag(rng):
    skel = make_random_skeleton(rng)
    got = normalize(skel, rotate=False)
    want = reference_normalize([tuple(p) for p in skel.landmarks], rotate=False)
    assert np.max(np.abs(got - np.array(want))) < 1e-9
    assert np.allclose(got[0:3], 0.0)
    assert abs(np.linalg.norm(got[27:30]) - 1.0) < 1e-9


def test_normalize_output_invariants(rng):
    for _ in range(50):
        feats = normalize(make_random_skeleton(rng))
        assert feats.shape == (63,)
        assert np.allclose(feats[0:3], 0.0, atol=1e-12)
        assert abs(np.linalg.norm(feats[27:30]) - 1.0) < 1e-9
        # rotation puts the middle MCP on the -y axis (x component gone)
        assert abs(feats[27]) < 1e-9
        assert feats[28] <= 0.0


def test_degenerate_skeleton_rejected():
    pts = np.random.default_rng(3).uniform(size=(21, 3))
    pts[9] = pts[0] + 1e-8
    with pytest.raises(DegenerateSkeleton):
        normalize(HandSkeleton(pts))


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    tx=st.floats(-50, 50),
    ty=st.floats(-50, 50),
    tz=st.floats(-50, 50),
    scale=st.floats(1e-3, 1e3),
)
def test_normalize_translation_scale_invariance(seed, tx, ty, tz, scale):
    skel = make_random_skeleton(np.random.default_rng(seed))
    moved = HandSkeleton(skel.landmarks * scale + np.array([tx, ty, tz]))
    a = normalize(skel)
    b = normalize(moved)
    assert np.max(np.abs(a - b)) < 1e-9


def test_featurize_batch_empty():
    out = featurize_batch([])
    assert out.shape == (0, 63)


def test_featurize_batch_single(rng):
    skel = make_random_skeleton(rng)
    out = featurize_batch([skel])
    assert out.shape == (1, 63)
    assert np.array_equal(out[0], normalize(skel))


def test_featurize_batch_matches_loop(rng):
    skels = [make_random_skeleton(rng) for _ in range(50)]
    out = featurize_batch(skels)
    for i, skel in enumerate(skels):
        assert np.array_equal(out[i], normalize(skel))


def test_featurize_batch_reports_offending_index(rng):
    skels = [make_random_skeleton(rng) for _ in range(5)]
    bad = skels[0].landmarks.copy()
    bad[9] = bad[0]
    skels[3] = HandSkeleton(bad)
    with pytest.raises(DegenerateSkeleton) as exc_info:
        featurize_batch(skels)
    assert exc_info.value.index == 3
