"""Vector math and timeline algebra."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import cells, cells_to_segments
from streamdiar.core import (
    NON_SPEECH,
    OVERLAP,
    Annotation,
    EmbeddingFrame,
    GroundTruth,
    Segment,
    Timeline,
    TruthKind,
    cosine_distance,
    normalize,
    overlap_timeline,
    truth_for_frames,
)

# ---------------------------------------------------------------------------
# normalize / cosine_distance


def test_normalize_three_four_five():
    assert np.allclose(normalize(np.array([3.0, 4.0])), [0.6, 0.8])


def test_normalize_unit_vector_unchanged():
    assert np.allclose(normalize(np.array([1.0, 0.0])), [1.0, 0.0])


def test_normalize_zero_vector_rejected():
    with pytest.raises(ValueError):
        normalize(np.array([0.0, 0.0]))


def test_normalize_nonfinite_rejected():
    with pytest.raises(ValueError):
        normalize(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        normalize(np.array([np.inf, 0.0]))


def test_cosine_distance_identity_orthogonal_antipodal():
    e1 = np.array([1.0, 0.0])
    e2 = np.array([0.0, 1.0])
    assert cosine_distance(e1, e1) == pytest.approx(0.0, abs=1e-12)
    assert cosine_distance(e1, e2) == pytest.approx(1.0, abs=1e-12)
    assert cosine_distance(e1, -e1) == pytest.approx(2.0, abs=1e-12)


def test_cosine_distance_dimension_mismatch():
    with pytest.raises(ValueError):
        cosine_distance(np.array([1.0, 0.0]), np.array([1.0, 0.0, 0.0]))


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
def test_cosine_distance_symmetric_and_bounded(dim, seed):
    rng = np.random.default_rng(seed)
    a = normalize(rng.standard_normal(dim))
    b = normalize(rng.standard_normal(dim))
    d_ab = cosine_distance(a, b)
    d_ba = cosine_distance(b, a)
    assert d_ab == pytest.approx(d_ba, abs=1e-12)
    assert -1e-9 <= d_ab <= 2.0 + 1e-9


# ---------------------------------------------------------------------------
# Segment / EmbeddingFrame


def test_segment_requires_positive_duration():
    with pytest.raises(ValueError):
        Segment(1.0, 1.0)
    with pytest.raises(ValueError):
        Segment(2.0, 1.0)


def test_embedding_frame_normalizes_and_validates():
    f = EmbeddingFrame(0.0, 0.2, [3.0, 4.0])
    assert np.allclose(f.vector, [0.6, 0.8])
    assert f.duration == pytest.approx(0.2)
    assert f.dimension == 2
    with pytest.raises(ValueError):
        EmbeddingFrame(0.2, 0.2, [1.0, 0.0])
    with pytest.raises(ValueError):
        EmbeddingFrame(0.0, 0.2, [1.0])  # d >= 2
    with pytest.raises(ValueError):
        EmbeddingFrame(0.0, 0.2, [0.0, 0.0])


def test_embedding_frame_vector_read_only():
    f = EmbeddingFrame(0.0, 0.2, [1.0, 0.0])
    with pytest.raises(ValueError):
        f.vector[0] = 5.0


# ---------------------------------------------------------------------------
# Timeline algebra: spec examples, then integer-grid property tests.


def tl(*pairs) -> Timeline:
    return Timeline([Segment(a, b) for a, b in pairs])


def as_pairs(t: Timeline) -> list[tuple[float, float]]:
    return [(s.start, s.end) for s in t]


def test_subtract_middle():
    assert as_pairs(tl((0, 10)).subtract(tl((4, 6)))) == [(0, 4), (6, 10)]


def test_union_touching_merges():
    assert as_pairs(tl((0, 2)).union(tl((2, 5)))) == [(0, 5)]


def test_total_duration_sums_lengths():
    assert tl((0, 4), (6, 10)).duration() == pytest.approx(8.0)


def test_subtract_self_and_empty():
    t = tl((0, 3), (5, 9))
    assert as_pairs(t.subtract(t)) == []
    assert as_pairs(t.subtract(Timeline([]))) == as_pairs(t)


segments_strategy = st.lists(
    st.tuples(st.integers(0, 40), st.integers(1, 10)).map(lambda p: (p[0], p[0] + p[1])),
    max_size=6,
)


@given(segments_strategy, segments_strategy)
def test_timeline_ops_match_integer_set_semantics(a_segs, b_segs):
    a, b = tl(*a_segs), tl(*b_segs)
    ca, cb = cells(a_segs), cells(b_segs)
    assert as_pairs(a.union(b)) == cells_to_segments(ca | cb)
    assert as_pairs(a.intersection(b)) == cells_to_segments(ca & cb)
    assert as_pairs(a.subtract(b)) == cells_to_segments(ca - cb)
    assert a.duration() == pytest.approx(len(ca))


@given(segments_strategy, segments_strategy)
def test_inclusion_exclusion(a_segs, b_segs):
    a, b = tl(*a_segs), tl(*b_segs)
    lhs = a.union(b).duration() + a.intersection(b).duration()
    assert lhs == pytest.approx(a.duration() + b.duration(), abs=1e-9)


# ---------------------------------------------------------------------------
# Annotation / overlap_timeline / truth_for_frames


def ann(*turns) -> Annotation:
    return Annotation([(Segment(a, b), label) for a, b, label in turns])


def test_annotation_rejects_same_speaker_overlap():
    with pytest.raises(ValueError):
        ann((0, 5, "A"), (4, 8, "A"))


def test_annotation_allows_cross_speaker_overlap():
    a = ann((0, 5, "A"), (3, 8, "B"))
    assert a.labels() == ["A", "B"]


def test_overlap_timeline_pairwise():
    assert as_pairs(overlap_timeline(ann((0, 5, "A"), (3, 8, "B")))) == [(3, 5)]


def test_overlap_timeline_disjoint_empty():
    assert as_pairs(overlap_timeline(ann((0, 5, "A"), (6, 8, "B")))) == []


def test_overlap_timeline_three_speakers_sweep():
    got = overlap_timeline(ann((0, 6, "A"), (2, 4, "B"), (3, 8, "C")))
    assert as_pairs(got) == [(2, 6)]


def test_overlap_timeline_single_speaker_empty():
    assert as_pairs(overlap_timeline(ann((0, 5, "A"), (6, 9, "A")))) == []


def test_annotation_crop():
    a = ann((0, 5, "A"), (3, 8, "B"))
    cropped = a.crop(tl((2, 4)))
    assert [(s.start, s.end, l) for s, l in cropped] == [(2, 4, "A"), (3, 4, "B")]


def test_truth_for_frames_kinds():
    a = ann((0.0, 1.0, "A"), (0.8, 2.0, "B"))
    frames = [EmbeddingFrame(t, t + 0.2, [1.0, 0.0]) for t in (0.0, 0.8, 1.2, 2.4)]
    got = truth_for_frames(frames, a)
    assert got[0] == GroundTruth.for_speaker("A")
    assert got[1] == OVERLAP
    assert got[2] == GroundTruth.for_speaker("B")
    assert got[3] == NON_SPEECH
    assert got[3].kind is TruthKind.NON_SPEECH


def test_truth_for_frames_half_open_boundary():
    # A frame whose midpoint sits exactly on a turn boundary belongs to the
    # turn that starts there, not the one that ends there.
    a = ann((0.0, 1.0, "A"), (1.0, 2.0, "B"))
    frame = EmbeddingFrame(0.9, 1.1, [1.0, 0.0])
    assert truth_for_frames([frame], a) == [GroundTruth.for_speaker("B")]
