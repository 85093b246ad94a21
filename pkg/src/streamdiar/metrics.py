"""Accuracy and diarization error rate (DER) scoring.

DER = (confusion + false alarm + miss) / total reference speech, computed
inside a scoring support built from the UEM minus collar neighborhoods
around reference boundaries and, optionally, minus overlapped speech.
Hypotheses may be scored against reference labels directly (enrollment
case) or after an optimal one-to-one label mapping (clustering case).
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

from scipy.optimize import linear_sum_assignment

from .classifiers import Prediction
from .core import (
    TIME_EPS,
    Annotation,
    EmbeddingFrame,
    GroundTruth,
    Segment,
    Timeline,
    TruthKind,
    _active_sets,
    overlap_timeline,
)

Uem = Timeline

HALF_EACH_SIDE = "half_each_side"
FULL_EACH_SIDE = "full_each_side"


@dataclass(frozen=True)
class MetricConfig:
    """Scoring protocol settings.

    collar: seconds excluded around every reference segment boundary
    (split half/half or applied in full on each side). skip_overlap drops
    regions where two or more reference speakers are active.
    """

    collar: float = 0.25
    skip_overlap: bool = True
    collar_semantics: str = HALF_EACH_SIDE

    def __post_init__(self) -> None:
        if self.collar < 0:
            raise ValueError("collar must be >= 0")
        if self.collar_semantics not in (HALF_EACH_SIDE, FULL_EACH_SIDE):
            raise ValueError(f"unknown collar_semantics {self.collar_semantics!r}")


@dataclass(frozen=True)
class DerReport:
    """Error durations (seconds) and the derived rates.

    `total` is the reference speech duration inside the scoring support;
    every rate divides by it, and der is exactly the sum of the three
    component rates.
    """

    confusion: float
    false_alarm: float
    miss: float
    total: float

    def __post_init__(self) -> None:
        for name in ("confusion", "false_alarm", "miss", "total"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.total <= 0:
            raise ValueError("total reference speech is zero: DER undefined")

    @property
    def confusion_rate(self) -> float:
        return self.confusion / self.total

    @property
    def fa_rate(self) -> float:
        return self.false_alarm / self.total

    @property
    def miss_rate(self) -> float:
        return self.miss / self.total

    @property
    def der(self) -> float:
        return self.confusion_rate + self.fa_rate + self.miss_rate

    @classmethod
    def combined(cls, reports: Sequence["DerReport"]) -> "DerReport":
        """Duration-weighted aggregate: sum components, then divide once."""
        if not reports:
            raise ValueError("no reports to combine")
        return cls(
            confusion=sum(r.confusion for r in reports),
            false_alarm=sum(r.false_alarm for r in reports),
            miss=sum(r.miss for r in reports),
            total=sum(r.total for r in reports),
        )


def scoring_support(reference: Annotation, uem: Uem, cfg: MetricConfig) -> Timeline:
    """UEM minus reference-boundary collars minus (optionally) overlap."""
    if not uem:
        raise ValueError("empty UEM: nothing to score")
    support = uem
    if cfg.collar > 0:
        half = cfg.collar / 2.0 if cfg.collar_semantics == HALF_EACH_SIDE else cfg.collar
        collars = []
        for seg, _ in reference:
            collars.append(Segment(seg.start - half, seg.start + half))
            collars.append(Segment(seg.end - half, seg.end + half))
        support = support.subtract(Timeline(collars))
    if cfg.skip_overlap:
        support = support.subtract(overlap_timeline(reference))
    return support


def frames_to_annotation(
    labeled_frames: Sequence[tuple[EmbeddingFrame, str]], merge_gap: float = 0.3
) -> Annotation:
    """Merge per-frame labels into speaker turns.

    Consecutive frames with the same label join one segment as long as the
    gap between them is at most `merge_gap`; a label change or a larger
    gap closes the segment.
    """
    turns: list[tuple[Segment, str]] = []
    cur_label: str | None = None
    cur_start = cur_end = 0.0
    for frame, label in labeled_frames:
        if label == cur_label and frame.start - cur_end <= merge_gap + TIME_EPS:
            cur_end = max(cur_end, frame.end)
        else:
            if cur_label is not None:
                turns.append((Segment(cur_start, cur_end), cur_label))
            cur_label, cur_start, cur_end = label, frame.start, frame.end
    if cur_label is not None:
        turns.append((Segment(cur_start, cur_end), cur_label))
    return Annotation(turns)


def optimal_mapping(reference: Annotation, hypothesis: Annotation) -> dict[str, str]:
    """One-to-one hypothesis-to-reference label map maximizing overlap time.

    Solved as a linear assignment on the co-active duration matrix; only
    pairs with positive overlap are kept, so hypothesis labels with no
    evidence stay unmapped.
    """
    ref_labels = reference.labels()
    hyp_labels = hypothesis.labels()
    if not ref_labels or not hyp_labels:
        return {}
    ref_tl = [reference.label_timeline(r) for r in ref_labels]
    hyp_tl = [hypothesis.label_timeline(h) for h in hyp_labels]
    overlap = [
        [ref_tl[i].intersection(hyp_tl[j]).duration() for j in range(len(hyp_labels))]
        for i in range(len(ref_labels))
    ]
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    return {
        hyp_labels[j]: ref_labels[i]
        for i, j in zip(rows, cols)
        if overlap[i][j] > TIME_EPS
    }


def _rename_hypothesis(hypothesis: Annotation, mapping: dict[str, str]) -> Annotation:
    # Unmapped labels get a reserved prefix so they can never collide with
    # a reference label by accident.
    return Annotation(
        (seg, mapping.get(label, f"\x00unmapped:{label}")) for seg, label in hypothesis
    )


def _error_components(reference: Annotation, hypothesis: Annotation) -> tuple[float, float, float, float]:
    """(confusion, false alarm, miss, total) over pre-cropped annotations."""
    ref_bounds, ref_sets = _active_sets(reference)
    hyp_bounds, hyp_sets = _active_sets(hypothesis)
    bounds = sorted(set(ref_bounds) | set(hyp_bounds))

    confusion = fa = miss = total = 0.0
    for a, b in zip(bounds, bounds[1:]):
        dur = b - a
        if dur <= TIME_EPS:
            continue
        mid = 0.5 * (a + b)
        ri = bisect_right(ref_bounds, mid) - 1
        hi = bisect_right(hyp_bounds, mid) - 1
        r = ref_sets[ri] if ri >= 0 else frozenset()
        h = hyp_sets[hi] if hi >= 0 else frozenset()
        if not r and not h:
            continue
        n_correct = len(r & h)
        total += len(r) * dur
        confusion += (min(len(r), len(h)) - n_correct) * dur
        miss += max(0, len(r) - len(h)) * dur
        fa += max(0, len(h) - len(r)) * dur
    return confusion, fa, miss, total


def der(
    reference: Annotation,
    hypothesis: Annotation,
    uem: Uem,
    cfg: MetricConfig = MetricConfig(),
    mapping: str = "identity",
) -> DerReport:
    """Score a hypothesis against the reference under the given protocol.

    Both annotations are cropped to the scoring support first. With
    mapping="identity" labels are compared directly; with "optimal" the
    hypothesis labels are renamed by the maximum-overlap assignment before
    comparison. Raises when no reference speech is left to score.
    """
    if mapping not in ("identity", "optimal"):
        raise ValueError(f"unknown mapping {mapping!r}")
    support = scoring_support(reference, uem, cfg)
    ref_c = reference.crop(support)
    hyp_c = hypothesis.crop(support)
    if not ref_c:
        raise ValueError("no reference speech inside the scoring support: DER undefined")
    if mapping == "optimal":
        hyp_c = _rename_hypothesis(hyp_c, optimal_mapping(ref_c, hyp_c))
    confusion, fa, miss, total = _error_components(ref_c, hyp_c)
    return DerReport(confusion=confusion, false_alarm=fa, miss=miss, total=total)


def accuracy(
    predictions: Sequence[Prediction] | Sequence[str],
    truth: Sequence[GroundTruth],
) -> float:
    """Fraction of single-speaker frames predicted correctly.

    Frames whose truth is overlap or non-speech are excluded from both
    numerator and denominator; it is an error if nothing is left.
    """
    if len(predictions) != len(truth):
        raise ValueError(f"predictions ({len(predictions)}) and truth ({len(truth)}) must align")
    eligible = correct = 0
    for pred, gt in zip(predictions, truth):
        if gt.kind is not TruthKind.SPEAKER:
            continue
        eligible += 1
        label = pred.label if isinstance(pred, Prediction) else pred
        if label == gt.speaker:
            correct += 1
    if eligible == 0:
        raise ValueError("no single-speaker frames to score accuracy on")
    return correct / eligible
