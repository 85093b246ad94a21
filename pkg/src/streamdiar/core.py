"""Shared vector math and interval (timeline) algebra.

Vectors are unit-norm embeddings of arbitrary dimension d >= 2; all
distances are cosine distances. Times are float seconds; segment
comparisons use an absolute epsilon of 1e-9 s, far below the millisecond
precision of annotation files.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np

TIME_EPS = 1e-9

NORM_TOL = 1e-9


def normalize(v: np.ndarray) -> np.ndarray:
    """Return v scaled to unit Euclidean norm.

    Raises ValueError for non-finite input or a norm below 1e-12.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    norm = float(np.linalg.norm(v))
    if norm <= 1e-12:
        raise ValueError("cannot normalize a zero or near-zero vector")
    return v / norm


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine distance 1 - <a, b> between two unit vectors, in [0, 2].

    Both inputs are assumed unit-norm; only the dimensions are checked so
    the per-frame hot loop stays cheap.
    """
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(1.0 - np.dot(a, b))


@dataclass(frozen=True)
class Segment:
    """Half-open-ish time span [start, end] with end > start."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if not (self.end > self.start):
            raise ValueError(f"segment end must exceed start: [{self.start}, {self.end}]")

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def middle(self) -> float:
        return 0.5 * (self.start + self.end)

    def contains(self, t: float) -> bool:
        return self.start - TIME_EPS <= t <= self.end + TIME_EPS


def _coalesce(segments: Iterable[Segment]) -> tuple[Segment, ...]:
    """Sort segments and merge any that overlap or touch (within TIME_EPS)."""
    pending = sorted(segments, key=lambda s: (s.start, s.end))
    merged: list[list[float]] = []
    for seg in pending:
        if seg.duration <= TIME_EPS:
            continue
        if merged and seg.start <= merged[-1][1] + TIME_EPS:
            merged[-1][1] = max(merged[-1][1], seg.end)
        else:
            merged.append([seg.start, seg.end])
    return tuple(Segment(a, b) for a, b in merged)


class Timeline:
    """An ordered set of disjoint segments supporting interval-set algebra."""

    __slots__ = ("segments",)

    def __init__(self, segments: Iterable[Segment] = ()) -> None:
        self.segments: tuple[Segment, ...] = _coalesce(segments)

    def __iter__(self) -> Iterator[Segment]:
        return iter(self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def __bool__(self) -> bool:
        return bool(self.segments)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Timeline):
            return NotImplemented
        if len(self.segments) != len(other.segments):
            return False
        return all(
            abs(a.start - b.start) <= TIME_EPS and abs(a.end - b.end) <= TIME_EPS
            for a, b in zip(self.segments, other.segments)
        )

    def __repr__(self) -> str:
        body = ", ".join(f"[{s.start:g}, {s.end:g}]" for s in self.segments)
        return f"Timeline({body})"

    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    def union(self, other: "Timeline") -> "Timeline":
        return Timeline(self.segments + other.segments)

    def intersection(self, other: "Timeline") -> "Timeline":
        out: list[Segment] = []
        i = j = 0
        a, b = self.segments, other.segments
        while i < len(a) and j < len(b):
            lo = max(a[i].start, b[j].start)
            hi = min(a[i].end, b[j].end)
            if hi - lo > TIME_EPS:
                out.append(Segment(lo, hi))
            if a[i].end < b[j].end:
                i += 1
            else:
                j += 1
        return Timeline(out)

    def subtract(self, other: "Timeline") -> "Timeline":
        out: list[Segment] = []
        removers = other.segments
        j = 0
        for seg in self.segments:
            cursor = seg.start
            while j < len(removers) and removers[j].end <= cursor + TIME_EPS:
                j += 1
            k = j
            while k < len(removers) and removers[k].start < seg.end - TIME_EPS:
                r = removers[k]
                if r.start - cursor > TIME_EPS:
                    out.append(Segment(cursor, r.start))
                cursor = max(cursor, r.end)
                if cursor >= seg.end - TIME_EPS:
                    break
                k += 1
            if seg.end - cursor > TIME_EPS:
                out.append(Segment(cursor, seg.end))
        return Timeline(out)

    def covers(self, t: float) -> bool:
        idx = bisect_right([s.start for s in self.segments], t)
        if idx == 0:
            return False
        return self.segments[idx - 1].contains(t)

    def extent(self) -> Segment | None:
        if not self.segments:
            return None
        return Segment(self.segments[0].start, self.segments[-1].end)


class TruthKind(Enum):
    SPEAKER = "speaker"
    OVERLAP = "overlap"
    NON_SPEECH = "non_speech"


@dataclass(frozen=True)
class GroundTruth:
    """Reference label for one frame: a single speaker, overlap, or silence."""

    kind: TruthKind
    speaker: str | None = None

    def __post_init__(self) -> None:
        if self.kind is TruthKind.SPEAKER and not self.speaker:
            raise ValueError("speaker truth requires a speaker id")
        if self.kind is not TruthKind.SPEAKER and self.speaker is not None:
            raise ValueError(f"{self.kind.value} truth carries no speaker id")

    @classmethod
    def for_speaker(cls, speaker: str) -> "GroundTruth":
        return cls(TruthKind.SPEAKER, speaker)


OVERLAP = GroundTruth(TruthKind.OVERLAP)
NON_SPEECH = GroundTruth(TruthKind.NON_SPEECH)


@dataclass(frozen=True, eq=False)
class EmbeddingFrame:
    """One speech window (~200 ms) with its unit embedding vector.

    The vector is normalized at construction; downstream code relies on
    unit norm and never re-normalizes.
    """

    start: float
    end: float
    vector: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not (self.end > self.start):
            raise ValueError(f"frame end must exceed start: [{self.start}, {self.end}]")
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] < 2:
            raise ValueError(f"frame vector must be 1-d with d >= 2, got shape {vec.shape}")
        norm = float(np.linalg.norm(vec))
        if not np.isfinite(norm) or norm <= 1e-12 or not np.all(np.isfinite(vec)):
            raise ValueError("frame vector must be finite with positive norm")
        if abs(norm - 1.0) > NORM_TOL:
            vec = vec / norm
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)

    @property
    def duration(self) -> float:
        return self.end - self.start

    @property
    def middle(self) -> float:
        return 0.5 * (self.start + self.end)

    @property
    def dimension(self) -> int:
        return int(self.vector.shape[0])


class Annotation:
    """A set of labeled speaker turns.

    Per-speaker segments must be disjoint; segments of different speakers
    may overlap (overlapped speech). Turns are stored in a canonical
    (start, end, label) order.
    """

    __slots__ = ("turns",)

    def __init__(self, turns: Iterable[tuple[Segment, str]] = ()) -> None:
        ordered = sorted(turns, key=lambda t: (t[0].start, t[0].end, t[1]))
        self.turns: tuple[tuple[Segment, str], ...] = tuple(ordered)
        self._check_per_speaker_disjoint()

    def _check_per_speaker_disjoint(self) -> None:
        last_end: dict[str, float] = {}
        for seg, label in self.turns:
            prev = last_end.get(label)
            if prev is not None and seg.start < prev - TIME_EPS:
                raise ValueError(f"speaker {label!r} has overlapping segments near t={seg.start:g}")
            last_end[label] = max(seg.end, prev if prev is not None else seg.end)

    def __iter__(self) -> Iterator[tuple[Segment, str]]:
        return iter(self.turns)

    def __len__(self) -> int:
        return len(self.turns)

    def __bool__(self) -> bool:
        return bool(self.turns)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Annotation):
            return NotImplemented
        if len(self.turns) != len(other.turns):
            return False
        return all(
            a_label == b_label
            and abs(a_seg.start - b_seg.start) <= TIME_EPS
            and abs(a_seg.end - b_seg.end) <= TIME_EPS
            for (a_seg, a_label), (b_seg, b_label) in zip(self.turns, other.turns)
        )

    def labels(self) -> list[str]:
        return sorted({label for _, label in self.turns})

    def label_timeline(self, label: str) -> Timeline:
        return Timeline(seg for seg, lab in self.turns if lab == label)

    def speech_timeline(self) -> Timeline:
        return Timeline(seg for seg, _ in self.turns)

    def crop(self, support: Timeline) -> "Annotation":
        sup = support.segments
        sup_ends = [s.end for s in sup]
        out: list[tuple[Segment, str]] = []
        for seg, label in self.turns:
            j = bisect_right(sup_ends, seg.start)
            while j < len(sup) and sup[j].start < seg.end - TIME_EPS:
                lo = max(seg.start, sup[j].start)
                hi = min(seg.end, sup[j].end)
                if hi - lo > TIME_EPS:
                    out.append((Segment(lo, hi), label))
                j += 1
        return Annotation(out)

    def active_at(self, t: float) -> list[str]:
        """Speakers whose turns contain time t, sorted."""
        return sorted({label for seg, label in self.turns if seg.contains(t)})

    def duration(self, label: str | None = None) -> float:
        if label is None:
            return sum(seg.duration for seg, _ in self.turns)
        return sum(seg.duration for seg, lab in self.turns if lab == label)


def overlap_timeline(annotation: Annotation) -> Timeline:
    """Timeline of all instants where two or more speakers are active."""
    events: list[tuple[float, int]] = []
    for seg, _ in annotation:
        events.append((seg.start, 1))
        events.append((seg.end, -1))
    events.sort()
    out: list[Segment] = []
    active = 0
    overlap_start: float | None = None
    for t, delta in events:
        before = active
        active += delta
        if before < 2 <= active:
            overlap_start = t
        elif before >= 2 > active and overlap_start is not None:
            if t - overlap_start > TIME_EPS:
                out.append(Segment(overlap_start, t))
            overlap_start = None
    return Timeline(out)


def _active_sets(annotation: Annotation) -> tuple[list[float], list[frozenset[str]]]:
    """Boundary times and the active speaker set within each elementary interval.

    Turns are treated half-open [start, end), so interval k = [bounds[k],
    bounds[k+1]) has the constant speaker set sets[k]; sets[-1] covers times
    at or past the last boundary (always empty).
    """
    events: dict[float, list[tuple[int, str]]] = {}
    for seg, label in annotation:
        events.setdefault(seg.start, []).append((1, label))
        events.setdefault(seg.end, []).append((-1, label))
    bounds = sorted(events)
    sets: list[frozenset[str]] = []
    active: dict[str, int] = {}
    for t in bounds:
        for delta, label in events[t]:
            count = active.get(label, 0) + delta
            if count <= 0:
                active.pop(label, None)
            else:
                active[label] = count
        sets.append(frozenset(active))
    return bounds, sets


def truth_for_frames(frames: Sequence[EmbeddingFrame], annotation: Annotation) -> list[GroundTruth]:
    """Derive per-frame ground truth from an annotation.

    A frame is labeled by the speakers active at its midpoint (turns taken
    half-open [start, end)): exactly one gives a speaker label, two or more
    give overlap, none gives non-speech.
    """
    bounds, sets = _active_sets(annotation)
    truths: list[GroundTruth] = []
    last_mid = -np.inf
    for frame in frames:
        mid = frame.middle
        if mid < last_mid - TIME_EPS:
            raise ValueError("frames must be in chronological order")
        last_mid = mid
        k = bisect_right(bounds, mid) - 1
        speakers = sorted(sets[k]) if k >= 0 else []
        if not speakers:
            truths.append(NON_SPEECH)
        elif len(speakers) == 1:
            truths.append(GroundTruth.for_speaker(speakers[0]))
        else:
            truths.append(OVERLAP)
    return truths
