"""Streaming diarization sessions.

A session enrolls on the chronologically first portion of a frame stream
(until every speaker has accumulated the requested amount of speech) and
then classifies the rest in order. In adaptive mode the model folds its
own batch predictions back in as pseudo-labeled training data before
moving on; predictions already emitted are never revised.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field
from typing import Sequence

from . import classifiers
from .classifiers import ClassifierConfig, LabeledSample, Prediction, SampleOrigin
from .core import TIME_EPS, EmbeddingFrame, GroundTruth, TruthKind


@dataclass(frozen=True)
class SelfTrainConfig:
    """Self-training loop settings.

    batch_size: frames predicted per model update. score_threshold: when
    set, only predictions with score >= threshold become pseudo-labels
    (values above the score range reject everything); when absent, every
    prediction is folded in. adaptive=False disables updates entirely.
    """

    batch_size: int = 10
    score_threshold: float | None = None
    adaptive: bool = False

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.score_threshold is not None and self.score_threshold < 0:
            raise ValueError("score_threshold must be >= 0")


@dataclass(frozen=True)
class SplitSpec:
    """How to split a stream into enrollment and test regions.

    train_seconds_per_speaker: speech each speaker must accumulate before
    enrollment ends. fixed_test_start: optional absolute time overriding
    where the test region begins (used by sweeps to keep the test set
    identical across training-time settings).
    """

    train_seconds_per_speaker: float
    fixed_test_start: float | None = None

    def __post_init__(self) -> None:
        if self.train_seconds_per_speaker <= 0:
            raise ValueError("train_seconds_per_speaker must be > 0")


@dataclass(frozen=True)
class FrameTimings:
    """Per-frame latency summary for predict plus the share of its batch update."""

    count: int
    total_seconds: float
    mean_seconds: float
    median_seconds: float
    max_seconds: float

    @classmethod
    def from_latencies(cls, latencies: Sequence[float]) -> "FrameTimings":
        if not latencies:
            return cls(0, 0.0, 0.0, 0.0, 0.0)
        return cls(
            count=len(latencies),
            total_seconds=sum(latencies),
            mean_seconds=sum(latencies) / len(latencies),
            median_seconds=statistics.median(latencies),
            max_seconds=max(latencies),
        )


@dataclass
class SessionResult:
    """Outcome of one session over a test stream.

    `predictions` holds one entry per test frame in stream order. The
    accepted/rejected counters partition the processed frames by whether
    they were folded back in as pseudo-labels. Timing fields vary run to
    run and are excluded from any determinism comparison.
    """

    predictions: list[Prediction]
    model: classifiers._Classifier
    accepted_pseudo: int
    rejected_pseudo: int
    timings: FrameTimings = field(compare=False)


class SplitError(ValueError):
    """The stream ended before every speaker reached the enrollment target."""


def chronological_split(
    frames: Sequence[EmbeddingFrame],
    truth: Sequence[GroundTruth],
    spec: SplitSpec,
) -> tuple[list[LabeledSample], int]:
    """Split a stream into enrollment samples and a test start index.

    Scanning in order, each single-speaker frame adds its duration to that
    speaker's tally; the split lands right after the first frame at which
    every speaker appearing in `truth` has reached the target. Overlap and
    non-speech frames inside the enrollment window are dropped from the
    returned training samples. When `fixed_test_start` is set, the returned
    index is the first frame starting at or after that time instead.
    """
    if len(frames) != len(truth):
        raise ValueError(f"frames ({len(frames)}) and truth ({len(truth)}) must align 1:1")
    speakers = {t.speaker for t in truth if t.kind is TruthKind.SPEAKER}
    if not speakers:
        raise SplitError("stream has no single-speaker frames to enroll on")

    target = spec.train_seconds_per_speaker
    accumulated = {s: 0.0 for s in speakers}
    split = None
    for i, (frame, label) in enumerate(zip(frames, truth)):
        if label.kind is TruthKind.SPEAKER:
            accumulated[label.speaker] += frame.duration
            if all(acc >= target - TIME_EPS for acc in accumulated.values()):
                split = i + 1
                break
    if split is None:
        short = sorted(s for s, acc in accumulated.items() if acc < target - TIME_EPS)
        detail = ", ".join(f"{s} ({accumulated[s]:.3f}s of {target:g}s)" for s in short)
        raise SplitError(f"enrollment target unreachable before stream end: {detail}")

    train = [
        LabeledSample(frames[i].vector, truth[i].speaker, SampleOrigin.ENROLLMENT)
        for i in range(split)
        if truth[i].kind is TruthKind.SPEAKER
    ]

    test_start = split
    if spec.fixed_test_start is not None:
        test_start = len(frames)
        for i, frame in enumerate(frames):
            if frame.start >= spec.fixed_test_start - TIME_EPS:
                test_start = i
                break
    return train, test_start


def run_session(
    train: Sequence[LabeledSample],
    test_frames: Sequence[EmbeddingFrame],
    classifier_config: ClassifierConfig,
    selftrain_config: SelfTrainConfig,
) -> SessionResult:
    """Fit on enrollment samples, then classify the test stream in batches.

    Each batch is predicted with the current model before any update, so a
    later update never rewrites earlier output. In adaptive mode the
    accepted predictions of a batch are folded in as pseudo-labeled
    samples before the next batch; the final partial batch is processed
    the same way.
    """
    if not train:
        raise ValueError("cannot run a session without enrollment samples")
    model = classifiers.fit(classifier_config, train)
    if len(model.classes) < 2:
        raise ValueError(f"enrollment produced {len(model.classes)} class(es); need at least 2")

    cfg = selftrain_config
    predictions: list[Prediction] = []
    latencies: list[float] = []
    accepted = rejected = 0

    for lo in range(0, len(test_frames), cfg.batch_size):
        batch = test_frames[lo : lo + cfg.batch_size]
        batch_preds = []
        batch_lat = []
        for frame in batch:
            t0 = time.perf_counter()
            pred = model.predict(frame.vector)
            batch_lat.append(time.perf_counter() - t0)
            batch_preds.append(pred)
        predictions.extend(batch_preds)

        if cfg.adaptive:
            t0 = time.perf_counter()
            pseudo = [
                LabeledSample(frame.vector, pred.label, SampleOrigin.PSEUDO)
                for frame, pred in zip(batch, batch_preds)
                if cfg.score_threshold is None or pred.score >= cfg.score_threshold
            ]
            if pseudo:
                model.partial_fit(pseudo)
            update = time.perf_counter() - t0
            accepted += len(pseudo)
            rejected += len(batch) - len(pseudo)
            share = update / len(batch)
            batch_lat = [lat + share for lat in batch_lat]
        else:
            rejected += len(batch)
        latencies.extend(batch_lat)

    return SessionResult(
        predictions=predictions,
        model=model,
        accepted_pseudo=accepted,
        rejected_pseudo=rejected,
        timings=FrameTimings.from_latencies(latencies),
    )
