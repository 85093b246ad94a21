"""Synthetic two-stage conversations: unit-sphere embeddings + ground truth.

Speakers are von Mises-Fisher clusters on S^(d-1) whose mean directions are
kept at least a configured angle apart. A semi-Markov turn process
(exponential turn and pause lengths, optional overlapped transitions) lays
out who speaks when; frames are tiled inside the speech regions and labeled
from the annotation. An optional enrollment skew rotates one speaker's mean
for the opening seconds, so their early frames misrepresent the cluster.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, fields, replace
from typing import Sequence

import numpy as np
from scipy.special import ive

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .core import (
    OVERLAP,
    Annotation,
    EmbeddingFrame,
    GroundTruth,
    Segment,
    Timeline,
    _active_sets,
    normalize,
)
from .io import EmbeddingRecord


@dataclass(frozen=True)
class EnrollmentSkew:
    """Rotate `speaker`'s mean by `drift_angle_degrees` while t < skew_duration."""

    speaker: str
    drift_angle_degrees: float
    skew_duration_seconds: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.drift_angle_degrees <= 180.0:
            raise ValueError("drift_angle_degrees must be in [0, 180]")
        if self.skew_duration_seconds <= 0:
            raise ValueError("skew_duration_seconds must be > 0")


@dataclass(frozen=True)
class GenConfig:
    dimension: int
    kappa: float
    name: str = "synthetic"
    n_speakers: int = 2
    duration: float = 600.0
    frame_period: float = 0.2
    min_pairwise_angle: float = 90.0
    max_pairwise_angle: float = 180.0
    turn_mean: float = 5.0
    pause_mean: float = 0.5
    overlap_prob: float = 0.0
    overlap_mean: float = 0.5
    turn_drift_degrees: float = 0.0
    enrollment_skew: EnrollmentSkew | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dimension < 2:
            raise ValueError("dimension must be >= 2")
        if self.kappa < 0:
            raise ValueError("kappa must be >= 0")
        if self.n_speakers < 2:
            raise ValueError("n_speakers must be >= 2 for an alternating conversation")
        for name in ("duration", "frame_period", "turn_mean", "pause_mean", "overlap_mean"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not 0.0 <= self.overlap_prob <= 1.0:
            raise ValueError("overlap_prob must be in [0, 1]")
        if not 0.0 <= self.min_pairwise_angle <= self.max_pairwise_angle <= 180.0:
            raise ValueError("need 0 <= min_pairwise_angle <= max_pairwise_angle <= 180")
        if not 0.0 <= self.turn_drift_degrees <= 180.0:
            raise ValueError("turn_drift_degrees must be in [0, 180]")

    @classmethod
    def from_toml(cls, text: str) -> "GenConfig":
        """Build a config from TOML text; unknown keys are an error."""
        data = tomllib.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        skew = data.get("enrollment_skew")
        if skew is not None:
            if not isinstance(skew, dict):
                raise ValueError("enrollment_skew must be a table")
            data = dict(data)
            data["enrollment_skew"] = EnrollmentSkew(**skew)
        return cls(**data)

    def speaker_ids(self) -> list[str]:
        return [f"spk{i}" for i in range(self.n_speakers)]


def mean_resultant_length(dimension: int, kappa: float) -> float:
    """E[<x, mean>] for a vMF draw: ratio of modified Bessel functions.

    Useful for calibrating kappa against a target intra-cluster cosine
    distance (expected pairwise distance ~= 1 - value**2).
    """
    if kappa == 0:
        return 0.0
    half = dimension / 2.0
    # Exponentially scaled Bessel functions: the e^-kappa factors cancel in
    # the ratio, avoiding overflow for large kappa.
    return float(ive(half, kappa) / ive(half - 1.0, kappa))


def _unit_tangent(mean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random unit vector orthogonal to `mean`."""
    while True:
        g = rng.standard_normal(mean.shape[0])
        g -= (g @ mean) * mean
        norm = np.linalg.norm(g)
        if norm > 1e-12:
            return g / norm


def sample_vmf(mean: np.ndarray, kappa: float, rng: np.random.Generator) -> np.ndarray:
    """One von Mises-Fisher draw on S^(d-1) (Wood's rejection sampler).

    The radial component w = <x, mean> is sampled by rejection from a
    Beta-based envelope; the remainder is an independent uniform tangent.
    kappa = 0 degenerates to the uniform distribution on the sphere.
    """
    mean = np.asarray(mean, dtype=float)
    d = mean.shape[0]
    if kappa == 0:
        return normalize(rng.standard_normal(d))
    b = (d - 1) / (math.sqrt(4.0 * kappa * kappa + (d - 1) ** 2) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + (d - 1) * math.log(1.0 - x0 * x0)
    while True:
        z = rng.beta((d - 1) / 2.0, (d - 1) / 2.0)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        if kappa * w + (d - 1) * math.log(1.0 - x0 * w) - c >= math.log(rng.uniform()):
            break
    tangent = _unit_tangent(mean, rng)
    return normalize(w * mean + math.sqrt(max(0.0, 1.0 - w * w)) * tangent)


def _speaker_means(cfg: GenConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Sample unit mean directions with pairwise angles in the configured band."""
    max_dot = math.cos(math.radians(cfg.min_pairwise_angle))
    min_dot = math.cos(math.radians(cfg.max_pairwise_angle))
    for _ in range(100_000):
        means = [normalize(rng.standard_normal(cfg.dimension)) for _ in range(cfg.n_speakers)]
        ok = all(
            min_dot - 1e-12 <= means[i] @ means[j] <= max_dot + 1e-12
            for i in range(cfg.n_speakers)
            for j in range(i + 1, cfg.n_speakers)
        )
        if ok:
            return dict(zip(cfg.speaker_ids(), means))
    raise ValueError(
        f"cannot place {cfg.n_speakers} means with pairwise angles in "
        f"[{cfg.min_pairwise_angle}, {cfg.max_pairwise_angle}] degrees in dimension {cfg.dimension}"
    )


def _rotate(mean: np.ndarray, tangent: np.ndarray, degrees: float) -> np.ndarray:
    theta = math.radians(degrees)
    return normalize(math.cos(theta) * mean + math.sin(theta) * tangent)


def _off_span_tangent(
    means: Sequence[np.ndarray], base: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Random unit direction orthogonal to every speaker mean.

    Used for the enrollment skew: drifting out of the inter-speaker span
    misrepresents the speaker's own cluster without moving its enrollment
    toward any other speaker's cluster.
    """
    basis, _ = np.linalg.qr(np.stack(means).T)
    for _ in range(100):
        g = rng.standard_normal(base.shape[0])
        g -= basis @ (basis.T @ g)
        norm = np.linalg.norm(g)
        if norm > 1e-9:
            return g / norm
    # The means span the whole space; any tangent of the base will do.
    return _unit_tangent(base, rng)


def _quantize(value: float, step: float, minimum: float = 0.0) -> float:
    """Round to the frame grid so turn boundaries align with frame edges."""
    return max(minimum, round(value / step) * step)


def _turn_layout(cfg: GenConfig, rng: np.random.Generator) -> list[tuple[Segment, str]]:
    """Alternating-speaker turns with exponential lengths on the frame grid.

    With probability overlap_prob a transition overlaps: the next turn
    starts before the current one ends. The overlap is capped at 45% of
    both adjacent turn lengths, which keeps each single speaker's own
    turns disjoint even through chained overlaps.
    """
    ids = cfg.speaker_ids()
    step = cfg.frame_period
    turns: list[tuple[Segment, str]] = []
    order = rng.permutation(cfg.n_speakers)
    start = 0.0
    idx = 0
    length = _quantize(rng.exponential(cfg.turn_mean), step, minimum=step)
    while start < cfg.duration:
        end = min(start + length, cfg.duration)
        if end > start:
            turns.append((Segment(start, end), ids[order[idx % cfg.n_speakers]]))
        next_length = _quantize(rng.exponential(cfg.turn_mean), step, minimum=step)
        if cfg.n_speakers > 1 and rng.uniform() < cfg.overlap_prob:
            cap = 0.45 * min(length, next_length)
            overlap = min(rng.exponential(cfg.overlap_mean), cap)
            overlap = math.floor(overlap / step) * step
            next_start = start + length - overlap
        else:
            next_start = start + length + _quantize(rng.exponential(cfg.pause_mean), step)
        start, length, idx = next_start, next_length, idx + 1
    return turns


@dataclass(frozen=True)
class Conversation:
    """Generated stream: labeled frames plus the reference annotation/UEM."""

    records: list[EmbeddingRecord]
    annotation: Annotation
    uem: Timeline

    @property
    def frames(self) -> list[EmbeddingFrame]:
        return [r.frame for r in self.records]

    @property
    def truth(self) -> list[GroundTruth]:
        return [r.truth for r in self.records]


def generate_conversation(cfg: GenConfig, seed: int | None = None) -> Conversation:
    """Deterministically generate one conversation from (config, seed).

    Frames are tiled every frame_period inside each maximal region of
    constant active-speaker set, so every frame's label matches the
    speakers active at its midpoint by construction. Single-speaker frames
    draw from that speaker's vMF; overlapped frames are the normalized sum
    of one draw per active speaker.
    """
    if seed is None:
        seed = cfg.seed
    rng = np.random.default_rng(seed)
    means = _speaker_means(cfg, rng)
    skew_mean: np.ndarray | None = None
    if cfg.enrollment_skew is not None:
        sk = cfg.enrollment_skew
        if sk.speaker not in means:
            raise ValueError(f"enrollment_skew speaker {sk.speaker!r} not in {sorted(means)}")
        tangent = _off_span_tangent(list(means.values()), means[sk.speaker], rng)
        skew_mean = _rotate(means[sk.speaker], tangent, sk.drift_angle_degrees)

    annotation = Annotation(_turn_layout(cfg, rng))
    bounds, sets = _active_sets(annotation)

    # Per-turn channel/prosody variation: every turn gets its own small
    # rotation of the speaker mean, shared by all frames of that turn.
    turn_bias: dict[str, list[tuple[float, np.ndarray]]] = {s: [] for s in means}
    if cfg.turn_drift_degrees > 0:
        for seg, label in annotation:
            turn_bias[label].append((seg.start, rng.standard_normal(cfg.dimension)))
    bias_starts = {s: [start for start, _ in lst] for s, lst in turn_bias.items()}

    def mean_for(speaker: str, at: float) -> np.ndarray:
        if (
            skew_mean is not None
            and speaker == cfg.enrollment_skew.speaker
            and at < cfg.enrollment_skew.skew_duration_seconds
        ):
            base = skew_mean
        else:
            base = means[speaker]
        if cfg.turn_drift_degrees > 0:
            idx = bisect_right(bias_starts[speaker], at + 1e-12) - 1
            _, g = turn_bias[speaker][idx]
            tangent = g - (g @ base) * base
            norm = np.linalg.norm(tangent)
            if norm > 1e-12:
                base = _rotate(base, tangent / norm, cfg.turn_drift_degrees)
        return base

    records: list[EmbeddingRecord] = []
    for lo, hi, active in zip(bounds, bounds[1:], sets):
        if not active:
            continue
        n = int(math.floor((hi - lo) / cfg.frame_period + 1e-9))
        speakers = sorted(active)
        for k in range(n):
            f_start = lo + k * cfg.frame_period
            f_end = f_start + cfg.frame_period
            draws = [sample_vmf(mean_for(s, f_start), cfg.kappa, rng) for s in speakers]
            if len(speakers) == 1:
                vector, truth = draws[0], GroundTruth.for_speaker(speakers[0])
            else:
                vector, truth = normalize(np.sum(draws, axis=0)), OVERLAP
            records.append(EmbeddingRecord(EmbeddingFrame(f_start, f_end, vector), truth))

    uem = Timeline([Segment(0.0, cfg.duration)])
    return Conversation(records=records, annotation=annotation, uem=uem)


def generate_corpus(cfg: GenConfig, seeds: Sequence[int]) -> list[tuple[int, Conversation]]:
    """Independent conversations for each seed (same config otherwise)."""
    return [(s, generate_conversation(replace(cfg, seed=s))) for s in seeds]
