"""Experiment driver: load streams, run sessions, score, aggregate.

Ties the pieces together for the CLI and the test suite: a Stream bundles
one conversation's frames with its reference annotation and UEM; evaluate
runs enrollment -> session -> accuracy + DER for one setting; sweep runs a
grid of settings over many files with the test region pinned to the
largest enrollment budget so every setting is scored on identical frames.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean, pstdev
from typing import Sequence

from .classifiers import ClassifierConfig
from .core import Annotation, GroundTruth, Segment, Timeline, truth_for_frames
from .datagen import Conversation
from .io import (
    EmbeddingRecord,
    ReportRow,
    parse_rttm,
    parse_uem,
    read_embeddings,
    write_embeddings,
    write_rttm,
    write_uem,
)
from .metrics import DerReport, MetricConfig, accuracy, der, frames_to_annotation
from .session import SelfTrainConfig, SplitSpec, chronological_split, run_session

DEFAULT_TRAIN_SECONDS = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0)


@dataclass(frozen=True)
class EvalSetting:
    """One (classifier, adaptive, enrollment budget) combination."""

    classifier: str
    adaptive: bool = False
    train_seconds: float = 1.0
    batch_size: int = 10
    score_threshold: float | None = None
    k: int = 3
    var_smoothing: float = 0.1
    uniform_priors: bool = False

    def classifier_config(self) -> ClassifierConfig:
        return ClassifierConfig(
            kind=self.classifier,
            k=self.k,
            var_smoothing=self.var_smoothing,
            uniform_priors=self.uniform_priors,
        )

    def selftrain_config(self) -> SelfTrainConfig:
        return SelfTrainConfig(
            batch_size=self.batch_size,
            score_threshold=self.score_threshold,
            adaptive=self.adaptive,
        )


@dataclass(frozen=True)
class SweepConfig:
    """Grid for the training-time sweep."""

    train_seconds: tuple[float, ...] = DEFAULT_TRAIN_SECONDS
    classifiers: tuple[str, ...] = ("knn", "gnb", "nc")
    adaptive: tuple[bool, ...] = (False, True)
    batch_size: int = 10
    score_threshold: float | None = None
    jobs: int = 1

    def __post_init__(self) -> None:
        if not self.train_seconds or not self.classifiers or not self.adaptive:
            raise ValueError("train_seconds, classifiers and adaptive must be nonempty")
        if any(b <= a for a, b in zip(self.train_seconds, self.train_seconds[1:])):
            raise ValueError("train_seconds must be strictly increasing")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def settings(self, train_seconds: float) -> list[EvalSetting]:
        return [
            EvalSetting(
                classifier=clf,
                adaptive=adaptive,
                train_seconds=train_seconds,
                batch_size=self.batch_size,
                score_threshold=self.score_threshold,
            )
            for clf in self.classifiers
            for adaptive in self.adaptive
        ]


@dataclass(frozen=True)
class Stream:
    """One conversation: labeled frames plus its reference files."""

    file_id: str
    records: list[EmbeddingRecord]
    annotation: Annotation | None
    uem: Timeline

    @classmethod
    def from_conversation(cls, conv: Conversation, file_id: str) -> "Stream":
        return cls(file_id=file_id, records=conv.records, annotation=conv.annotation, uem=conv.uem)

    def truth(self) -> list[GroundTruth]:
        """Embedded per-frame truth, or truth derived from the annotation."""
        embedded = [r.truth for r in self.records]
        if all(t is not None for t in embedded):
            return embedded
        if self.annotation is None:
            raise ValueError(
                f"{self.file_id}: stream lacks truth labels and no reference annotation was given"
            )
        return truth_for_frames([r.frame for r in self.records], self.annotation)


def load_stream(embeddings_path: str | Path, rttm_path: str | Path, uem_path: str | Path) -> Stream:
    """Read one conversation's files; ids must agree with the stream stem."""
    embeddings_path = Path(embeddings_path)
    file_id = embeddings_path.stem
    records = read_embeddings(embeddings_path.read_text())
    annotations = parse_rttm(Path(rttm_path).read_text())
    if file_id not in annotations:
        raise ValueError(
            f"{rttm_path}: no annotation for file id {file_id!r} (found {sorted(annotations) or 'none'})"
        )
    uems = parse_uem(Path(uem_path).read_text())
    if file_id not in uems:
        raise ValueError(
            f"{uem_path}: no UEM for file id {file_id!r} (found {sorted(uems) or 'none'})"
        )
    return Stream(file_id, records, annotations[file_id], uems[file_id])


def write_conversation(conv: Conversation, out_dir: str | Path, stem: str) -> list[Path]:
    """Write a generated conversation as <stem>.jsonl/.rttm/.uem."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}.jsonl", out / f"{stem}.rttm", out / f"{stem}.uem"]
    paths[0].write_text(write_embeddings(conv.records))
    paths[1].write_text(write_rttm({stem: conv.annotation}))
    paths[2].write_text(write_uem({stem: conv.uem}))
    return paths


@dataclass(frozen=True)
class Evaluation:
    """A report row plus the raw error durations behind it."""

    row: ReportRow
    report: DerReport


def evaluate_stream(
    stream: Stream,
    setting: EvalSetting,
    *,
    fixed_test_start: float | None = None,
    metric_config: MetricConfig = MetricConfig(),
    mapping: str = "identity",
    merge_gap: float = 0.3,
    language: str = "synthetic",
) -> Evaluation:
    """Enrollment split -> session -> accuracy and DER for one setting."""
    if stream.annotation is None:
        raise ValueError(f"{stream.file_id}: DER needs a reference annotation")
    frames = [r.frame for r in stream.records]
    truth = stream.truth()
    split = SplitSpec(setting.train_seconds, fixed_test_start=fixed_test_start)
    train, test_start = chronological_split(frames, truth, split)
    if test_start >= len(frames):
        raise ValueError(f"{stream.file_id}: no test frames after the enrollment split")

    result = run_session(
        train, frames[test_start:], setting.classifier_config(), setting.selftrain_config()
    )
    acc = accuracy(result.predictions, truth[test_start:])

    test_begin = frames[test_start].start
    extent = stream.uem.extent()
    if extent.end <= test_begin:
        raise ValueError(f"{stream.file_id}: UEM ends before the test region begins")
    test_uem = stream.uem.intersection(Timeline([Segment(test_begin, extent.end)]))
    hypothesis = frames_to_annotation(
        list(zip(frames[test_start:], (p.label for p in result.predictions))), merge_gap
    )
    report = der(stream.annotation, hypothesis, test_uem, metric_config, mapping)
    row = ReportRow(
        file=stream.file_id,
        language=language,
        classifier=setting.classifier,
        adaptive=setting.adaptive,
        train_seconds=setting.train_seconds,
        accuracy=acc,
        confusion=report.confusion_rate,
        fa=report.fa_rate,
        miss=report.miss_rate,
        der=report.der,
    )
    return Evaluation(row=row, report=report)


def sweep_stream(
    stream: Stream,
    cfg: SweepConfig,
    *,
    metric_config: MetricConfig = MetricConfig(),
    mapping: str = "identity",
    merge_gap: float = 0.3,
    language: str = "synthetic",
) -> list[Evaluation]:
    """All sweep settings on one file, scored on a fixed test region.

    The test region starts where the largest enrollment budget's split
    lands, so smaller budgets are evaluated on exactly the same frames.
    """
    frames = [r.frame for r in stream.records]
    truth = stream.truth()
    _, split_at_max = chronological_split(frames, truth, SplitSpec(max(cfg.train_seconds)))
    if split_at_max >= len(frames):
        raise ValueError(f"{stream.file_id}: no test frames beyond the largest enrollment budget")
    fixed_start = frames[split_at_max].start

    evaluations = []
    for t in cfg.train_seconds:
        for setting in cfg.settings(t):
            evaluations.append(
                evaluate_stream(
                    stream,
                    setting,
                    fixed_test_start=fixed_start,
                    metric_config=metric_config,
                    mapping=mapping,
                    merge_gap=merge_gap,
                    language=language,
                )
            )
    return evaluations


def _sweep_worker(args) -> list[Evaluation]:
    stream, cfg, metric_config, mapping, merge_gap, language = args
    return sweep_stream(
        stream,
        cfg,
        metric_config=metric_config,
        mapping=mapping,
        merge_gap=merge_gap,
        language=language,
    )


def sweep_streams(
    streams: Sequence[Stream],
    cfg: SweepConfig,
    *,
    metric_config: MetricConfig = MetricConfig(),
    mapping: str = "identity",
    merge_gap: float = 0.3,
    language: str = "synthetic",
) -> list[Evaluation]:
    """Sweep every stream, optionally across a process pool, sorted output."""
    if not streams:
        raise ValueError("no streams to sweep")
    args = [(s, cfg, metric_config, mapping, merge_gap, language) for s in streams]
    if cfg.jobs == 1 or len(streams) == 1:
        per_file = [_sweep_worker(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            per_file = list(pool.map(_sweep_worker, args))
    evaluations = [ev for file_evs in per_file for ev in file_evs]
    evaluations.sort(key=lambda ev: ev.row.sort_key())
    return evaluations


@dataclass(frozen=True)
class AggregateRow:
    """Cross-file summary of one sweep setting."""

    language: str
    classifier: str
    adaptive: bool
    train_seconds: float
    n_files: int
    accuracy_mean: float
    accuracy_std: float
    der_mean: float
    der_weighted: float


AGGREGATE_HEADER = (
    "language,classifier,adaptive,train_seconds,n_files,"
    "accuracy_mean,accuracy_std,der_mean,der_weighted"
)


def aggregate(evaluations: Sequence[Evaluation]) -> list[AggregateRow]:
    """Group evaluations by setting; mean/std accuracy plus two DER views.

    der_mean averages per-file DERs equally; der_weighted pools the error
    durations first, so long files count proportionally to their length.
    """
    if not evaluations:
        raise ValueError("nothing to aggregate")
    groups: dict[tuple, list[Evaluation]] = {}
    for ev in evaluations:
        key = (ev.row.language, ev.row.classifier, ev.row.adaptive, ev.row.train_seconds)
        groups.setdefault(key, []).append(ev)
    rows = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], k[2], k[3])):
        evs = groups[key]
        accs = [ev.row.accuracy for ev in evs]
        rows.append(
            AggregateRow(
                language=key[0],
                classifier=key[1],
                adaptive=key[2],
                train_seconds=key[3],
                n_files=len(evs),
                accuracy_mean=fmean(accs),
                accuracy_std=pstdev(accs),
                der_mean=fmean(ev.row.der for ev in evs),
                der_weighted=DerReport.combined([ev.report for ev in evs]).der,
            )
        )
    return rows


def write_aggregate(rows: Sequence[AggregateRow]) -> str:
    if not rows:
        raise ValueError("no rows to report")
    out = [AGGREGATE_HEADER]
    for r in rows:
        out.append(
            f"{r.language},{r.classifier},{'true' if r.adaptive else 'false'},"
            f"{r.train_seconds:.6f},{r.n_files},{r.accuracy_mean:.6f},"
            f"{r.accuracy_std:.6f},{r.der_mean:.6f},{r.der_weighted:.6f}"
        )
    return "\n".join(out) + "\n"
