"""Text formats: RTTM annotations, UEM maps, embedding streams, CSV reports.

All parsers are pure text-in/objects-out and raise ParseError with a line
number on malformed input instead of skipping it. Only `;;` comment lines
and blank lines are ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

from .core import (
    TIME_EPS,
    Annotation,
    EmbeddingFrame,
    GroundTruth,
    NON_SPEECH,
    OVERLAP,
    Segment,
    Timeline,
)

# Reserved truth tokens in embedding streams; anything else is a speaker id.
TRUTH_OVERLAP = "OVERLAP"
TRUTH_NON_SPEECH = "NONSPEECH"


class ParseError(ValueError):
    """Malformed input line; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def _lines(text: str | Iterable[str]) -> Iterable[tuple[int, str]]:
    raw = text.splitlines() if isinstance(text, str) else text
    for lineno, line in enumerate(raw, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith(";;"):
            continue
        yield lineno, stripped


def _parse_float(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(lineno, f"non-numeric {what}: {token!r}") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise ParseError(lineno, f"non-finite {what}: {token!r}")
    return value


def parse_rttm(text: str | Iterable[str]) -> dict[str, Annotation]:
    """Parse RTTM SPEAKER records, grouped by file id.

    Expected fields: SPEAKER <file> <chan> <tbeg> <tdur> <NA> <NA>
    <speaker> <NA> <NA>. Consecutive records are kept as separate turns
    (no merging); the channel field is parsed but ignored.
    """
    turns: dict[str, list[tuple[Segment, str]]] = {}
    for lineno, line in _lines(text):
        fields = line.split()
        if len(fields) != 10:
            raise ParseError(lineno, f"expected 10 fields, got {len(fields)}")
        if fields[0] != "SPEAKER":
            raise ParseError(lineno, f"unsupported record type {fields[0]!r}")
        file_id = fields[1]
        tbeg = _parse_float(fields[3], lineno, "tbeg")
        tdur = _parse_float(fields[4], lineno, "tdur")
        if tdur <= 0:
            raise ParseError(lineno, f"tdur must be > 0, got {fields[4]}")
        turns.setdefault(file_id, []).append((Segment(tbeg, tbeg + tdur), fields[7]))
    return {file_id: Annotation(t) for file_id, t in turns.items()}


def write_rttm(annotations: dict[str, Annotation]) -> str:
    """Serialize annotations as RTTM SPEAKER records (channel 1)."""
    lines = []
    for file_id in sorted(annotations):
        for seg, label in annotations[file_id]:
            lines.append(
                f"SPEAKER {file_id} 1 {seg.start:.6f} {seg.duration:.6f} "
                f"<NA> <NA> {label} <NA> <NA>"
            )
    return "\n".join(lines) + "\n" if lines else ""


def parse_uem(text: str | Iterable[str]) -> dict[str, Timeline]:
    """Parse UEM lines `<file> <chan> <tbeg> <tend>`, merged per file."""
    regions: dict[str, list[Segment]] = {}
    for lineno, line in _lines(text):
        fields = line.split()
        if len(fields) != 4:
            raise ParseError(lineno, f"expected 4 fields, got {len(fields)}")
        file_id = fields[0]
        tbeg = _parse_float(fields[2], lineno, "tbeg")
        tend = _parse_float(fields[3], lineno, "tend")
        if tend <= tbeg:
            raise ParseError(lineno, f"tend must be > tbeg, got [{fields[2]}, {fields[3]}]")
        regions.setdefault(file_id, []).append(Segment(tbeg, tend))
    return {file_id: Timeline(segs) for file_id, segs in regions.items()}


def write_uem(uems: dict[str, Timeline]) -> str:
    lines = [
        f"{file_id} 1 {seg.start:.6f} {seg.end:.6f}"
        for file_id in sorted(uems)
        for seg in uems[file_id]
    ]
    return "\n".join(lines) + "\n" if lines else ""


@dataclass(frozen=True)
class EmbeddingRecord:
    """One stream line: a frame plus its optional ground-truth label."""

    frame: EmbeddingFrame
    truth: GroundTruth | None

    @property
    def truth_token(self) -> str | None:
        if self.truth is None:
            return None
        if self.truth == OVERLAP:
            return TRUTH_OVERLAP
        if self.truth == NON_SPEECH:
            return TRUTH_NON_SPEECH
        return self.truth.speaker


def _truth_from_token(token: str | None) -> GroundTruth | None:
    if token is None:
        return None
    if token == TRUTH_OVERLAP:
        return OVERLAP
    if token == TRUTH_NON_SPEECH:
        return NON_SPEECH
    return GroundTruth.for_speaker(token)


def read_embeddings(stream: str | Iterable[str]) -> list[EmbeddingRecord]:
    """Read a line-delimited JSON embedding stream.

    Each line is {"start": s, "end": e, "v": [...]} with an optional
    "truth" string. Dimension is pinned by the first record; timestamps
    must be chronologically non-decreasing across records.
    """
    records: list[EmbeddingRecord] = []
    dimension: int | None = None
    prev_start = None
    for lineno, line in _lines(stream):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise ParseError(lineno, "record must be a JSON object")
        missing = {"start", "end", "v"} - obj.keys()
        if missing:
            raise ParseError(lineno, f"missing fields: {', '.join(sorted(missing))}")
        try:
            frame = EmbeddingFrame(float(obj["start"]), float(obj["end"]), obj["v"])
        except (TypeError, ValueError) as exc:
            raise ParseError(lineno, str(exc)) from None
        if dimension is None:
            dimension = frame.dimension
        elif frame.dimension != dimension:
            raise ParseError(
                lineno, f"dimension {frame.dimension} != {dimension} of first record"
            )
        if prev_start is not None and frame.start < prev_start - TIME_EPS:
            raise ParseError(lineno, f"timestamps out of order: {frame.start} after {prev_start}")
        prev_start = frame.start
        truth = obj.get("truth")
        if truth is not None and not isinstance(truth, str):
            raise ParseError(lineno, "truth must be a string when present")
        records.append(EmbeddingRecord(frame, _truth_from_token(truth)))
    return records


def write_embeddings(records: Sequence[EmbeddingRecord]) -> str:
    """Serialize records one JSON object per line, full float precision."""
    lines = []
    for rec in records:
        obj: dict = {"start": rec.frame.start, "end": rec.frame.end}
        if rec.truth is not None:
            obj["truth"] = rec.truth_token
        obj["v"] = [float(x) for x in rec.frame.vector]
        lines.append(json.dumps(obj, separators=(",", ":")))
    return "\n".join(lines) + "\n" if lines else ""


REPORT_HEADER = "file,language,classifier,adaptive,train_seconds,accuracy,confusion,fa,miss,der"


@dataclass(frozen=True)
class ReportRow:
    """One evaluated (file, setting) combination; error fields are rates."""

    file: str
    language: str
    classifier: str
    adaptive: bool
    train_seconds: float
    accuracy: float
    confusion: float
    fa: float
    miss: float
    der: float

    def sort_key(self):
        return (
            self.file,
            self.language,
            self.classifier,
            self.adaptive,
            self.train_seconds,
        )


def write_report(rows: Sequence[ReportRow]) -> str:
    """Render rows as CSV with a fixed header and deterministic order."""
    if not rows:
        raise ValueError("no rows to report")
    out = [REPORT_HEADER]
    for row in sorted(rows, key=ReportRow.sort_key):
        out.append(
            f"{row.file},{row.language},{row.classifier},"
            f"{'true' if row.adaptive else 'false'},{row.train_seconds:.6f},"
            f"{row.accuracy:.6f},{row.confusion:.6f},{row.fa:.6f},"
            f"{row.miss:.6f},{row.der:.6f}"
        )
    return "\n".join(out) + "\n"
