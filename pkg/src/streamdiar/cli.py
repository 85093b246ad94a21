"""Command-line interface: generate, run, sweep, score.

Exit codes are a stable contract: 0 success, 1 usage error (bad flags or
arguments), 2 data error (unreadable, malformed, or inconsistent inputs).
CSV-writing paths also render a matplotlib figure next to the CSV.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .core import Annotation
from .datagen import GenConfig, generate_conversation
from .harness import (
    EvalSetting,
    SweepConfig,
    aggregate,
    evaluate_stream,
    load_stream,
    sweep_streams,
    write_aggregate,
    write_conversation,
)
from .io import parse_rttm, parse_uem, write_report
from .metrics import (
    FULL_EACH_SIDE,
    HALF_EACH_SIDE,
    DerReport,
    MetricConfig,
    der,
)

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this contract wants 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _add_metric_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--collar", type=float, default=0.25, help="seconds excluded around reference boundaries (default 0.25)")
    parser.add_argument(
        "--collar-semantics",
        choices=(HALF_EACH_SIDE, FULL_EACH_SIDE),
        default=HALF_EACH_SIDE,
        help="collar split per side (default half_each_side)",
    )
    parser.add_argument("--no-skip-overlap", action="store_true", help="score overlapped reference speech too")
    parser.add_argument("--mapping", choices=("identity", "optimal"), default="identity", help="hypothesis label mapping (default identity)")


def _metric_config(args: argparse.Namespace) -> MetricConfig:
    return MetricConfig(
        collar=args.collar,
        skip_overlap=not args.no_skip_overlap,
        collar_semantics=args.collar_semantics,
    )


def _add_session_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--batch-size", type=int, default=10, help="self-training batch size (default 10)")
    parser.add_argument("--threshold", type=float, default=None, help="minimum prediction score to accept a pseudo-label (default: accept all)")
    parser.add_argument("--merge-gap", type=float, default=0.3, help="max gap bridged when merging frames into turns (default 0.3)")
    parser.add_argument("--language", default="synthetic", help="language tag recorded in report rows")
    parser.add_argument("--seed", type=int, default=0, help="accepted for interface stability; evaluation itself is deterministic")


def _cmd_generate(args: argparse.Namespace) -> int:
    cfg = GenConfig.from_toml(Path(args.config).read_text())
    base_seed = cfg.seed if args.seed is None else args.seed
    for i in range(args.count):
        seed = base_seed + i
        conv = generate_conversation(replace(cfg, seed=seed))
        stem = f"{cfg.name}_s{seed:04d}"
        paths = write_conversation(conv, args.out, stem)
        speech = conv.annotation.speech_timeline().duration()
        print(f"{stem}: {len(conv.records)} frames, {speech:.1f}s speech -> {', '.join(p.name for p in paths)}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    stream = load_stream(args.embeddings, args.rttm, args.uem)
    setting = EvalSetting(
        classifier=args.classifier,
        adaptive=args.adaptive,
        train_seconds=args.train_seconds,
        batch_size=args.batch_size,
        score_threshold=args.threshold,
    )
    evaluation = evaluate_stream(
        stream,
        setting,
        metric_config=_metric_config(args),
        mapping=args.mapping,
        merge_gap=args.merge_gap,
        language=args.language,
    )
    csv_text = write_report([evaluation.row])
    if args.out is None:
        sys.stdout.write(csv_text)
    else:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv_text)
        from .plots import render_der_figure

        figure = render_der_figure([evaluation.row], out.with_suffix(".png"))
        print(f"wrote {out} and {figure}")
    return 0


def _sibling(path: Path, suffix: str) -> Path:
    candidate = path.with_suffix(suffix)
    if not candidate.exists():
        raise OSError(f"missing companion file: {candidate}")
    return candidate


def _cmd_sweep(args: argparse.Namespace) -> int:
    streams = []
    for raw in args.embeddings:
        path = Path(raw)
        streams.append(load_stream(path, _sibling(path, ".rttm"), _sibling(path, ".uem")))
    modes = {"both": (False, True), "static": (False,), "adaptive": (True,)}[args.modes]
    cfg = SweepConfig(
        train_seconds=tuple(args.train_seconds),
        classifiers=tuple(args.classifiers),
        adaptive=modes,
        batch_size=args.batch_size,
        score_threshold=args.threshold,
        jobs=args.jobs,
    )
    evaluations = sweep_streams(
        streams,
        cfg,
        metric_config=_metric_config(args),
        mapping=args.mapping,
        merge_gap=args.merge_gap,
        language=args.language,
    )
    aggregates = aggregate(evaluations)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files_csv = out / "files.csv"
    summary_csv = out / "summary.csv"
    files_csv.write_text(write_report([ev.row for ev in evaluations]))
    summary_csv.write_text(write_aggregate(aggregates))
    from .plots import render_sweep_figure

    figure = render_sweep_figure(aggregates, out / "accuracy.png")
    print(f"swept {len(streams)} file(s) x {len(cfg.train_seconds)} budgets: "
          f"{files_csv}, {summary_csv}, {figure}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    references = parse_rttm(Path(args.reference).read_text())
    hypotheses = parse_rttm(Path(args.hypothesis).read_text())
    uems = parse_uem(Path(args.uem).read_text())
    cfg = _metric_config(args)

    reports = []
    for file_id in sorted(references):
        if file_id not in uems:
            raise ValueError(f"no UEM region for file id {file_id!r}")
        hyp = hypotheses.get(file_id, Annotation([]))
        report = der(references[file_id], hyp, uems[file_id], cfg, mapping=args.mapping)
        reports.append(report)
        print(
            f"{file_id} confusion {report.confusion_rate:.6f} fa {report.fa_rate:.6f} "
            f"miss {report.miss_rate:.6f} der {report.der:.6f}"
        )
    if len(reports) > 1:
        combined = DerReport.combined(reports)
        print(
            f"ALL confusion {combined.confusion_rate:.6f} fa {combined.fa_rate:.6f} "
            f"miss {combined.miss_rate:.6f} der {combined.der:.6f}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="streamdiar", description="Streaming speaker diarization with chronological self-training.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", parents=[], help="generate synthetic conversations", description="Generate synthetic conversations from a TOML config.")
    p_gen.add_argument("--config", required=True, help="TOML generator config")
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.add_argument("--seed", type=int, default=None, help="base seed (default: config seed)")
    p_gen.add_argument("--count", type=int, default=1, help="number of conversations (seeds base..base+count-1)")
    p_gen.set_defaults(func=_cmd_generate)

    p_run = sub.add_parser("run", help="run one diarization session and report", description="Run enrollment + streaming classification on one conversation.")
    p_run.add_argument("embeddings", help="embedding stream (.jsonl)")
    p_run.add_argument("rttm", help="reference annotation (.rttm)")
    p_run.add_argument("uem", help="scoring regions (.uem)")
    p_run.add_argument("--classifier", choices=("knn", "gnb", "nc"), required=True)
    p_run.add_argument("--adaptive", action="store_true", help="enable chronological self-training")
    p_run.add_argument("--train-seconds", type=float, default=1.0, help="enrollment speech per speaker (default 1.0)")
    _add_session_flags(p_run)
    _add_metric_flags(p_run)
    p_run.add_argument("--out", default=None, help="write the CSV here (plus a .png figure) instead of stdout")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep enrollment budgets over a corpus", description="Evaluate a grid of settings; each .jsonl needs sibling .rttm/.uem files.")
    p_sweep.add_argument("embeddings", nargs="+", help="embedding streams (.jsonl, with sibling .rttm/.uem)")
    p_sweep.add_argument("--out", required=True, help="output directory (files.csv, summary.csv, accuracy.png)")
    p_sweep.add_argument(
        "--train-seconds",
        type=float,
        nargs="+",
        default=[0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0],
        help="strictly increasing enrollment budgets",
    )
    p_sweep.add_argument("--classifiers", nargs="+", choices=("knn", "gnb", "nc"), default=["knn", "gnb", "nc"])
    p_sweep.add_argument("--modes", choices=("both", "static", "adaptive"), default="both")
    p_sweep.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    _add_session_flags(p_sweep)
    _add_metric_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_score = sub.add_parser("score", help="score a hypothesis RTTM against a reference", description="Standalone DER scorer for external hypothesis files.")
    p_score.add_argument("reference", help="reference .rttm")
    p_score.add_argument("hypothesis", help="hypothesis .rttm")
    p_score.add_argument("uem", help="scoring regions (.uem)")
    _add_metric_flags(p_score)
    p_score.set_defaults(func=_cmd_score)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT


def console_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
