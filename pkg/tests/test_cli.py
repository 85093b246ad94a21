"""Command-line surface: subcommands, exit codes, file outputs."""

import numpy as np
import pytest

from streamdiar.cli import main
from streamdiar.core import Annotation, Segment, Timeline
from streamdiar.io import REPORT_HEADER, parse_rttm, write_rttm, write_uem

SEPARABLE_TOML = """\
name = "separable"
dimension = 8
kappa = 21.0
duration = 120.0
frame_period = 0.2
min_pairwise_angle = 60.0
max_pairwise_angle = 70.0
turn_mean = 2.5
pause_mean = 0.5
"""


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "separable.toml"
    path.write_text(SEPARABLE_TOML)
    return path


@pytest.fixture()
def dataset(tmp_path, config_path, capsys):
    out = tmp_path / "data"
    assert main(["generate", "--config", str(config_path), "--out", str(out), "--seed", "1", "--count", "2"]) == 0
    capsys.readouterr()
    return sorted(out.glob("*.jsonl"))


# ---------------------------------------------------------------------------
# Exit codes


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert main(["run", "--help"]) == 0
    capsys.readouterr()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["run", "a.jsonl", "b.rttm"],  # missing positional
        ["run", "a.jsonl", "b.rttm", "c.uem", "--classifier", "svm"],
        ["generate", "--out", "x"],  # missing --config
        ["sweep", "--out", "x"],  # missing inputs
        ["score", "a.rttm", "b.rttm", "c.uem", "--mapping", "sideways"],
    ],
)
def test_usage_errors_exit_one(argv, capsys):
    assert main(argv) == 1
    capsys.readouterr()


def test_data_errors_exit_two(tmp_path, capsys, dataset):
    missing = str(tmp_path / "nope.toml")
    assert main(["generate", "--config", missing, "--out", str(tmp_path)]) == 2
    jsonl = str(dataset[0])
    assert main(["run", jsonl, str(tmp_path / "nope.rttm"), str(tmp_path / "nope.uem"),
                 "--classifier", "nc"]) == 2
    # sibling .rttm/.uem missing for a stray stream
    stray = tmp_path / "stray.jsonl"
    stray.write_text('{"start":0.0,"end":0.2,"v":[1,0]}\n')
    assert main(["sweep", str(stray), "--out", str(tmp_path / "s")]) == 2
    err = capsys.readouterr().err
    assert "stray" in err


def test_data_error_messages_go_to_stderr(tmp_path, capsys):
    code = main(["generate", "--config", str(tmp_path / "x.toml"), "--out", str(tmp_path)])
    captured = capsys.readouterr()
    assert code == 2
    assert captured.out == ""
    assert "x.toml" in captured.err


# ---------------------------------------------------------------------------
# generate


def test_generate_writes_three_files_per_seed(tmp_path, config_path, capsys):
    out = tmp_path / "corpus"
    assert main(["generate", "--config", str(config_path), "--out", str(out), "--seed", "7"]) == 0
    stdout = capsys.readouterr().out
    assert "separable_s0007" in stdout
    names = sorted(p.name for p in out.iterdir())
    assert names == ["separable_s0007.jsonl", "separable_s0007.rttm", "separable_s0007.uem"]


def test_generate_is_deterministic(tmp_path, config_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["generate", "--config", str(config_path), "--out", str(out), "--seed", "3"]) == 0
    capsys.readouterr()
    for name in ("separable_s0003.jsonl", "separable_s0003.rttm", "separable_s0003.uem"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


# ---------------------------------------------------------------------------
# run


def run_row(capsys, jsonl, *flags):
    base = str(jsonl)[: -len(".jsonl")]
    code = main(["run", f"{base}.jsonl", f"{base}.rttm", f"{base}.uem", *flags])
    out = capsys.readouterr().out
    assert code == 0
    header, row = out.strip().splitlines()
    assert header == REPORT_HEADER
    return dict(zip(header.split(","), row.split(",")))


def test_run_emits_one_csv_row(capsys, dataset):
    row = run_row(capsys, dataset[0], "--classifier", "nc")
    assert row["file"] == dataset[0].stem
    assert row["classifier"] == "nc"
    assert row["adaptive"] == "false"
    assert row["train_seconds"] == "1.000000"  # default budget
    assert 0.0 <= float(row["accuracy"]) <= 1.0
    assert float(row["der"]) == pytest.approx(
        float(row["confusion"]) + float(row["fa"]) + float(row["miss"]), abs=1e-5
    )


def test_run_single_batch_adaptive_matches_static(capsys, dataset):
    static = run_row(capsys, dataset[0], "--classifier", "nc")
    degenerate = run_row(capsys, dataset[0], "--classifier", "nc", "--adaptive",
                         "--batch-size", "1000000")
    static["adaptive"] = degenerate["adaptive"]
    assert static == degenerate


def test_run_writes_csv_and_figure(tmp_path, capsys, dataset):
    out = tmp_path / "reports" / "run.csv"
    base = str(dataset[0])[: -len(".jsonl")]
    code = main(["run", f"{base}.jsonl", f"{base}.rttm", f"{base}.uem",
                 "--classifier", "nc", "--adaptive", "--out", str(out)])
    capsys.readouterr()
    assert code == 0
    assert out.read_text().startswith(REPORT_HEADER)
    figure = out.with_suffix(".png")
    assert figure.exists() and figure.stat().st_size > 0


def test_run_infeasible_split_is_a_data_error(capsys, dataset):
    code = main(["run", str(dataset[0]), str(dataset[0].with_suffix(".rttm")),
                 str(dataset[0].with_suffix(".uem")), "--classifier", "nc",
                 "--train-seconds", "1000"])
    captured = capsys.readouterr()
    assert code == 2
    assert "enrollment" in captured.err


# ---------------------------------------------------------------------------
# sweep


def test_sweep_writes_expected_artifacts(tmp_path, capsys, dataset):
    out = tmp_path / "sweep"
    argv = ["sweep", *map(str, dataset), "--out", str(out),
            "--train-seconds", "0.5", "1", "--classifiers", "nc", "--modes", "both"]
    assert main(argv) == 0
    capsys.readouterr()
    files = (out / "files.csv").read_text()
    summary = (out / "summary.csv").read_text()
    assert files.splitlines()[0] == REPORT_HEADER
    assert len(files.splitlines()) == 1 + len(dataset) * 2 * 2  # files x budgets x modes
    assert len(summary.splitlines()) == 1 + 2 * 2
    assert (out / "accuracy.png").stat().st_size > 0

    again = tmp_path / "sweep2"
    assert main(["sweep", *map(str, dataset), "--out", str(again),
                 "--train-seconds", "0.5", "1", "--classifiers", "nc", "--modes", "both"]) == 0
    capsys.readouterr()
    assert (again / "files.csv").read_text() == files
    assert (again / "summary.csv").read_text() == summary


def test_sweep_modes_filter(tmp_path, capsys, dataset):
    out = tmp_path / "static_only"
    assert main(["sweep", str(dataset[0]), "--out", str(out),
                 "--train-seconds", "1", "--classifiers", "nc", "--modes", "static"]) == 0
    capsys.readouterr()
    body = (out / "files.csv").read_text().splitlines()[1:]
    assert len(body) == 1
    assert ",false," in body[0]


# ---------------------------------------------------------------------------
# score


def write_score_fixture(tmp_path):
    ref = {
        "f1": Annotation([(Segment(0.0, 6.0), "A")]),
        "f2": Annotation([(Segment(0.0, 4.0), "A"), (Segment(4.0, 8.0), "B")]),
    }
    hyp = {
        "f1": Annotation([(Segment(0.0, 4.0), "A"), (Segment(4.0, 6.0), "B")]),
        "f2": Annotation([(Segment(0.0, 4.0), "A"), (Segment(4.0, 8.0), "B")]),
    }
    uem = {"f1": Timeline([Segment(0.0, 10.0)]), "f2": Timeline([Segment(0.0, 10.0)])}
    paths = (tmp_path / "ref.rttm", tmp_path / "hyp.rttm", tmp_path / "all.uem")
    paths[0].write_text(write_rttm(ref))
    paths[1].write_text(write_rttm(hyp))
    paths[2].write_text(write_uem(uem))
    return paths


def test_score_identical_files_report_zero(tmp_path, capsys):
    ref, _, uem = write_score_fixture(tmp_path)
    assert main(["score", str(ref), str(ref), str(uem), "--collar", "0"]) == 0
    out = capsys.readouterr().out
    for line in out.strip().splitlines():
        assert line.endswith("der 0.000000")


def test_score_hand_case_components(tmp_path, capsys):
    ref, hyp, uem = write_score_fixture(tmp_path)
    assert main(["score", str(ref), str(hyp), str(uem), "--collar", "0"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "f1 confusion 0.333333 fa 0.000000 miss 0.000000 der 0.333333"
    assert lines[1] == "f2 confusion 0.000000 fa 0.000000 miss 0.000000 der 0.000000"
    # Combined line pools durations: 2 s confusion over 14 s of speech.
    assert lines[2] == "ALL confusion 0.142857 fa 0.000000 miss 0.000000 der 0.142857"


def test_score_optimal_mapping_flag(tmp_path, capsys):
    ref = {"f1": Annotation([(Segment(0.0, 5.0), "A"), (Segment(5.0, 10.0), "B")])}
    hyp = {"f1": Annotation([(Segment(0.0, 5.0), "X"), (Segment(5.0, 10.0), "Y")])}
    uem = {"f1": Timeline([Segment(0.0, 10.0)])}
    (tmp_path / "r.rttm").write_text(write_rttm(ref))
    (tmp_path / "h.rttm").write_text(write_rttm(hyp))
    (tmp_path / "u.uem").write_text(write_uem(uem))
    assert main(["score", str(tmp_path / "r.rttm"), str(tmp_path / "h.rttm"),
                 str(tmp_path / "u.uem"), "--collar", "0"]) == 0
    identity = capsys.readouterr().out
    assert "der 1.000000" in identity
    assert main(["score", str(tmp_path / "r.rttm"), str(tmp_path / "h.rttm"),
                 str(tmp_path / "u.uem"), "--collar", "0", "--mapping", "optimal"]) == 0
    optimal = capsys.readouterr().out
    assert "der 0.000000" in optimal


def test_score_missing_uem_entry_is_data_error(tmp_path, capsys):
    ref, hyp, _ = write_score_fixture(tmp_path)
    partial = tmp_path / "partial.uem"
    partial.write_text("f1 1 0.0 10.0\n")
    assert main(["score", str(ref), str(hyp), str(partial)]) == 2
    assert "f2" in capsys.readouterr().err


def test_score_missing_uem_file_is_data_error(tmp_path, capsys):
    ref, hyp, _ = write_score_fixture(tmp_path)
    assert main(["score", str(ref), str(hyp), str(tmp_path / "absent.uem")]) == 2
    capsys.readouterr()
