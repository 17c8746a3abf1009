import csv
import io
import json
import time

import pytest

from reworkbench.cli import main
from reworkbench.eventlog import Label, dataset_to_csv, read_dataset
from reworkbench.evalkit import read_metrics_csv


def _rows(path):
    return read_metrics_csv(path.read_text())


def test_generate_defaults(tmp_path):
    assert main(["generate", "--seed", "3", "--out", str(tmp_path / "d")]) == 0
    n = read_dataset(tmp_path / "d" / "normals.csv")
    a = read_dataset(tmp_path / "d" / "anomalies.csv")
    assert (len(n), len(a)) == (689, 71)
    assert all(lv.label is Label.NORMAL for lv in n)
    assert all(lv.label is Label.REWORK for lv in a)


def test_generate_is_seeded(tmp_path):
    for name in ("x", "y"):
        main(["generate", "--seed", "9", "--n-normal", "50", "--n-anomalous", "5",
              "--out", str(tmp_path / name)])
    for f in ("normals.csv", "anomalies.csv"):
        assert (tmp_path / "x" / f).read_bytes() == (tmp_path / "y" / f).read_bytes()


def test_generate_without_anomalies(tmp_path):
    assert main(["generate", "--n-normal", "30", "--n-anomalous", "0",
                 "--out", str(tmp_path)]) == 0
    assert len(read_dataset(tmp_path / "anomalies.csv")) == 0


def test_layout_writes_outputs(tmp_path):
    assert main(["layout", "--distribution", "exponential", "--seed", "1",
                 "--out", str(tmp_path)]) == 0
    ds = read_dataset(tmp_path / "dataset.csv")
    assert len(ds) == 760 and sum(lv.is_rework for lv in ds) == 71
    side = json.loads((tmp_path / "layout.json").read_text())
    assert side["spec"]["kind"] == "exponential" and len(side["insertion_indices"]) == 71
    hist = list(csv.DictReader(io.StringIO((tmp_path / "histogram.csv").read_text())))
    assert len(hist) == 10 and sum(int(r["count"]) for r in hist) == 71


def test_layout_from_files(tmp_path):
    main(["generate", "--n-normal", "40", "--n-anomalous", "4", "--out", str(tmp_path / "d")])
    assert main(["layout", "--distribution", "uniform", "--data", str(tmp_path / "d"),
                 "--out", str(tmp_path / "l")]) == 0
    assert len(read_dataset(tmp_path / "l" / "dataset.csv")) == 44


def test_run_mock_perfect(tmp_path):
    t0 = time.monotonic()
    code = main(["run", "--distribution", "uniform", "--prompt", "few", "--repeats", "1",
                 "--provider", "mock-perfect", "--out", str(tmp_path)])
    assert code == 0
    assert time.monotonic() - t0 < 10
    (row,) = _rows(tmp_path / "metrics.csv")
    assert (row.precision, row.recall, row.accuracy, row.fdr) == (100, 100, 100, 0)
    run_dir = tmp_path / "runs" / "uniform-few-1"
    for name in ("config.json", "layout.json", "dataset.csv", "transcript.jsonl",
                 "predictions.txt", "metrics.json"):
        assert (run_dir / name).is_file()
    assert "**100%**" in (tmp_path / "report.md").read_text()


def test_run_mock_delay_scores_zero(tmp_path):
    code = main(["run", "--distribution", "exponential", "--prompt", "zero", "--repeats", "2",
                 "--provider", "mock-delay", "--timeout", "1", "--out", str(tmp_path)])
    assert code == 0
    rows = _rows(tmp_path / "metrics.csv")
    assert len(rows) == 2
    for r in rows:
        assert r.status == "deadline_exceeded"
        assert (r.precision, r.recall, r.f1, r.accuracy, r.fdr) == (0, 0, 0, 0, 0)


def test_full_noisy_grid(tmp_path):
    assert main(["run", "--provider", "mock-noisy", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "metrics.csv")
    assert len(rows) == 27
    assert len({(r.distribution, r.mode) for r in rows}) == 9
    assert all(r.status == "completed" for r in rows)
    md = (tmp_path / "report.md").read_text()
    averages = md.split("## Averages per cell")[1].split("## Comparison")[0]
    assert averages.count("| Few shot | 3 |") == 3


def test_score_matches_live_run(tmp_path):
    main(["run", "--distribution", "normal", "--prompt", "one", "--repeats", "1",
          "--provider", "mock-noisy", "--out", str(tmp_path)])
    run_dir = tmp_path / "runs" / "normal-one-1"
    out = tmp_path / "rescored.csv"
    assert main(["score", "--dataset", str(run_dir / "dataset.csv"),
                 "--predictions", str(run_dir / "predictions.txt"),
                 "--distribution", "normal", "--prompt", "one", "--out", str(out)]) == 0
    assert _rows(out) == _rows(tmp_path / "metrics.csv")


def test_score_empty_predictions(tmp_path, capsys):
    main(["layout", "--distribution", "normal", "--out", str(tmp_path)])
    capsys.readouterr()
    (tmp_path / "p.txt").write_text("")
    assert main(["score", "--dataset", str(tmp_path / "dataset.csv"),
                 "--predictions", str(tmp_path / "p.txt")]) == 0
    (row,) = read_metrics_csv(capsys.readouterr().out)
    assert row.recall == 0 and row.tp == 0 and row.fn == 71


def test_score_reproduces_published_row(tmp_path, reference_shaped):
    from reworkbench.layout import LayoutSpec, layout
    normals, anomalies = reference_shaped
    ds, _ = layout(LayoutSpec("uniform", 0), normals, anomalies)
    (tmp_path / "ds.csv").write_text(dataset_to_csv(ds))
    rework = [lv.id for lv in ds if lv.is_rework]
    normal = [lv.id for lv in ds if not lv.is_rework]
    picked = rework[:66] + normal[:32]
    (tmp_path / "p.txt").write_text("\n".join(f"{i}# Activity A" for i in picked) + "\nthanks\n")
    main(["score", "--dataset", str(tmp_path / "ds.csv"), "--predictions",
          str(tmp_path / "p.txt"), "--out", str(tmp_path / "m.csv")])
    (row,) = _rows(tmp_path / "m.csv")
    assert (row.tp, row.tn, row.fp, row.fn) == (66, 657, 32, 5)
    assert round(row.accuracy, 2) == 95.13


def test_report_recomputes(tmp_path):
    main(["run", "--distribution", "normal", "--prompt", "zero", "--repeats", "1",
          "--out", str(tmp_path)])
    first = (tmp_path / "report.md").read_text()
    (tmp_path / "report.md").unlink()
    assert main(["report", "--runs", str(tmp_path), "--label", "mock-perfect"]) == 0
    assert (tmp_path / "report.md").read_text() == first


def test_bad_input_exits_1(tmp_path):
    (tmp_path / "bad.csv").write_text("id,variant,label\n1,A -> B,maybe\n")
    (tmp_path / "p.txt").write_text("")
    assert main(["score", "--dataset", str(tmp_path / "bad.csv"),
                 "--predictions", str(tmp_path / "p.txt")]) == 1
    assert main(["score", "--dataset", str(tmp_path / "missing.csv"),
                 "--predictions", str(tmp_path / "p.txt")]) == 1


def test_bad_config_exits_1(tmp_path):
    assert main(["run", "--tpm-budget", "0", "--out", str(tmp_path)]) == 1
    assert main(["run", "--normals", "x.csv", "--out", str(tmp_path)]) == 1


def test_provider_error_exits_2(tmp_path, monkeypatch):
    monkeypatch.delenv("RB_TEST_MISSING_KEY", raising=False)
    code = main(["run", "--distribution", "normal", "--prompt", "zero", "--repeats", "1",
                 "--n-normal", "20", "--n-anomalous", "2",
                 "--provider", "openai-compatible", "--api-key-env", "RB_TEST_MISSING_KEY",
                 "--endpoint", "http://127.0.0.1:9", "--out", str(tmp_path)])
    assert code == 2
    (row,) = _rows(tmp_path / "metrics.csv")
    assert row.status == "provider_error"


@pytest.mark.parametrize("argv", [["--help"], ["run", "--help"]])
def test_help(argv):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == 0
