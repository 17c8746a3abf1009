"""Answer parsing, confusion matrices, metrics, averaging and reports.

Scoring is per variant id: a variant counts as predicted-positive when the
answer contains a line ``<id># ...`` for it; the claimed sequence is kept
for auditing but never checked. All ratios with a zero denominator are
reported as 0, and every metric is a percentage.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import asdict, dataclass, field
from importlib import resources
from statistics import fmean
from typing import Iterable, Sequence

from .eventlog import LabeledDataset, ParseError, parse_variant_line

log = logging.getLogger(__name__)


@dataclass
class PredictionSet:
    entries: dict[int, str] = field(default_factory=dict)
    unparsed_lines: list[str] = field(default_factory=list)
    foreign_ids: list[int] = field(default_factory=list)
    duplicate_ids: list[int] = field(default_factory=list)

    @property
    def ids(self) -> set[int]:
        return set(self.entries)


def parse_predictions(text: str, known_ids: Iterable[int] | None = None) -> PredictionSet:
    """Pull ``id# sequence`` lines out of a model answer.

    Lines that do not follow the grammar land in ``unparsed_lines``. With
    ``known_ids``, lines naming other ids are also treated as unparsed and
    their ids listed in ``foreign_ids``. Repeated ids keep the first claim.
    """
    known = None if known_ids is None else set(known_ids)
    out = PredictionSet()
    for line in text.splitlines():
        try:
            vid, _ = parse_variant_line(line)
        except ParseError:
            out.unparsed_lines.append(line)
            continue
        if known is not None and vid not in known:
            out.foreign_ids.append(vid)
            out.unparsed_lines.append(line)
            continue
        if vid in out.entries:
            log.info("duplicate prediction for variant %d ignored", vid)
            out.duplicate_ids.append(vid)
            continue
        out.entries[vid] = line.split("#", 1)[1].strip()
    return out


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


ZERO_MATRIX = ConfusionMatrix()


def score(ds: LabeledDataset, preds: PredictionSet) -> ConfusionMatrix:
    positive = preds.ids
    tp = tn = fp = fn = 0
    for lv in ds:
        hit = lv.id in positive
        if lv.is_rework:
            tp += hit
            fn += not hit
        else:
            fp += hit
            tn += not hit
    return ConfusionMatrix(tp, tn, fp, fn)


def _pct(num: int, den: int) -> float:
    return 100.0 * num / den if den else 0.0


@dataclass(frozen=True)
class MetricsRow:
    precision: float
    recall: float
    f1: float
    accuracy: float
    fdr: float
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    distribution: str = ""
    mode: str = ""
    run: int = 0
    status: str = "completed"

    @property
    def matrix(self) -> ConfusionMatrix:
        return ConfusionMatrix(self.tp, self.tn, self.fp, self.fn)

    def to_dict(self) -> dict:
        return asdict(self)


METRICS_FIELDS = ["distribution", "mode", "run", "status", "tp", "tn", "fp", "fn",
                  "precision", "recall", "f1", "accuracy", "fdr"]


def metrics(cm: ConfusionMatrix, distribution: str = "", mode: str = "", run: int = 0,
            status: str = "completed") -> MetricsRow:
    """Precision, recall, F1, accuracy and FDR (percent) for one run.

    A run that hit its deadline scores an all-zero row regardless of ``cm``.
    """
    if status == "deadline_exceeded":
        cm = ZERO_MATRIX
    p = _pct(cm.tp, cm.tp + cm.fp)
    r = _pct(cm.tp, cm.tp + cm.fn)
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return MetricsRow(
        precision=p, recall=r, f1=f1,
        accuracy=_pct(cm.tp + cm.tn, cm.total),
        fdr=_pct(cm.fp, cm.fp + cm.tp),
        tp=cm.tp, tn=cm.tn, fp=cm.fp, fn=cm.fn,
        distribution=distribution, mode=mode, run=run, status=status,
    )


@dataclass(frozen=True)
class CellAverage:
    distribution: str
    mode: str
    n_runs: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    fdr: float


def aggregate(rows: Sequence[MetricsRow]) -> CellAverage:
    if not rows:
        raise ValueError("cannot average an empty set of runs")
    cells = {(r.distribution, r.mode) for r in rows}
    if len(cells) > 1:
        raise ValueError(f"rows span several cells: {sorted(cells)}")
    return CellAverage(
        distribution=rows[0].distribution, mode=rows[0].mode, n_runs=len(rows),
        precision=fmean(r.precision for r in rows),
        recall=fmean(r.recall for r in rows),
        f1=fmean(r.f1 for r in rows),
        accuracy=fmean(r.accuracy for r in rows),
        fdr=fmean(r.fdr for r in rows),
    )


def metrics_csv(rows: Iterable[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, METRICS_FIELDS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        d = r.to_dict()
        for k in ("precision", "recall", "f1", "accuracy", "fdr"):
            d[k] = f"{d[k]:.4f}"
        w.writerow({k: d[k] for k in METRICS_FIELDS})
    return buf.getvalue()


def read_metrics_csv(text: str) -> list[MetricsRow]:
    """Load rows and recompute every metric from the stored counts."""
    rows = []
    reader = csv.DictReader(io.StringIO(text))
    for lineno, d in enumerate(reader, start=2):
        try:
            cm = ConfusionMatrix(int(d["tp"]), int(d["tn"]), int(d["fp"]), int(d["fn"]))
            rows.append(metrics(cm, d["distribution"], d["mode"], int(d["run"]), d["status"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"bad metrics row: {e}", lineno) from None
    return rows


@dataclass(frozen=True)
class Baseline:
    method: str
    accuracy: float
    fdr: float


def load_baselines(path=None) -> list[Baseline]:
    if path is None:
        text = resources.files("reworkbench").joinpath("data", "baselines.csv").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    return [Baseline(d["method"], float(d["accuracy"]), float(d["fdr"]))
            for d in csv.DictReader(io.StringIO(text))]


def _fmt(x: float) -> str:
    s = f"{x:.2f}".rstrip("0").rstrip(".")
    return f"{s}%"


_MODE_NAMES = {"zero": "Zero shot", "one": "One shot", "few": "Few shot"}


def comparison_rows(cells: Sequence[CellAverage], baselines: Sequence[Baseline],
                    label: str = "LLM") -> list[dict]:
    """Baselines followed by the best cell (by accuracy) of each distribution."""
    rows = [{"method": b.method, "accuracy": b.accuracy, "fdr": b.fdr, "source": "reference"}
            for b in baselines]
    best: dict[str, CellAverage] = {}
    for c in cells:
        if c.distribution not in best or c.accuracy > best[c.distribution].accuracy:
            best[c.distribution] = c
    for dist, c in best.items():
        rows.append({"method": f"{label} - {dist.capitalize()} ({c.mode}-shot)",
                     "accuracy": c.accuracy, "fdr": c.fdr, "source": "harness"})
    if rows:
        top_acc = max(r["accuracy"] for r in rows)
        low_fdr = min(r["fdr"] for r in rows)
        for r in rows:
            r["best_accuracy"] = r["accuracy"] == top_acc
            r["best_fdr"] = r["fdr"] == low_fdr
    return rows


def render_report(cells: Sequence[CellAverage], baselines: Sequence[Baseline],
                  runs: Sequence[MetricsRow] = (), label: str = "LLM") -> tuple[str, str]:
    """Markdown report plus the comparison table as CSV."""
    md = ["# Rework anomaly detection report", ""]
    if runs:
        md += ["## Per-run results", "",
               "| Distribution | Prompt | Run | Status | TP | TN | FP | FN "
               "| Precision | Recall | F1 | Accuracy | FDR |",
               "|---|---|---|---|---|---|---|---|---|---|---|---|---|"]
        for r in runs:
            md.append(f"| {r.distribution} | {_MODE_NAMES.get(r.mode, r.mode)} | {r.run} | {r.status} "
                      f"| {r.tp} | {r.tn} | {r.fp} | {r.fn} | {_fmt(r.precision)} | {_fmt(r.recall)} "
                      f"| {_fmt(r.f1)} | {_fmt(r.accuracy)} | {_fmt(r.fdr)} |")
        md.append("")
    if cells:
        md += ["## Averages per cell", "",
               "| Distribution | Prompt | Runs | Avg precision | Avg recall | Avg F1 "
               "| Avg accuracy | Avg FDR |",
               "|---|---|---|---|---|---|---|---|"]
        for c in cells:
            md.append(f"| {c.distribution} | {_MODE_NAMES.get(c.mode, c.mode)} | {c.n_runs} "
                      f"| {_fmt(c.precision)} | {_fmt(c.recall)} | {_fmt(c.f1)} "
                      f"| {_fmt(c.accuracy)} | {_fmt(c.fdr)} |")
        md.append("")

    comp = comparison_rows(cells, baselines, label)
    md += ["## Comparison with reference methods", "",
           "Best value per column in bold.", "",
           "| Method | Accuracy | FDR |", "|---|---|---|"]
    for r in comp:
        acc = _fmt(r["accuracy"])
        fdr = _fmt(r["fdr"])
        if r["best_accuracy"]:
            acc = f"**{acc}**"
        if r["best_fdr"]:
            fdr = f"**{fdr}**"
        md.append(f"| {r['method']} | {acc} | {fdr} |")
    md.append("")

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "accuracy", "fdr", "source", "best_accuracy", "best_fdr"])
    for r in comp:
        w.writerow([r["method"], f"{r['accuracy']:.2f}", f"{r['fdr']:.2f}", r["source"],
                    int(r["best_accuracy"]), int(r["best_fdr"])])
    return "\n".join(md), buf.getvalue()
