"""Experiment grid: layout, chunking, agent runs, scoring and reporting.

One *run* is a full pass over a laid-out dataset for one distribution and
prompt mode. Chunks are sent in dataset order, each as an independent
conversation, all through one shared token limiter. A chunk that misses
its deadline turns the whole run into an all-zero row; a provider failure
marks the run invalid and keeps it out of the averages.

Artifacts per run, under ``<out>/runs/<run-id>/``::

    config.json  layout.json  dataset.csv  transcript.jsonl
    predictions.txt  metrics.json
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from .eventlog import LabeledVariant, dataset_to_csv
from .evalkit import (CellAverage, MetricsRow, aggregate, load_baselines, metrics,
                      metrics_csv, parse_predictions, render_report, score)
from .gateway import (DelayMockProvider, OpenAICompatibleProvider, OracleMockProvider,
                      ProviderConfig, RunStatus, SlidingWindowLimiter, SystemClock,
                      VirtualClock, run_agent_loop)
from .layout import Distribution, LayoutSpec, arrange_dataset, layout_sidecar, sample_insertion_indices
from .prompting import PromptMode, build_bundle, plan_chunks

log = logging.getLogger(__name__)

PROVIDERS = ("openai-compatible", "mock-perfect", "mock-noisy", "mock-delay")


@dataclass
class ExperimentConfig:
    normals: list[LabeledVariant]
    anomalies: list[LabeledVariant]
    distributions: list[Distribution] = field(default_factory=lambda: list(Distribution))
    modes: list[PromptMode] = field(default_factory=lambda: list(PromptMode))
    repeats: int = 3
    provider: str = "mock-perfect"
    provider_cfg: ProviderConfig = field(default_factory=ProviderConfig)
    out_dir: Path | None = None
    seed: int = 0
    relayout_per_run: bool = False
    fp_rate: float = 0.02
    fn_rate: float = 0.15
    delay_secs: float | None = None
    sigma_fraction: float = 1 / 6
    scale_fraction: float = 1 / 8
    mean_fraction: float = 0.5
    dataset_source: str = "synthetic"

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.provider not in PROVIDERS:
            raise ValueError(f"unknown provider {self.provider!r}")
        self.distributions = [Distribution(d) for d in self.distributions]
        self.modes = [PromptMode(m) for m in self.modes]

    def layout_spec(self, dist: Distribution, run_index: int) -> LayoutSpec:
        seed = self.seed + run_index if self.relayout_per_run else self.seed
        return LayoutSpec(dist, seed, self.mean_fraction, self.sigma_fraction, self.scale_fraction)

    def snapshot(self) -> dict:
        cfg = asdict(self.provider_cfg)
        return {
            "dataset_source": self.dataset_source,
            "n_normal": len(self.normals), "n_anomalous": len(self.anomalies),
            "distributions": [d.value for d in self.distributions],
            "modes": [m.value for m in self.modes],
            "repeats": self.repeats, "provider": self.provider, "provider_cfg": cfg,
            "seed": self.seed, "relayout_per_run": self.relayout_per_run,
            "fp_rate": self.fp_rate, "fn_rate": self.fn_rate, "delay_secs": self.delay_secs,
            "sigma_fraction": self.sigma_fraction, "scale_fraction": self.scale_fraction,
            "mean_fraction": self.mean_fraction,
        }


@dataclass
class RunRecord:
    run_id: str
    config: dict
    layout: str
    dataset_csv: str
    transcript_jsonl: str
    predictions: str
    row: MetricsRow
    duration: float
    error: str | None = None

    def write(self, root: Path) -> Path:
        d = root / "runs" / self.run_id
        d.mkdir(parents=True, exist_ok=True)
        (d / "config.json").write_text(json.dumps(self.config, indent=2) + "\n")
        (d / "layout.json").write_text(self.layout)
        (d / "dataset.csv").write_text(self.dataset_csv)
        (d / "transcript.jsonl").write_text(self.transcript_jsonl)
        (d / "predictions.txt").write_text(self.predictions)
        (d / "metrics.json").write_text(json.dumps(
            {**self.row.to_dict(), "duration": self.duration, "error": self.error}, indent=2) + "\n")
        return d


def make_provider(cfg: ExperimentConfig, labels, run_index: int, clock):
    seed = cfg.seed + run_index
    if cfg.provider == "mock-perfect":
        return OracleMockProvider(labels, 0.0, 0.0, seed)
    if cfg.provider == "mock-noisy":
        return OracleMockProvider(labels, cfg.fp_rate, cfg.fn_rate, seed)
    if cfg.provider == "mock-delay":
        delay = cfg.delay_secs if cfg.delay_secs is not None else cfg.provider_cfg.run_deadline + 1
        return DelayMockProvider(delay, clock, then=OracleMockProvider(labels, 0.0, 0.0, seed))
    return OpenAICompatibleProvider(cfg.provider_cfg)


def execute_run(cfg: ExperimentConfig, dist: Distribution, mode: PromptMode, run_index: int,
                limiter: SlidingWindowLimiter, clock) -> RunRecord:
    started = time.monotonic()
    spec = cfg.layout_spec(dist, run_index)
    indices = sample_insertion_indices(spec, len(cfg.anomalies), max(len(cfg.normals), 1))
    indices = [min(i, len(cfg.normals)) for i in indices]
    ds = arrange_dataset(cfg.normals, cfg.anomalies, indices, provenance=cfg.dataset_source)
    run_id = f"{dist.value}-{mode.value}-{run_index + 1}"
    provider = make_provider(cfg, ds, run_index, clock)
    http_log: list[dict] = []
    if isinstance(provider, OpenAICompatibleProvider):
        provider.log_sink = http_log.append

    status = RunStatus.COMPLETED
    error = None
    answers: list[str] = []
    transcript = []
    for i, chunk in enumerate(plan_chunks(ds, mode, cfg.provider_cfg.tpm_budget)):
        outcome = run_agent_loop(cfg.provider_cfg, build_bundle(mode, chunk), provider,
                                 limiter=limiter, clock=clock)
        transcript.append(outcome.transcript.to_jsonl(run_id=run_id, chunk=i, status=outcome.status.value))
        transcript.extend(json.dumps({"run_id": run_id, "chunk": i, **e}) + "\n" for e in http_log)
        http_log.clear()
        if outcome.status is not RunStatus.COMPLETED:
            status, error = outcome.status, outcome.error
            break
        answers.append(outcome.final_text)

    predictions = "\n".join(answers)
    cm = score(ds, parse_predictions(predictions, ds.ids))
    row = metrics(cm, dist.value, mode.value, run_index + 1, status.value)
    return RunRecord(
        run_id=run_id,
        config={**cfg.snapshot(), "distribution": dist.value, "mode": mode.value,
                "run": run_index + 1, "layout_seed": spec.seed, "provider_seed": cfg.seed + run_index},
        layout=layout_sidecar(spec, indices, len(cfg.normals), len(cfg.anomalies)),
        dataset_csv=dataset_to_csv(ds),
        transcript_jsonl="".join(transcript),
        predictions=predictions + ("\n" if predictions else ""),
        row=row,
        duration=time.monotonic() - started,
        error=error,
    )


@dataclass
class ExperimentResult:
    records: list[RunRecord]
    cells: list[CellAverage]
    report_md: str
    report_csv: str

    @property
    def rows(self) -> list[MetricsRow]:
        return [r.row for r in self.records]

    @property
    def provider_errors(self) -> list[RunRecord]:
        return [r for r in self.records if r.row.status == RunStatus.PROVIDER_ERROR.value]


def average_cells(rows: Sequence[MetricsRow]) -> list[CellAverage]:
    """Average per (distribution, mode); provider-error runs are left out."""
    grouped: dict[tuple[str, str], list[MetricsRow]] = {}
    for r in rows:
        grouped.setdefault((r.distribution, r.mode), [])
        if r.status == RunStatus.PROVIDER_ERROR.value:
            log.warning("run %s/%s #%d failed at the provider; excluded from averages",
                        r.distribution, r.mode, r.run)
            continue
        grouped[(r.distribution, r.mode)].append(r)
    return [aggregate(v) for v in grouped.values() if v]


def run_experiment(cfg: ExperimentConfig, clock=None,
                   on_record: Callable[[RunRecord], None] | None = None) -> ExperimentResult:
    remote = cfg.provider == "openai-compatible"
    clock = clock or (SystemClock() if remote else VirtualClock())
    limiter = SlidingWindowLimiter(cfg.provider_cfg.tpm_budget)
    records = []
    for dist in cfg.distributions:
        for mode in cfg.modes:
            for k in range(cfg.repeats):
                rec = execute_run(cfg, dist, mode, k, limiter, clock)
                log.info("%s: %s accuracy=%.2f", rec.run_id, rec.row.status, rec.row.accuracy)
                if cfg.out_dir is not None:
                    rec.write(cfg.out_dir)
                if on_record:
                    on_record(rec)
                records.append(rec)

    rows = [r.row for r in records]
    cells = average_cells(rows)
    label = cfg.provider_cfg.model if remote else cfg.provider
    md, comp_csv = render_report(cells, load_baselines(), rows, label=label)
    if cfg.out_dir is not None:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(metrics_csv(rows))
        (out / "report.md").write_text(md)
        (out / "report.csv").write_text(comp_csv)
    return ExperimentResult(records, cells, md, comp_csv)
