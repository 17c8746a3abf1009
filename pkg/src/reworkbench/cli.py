"""``reworkbench`` command line: generate, layout, run, score, report.

Exit codes: 0 success, 1 config or parse error, 2 provider error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .eventlog import ParseError, read_dataset, write_dataset
from .evalkit import (load_baselines, metrics, metrics_csv, parse_predictions, read_metrics_csv,
                      render_report, score)
from .gateway import ProviderConfig
from .harness import PROVIDERS, ExperimentConfig, average_cells, run_experiment
from .layout import (ConfigError, Distribution, GenerationError, LayoutSpec, generate_synthetic,
                     layout, layout_histogram, layout_sidecar)
from .prompting import ChunkingError, PromptMode
from .rework import DetectPolicy

log = logging.getLogger("reworkbench")

EXIT_OK, EXIT_CONFIG, EXIT_PROVIDER, EXIT_INTERNAL = 0, 1, 2, 3


def _policy(args) -> DetectPolicy:
    return DetectPolicy(args.detect, args.min_unit_len)


def _synthetic(args):
    return generate_synthetic(args.n_normal, args.n_anomalous, args.alphabet_size,
                              (args.min_len, args.max_len), _policy(args), args.seed)


def _add_synthetic_flags(p):
    p.add_argument("--n-normal", type=int, default=689)
    p.add_argument("--n-anomalous", type=int, default=71)
    p.add_argument("--alphabet-size", type=int, default=26)
    p.add_argument("--min-len", type=int, default=4)
    p.add_argument("--max-len", type=int, default=12)
    p.add_argument("--detect", choices=["tandem", "recurrent"], default="tandem",
                   help="rework notion used to label synthetic variants")
    p.add_argument("--min-unit-len", type=int, default=1)


def _add_layout_flags(p):
    p.add_argument("--mean-fraction", type=float, default=0.5)
    p.add_argument("--sigma-fraction", type=float, default=1 / 6)
    p.add_argument("--scale-fraction", type=float, default=1 / 8)


def _load_inputs(args):
    if args.normals or args.anomalies:
        if not (args.normals and args.anomalies):
            raise ConfigError("--normals and --anomalies must be given together")
        return (list(read_dataset(args.normals)), list(read_dataset(args.anomalies)),
                f"{args.normals}+{args.anomalies}")
    if getattr(args, "data", None):
        d = Path(args.data)
        return (list(read_dataset(d / "normals.csv")), list(read_dataset(d / "anomalies.csv")), str(d))
    normals, anomalies = _synthetic(args)
    return normals, anomalies, f"synthetic(seed={args.seed})"


def cmd_generate(args) -> int:
    normals, anomalies = _synthetic(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(out / "normals.csv", normals)
    write_dataset(out / "anomalies.csv", anomalies)
    print(f"wrote {len(normals)} normal and {len(anomalies)} anomalous variants to {out}")
    return EXIT_OK


def cmd_layout(args) -> int:
    normals, anomalies, source = _load_inputs(args)
    spec = LayoutSpec(args.distribution, args.seed, args.mean_fraction, args.sigma_fraction,
                      args.scale_fraction)
    ds, indices = layout(spec, normals, anomalies, provenance=source)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(out / "dataset.csv", ds)
    (out / "layout.json").write_text(layout_sidecar(spec, indices, len(normals), len(anomalies)))
    (out / "histogram.csv").write_text(layout_histogram(ds, args.bins).to_csv())
    print(f"wrote {len(ds)} variants ({spec.kind.value} layout) to {out}")
    return EXIT_OK


def cmd_run(args) -> int:
    normals, anomalies, source = _load_inputs(args)
    deadline = float(args.timeout_secs)
    pcfg = ProviderConfig(endpoint=args.endpoint, model=args.model, api_key_env=args.api_key_env,
                          tpm_budget=args.tpm_budget, request_timeout=min(args.request_timeout, deadline),
                          run_deadline=deadline, max_agent_steps=args.max_agent_steps)
    cfg = ExperimentConfig(
        normals=normals, anomalies=anomalies,
        distributions=args.distribution or list(Distribution),
        modes=args.prompt or list(PromptMode),
        repeats=args.repeats, provider=args.provider, provider_cfg=pcfg,
        out_dir=Path(args.out), seed=args.seed, relayout_per_run=args.relayout_per_run,
        fp_rate=args.fp_rate, fn_rate=args.fn_rate, delay_secs=args.delay_secs,
        mean_fraction=args.mean_fraction, sigma_fraction=args.sigma_fraction,
        scale_fraction=args.scale_fraction, dataset_source=source,
    )
    result = run_experiment(cfg)
    for c in result.cells:
        print(f"{c.distribution:<12} {c.mode:<5} accuracy={c.accuracy:6.2f}% "
              f"precision={c.precision:6.2f}% recall={c.recall:6.2f}% fdr={c.fdr:6.2f}%")
    print(f"report: {Path(args.out) / 'report.md'}")
    if result.provider_errors:
        log.error("%d run(s) failed at the provider", len(result.provider_errors))
        return EXIT_PROVIDER
    return EXIT_OK


def cmd_score(args) -> int:
    ds = read_dataset(args.dataset)
    with open(args.predictions, encoding="utf-8") as f:
        preds = parse_predictions(f.read(), ds.ids)
    row = metrics(score(ds, preds), args.distribution, args.prompt, args.run, args.status)
    text = metrics_csv([row])
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if preds.unparsed_lines:
        log.info("%d prediction line(s) not parsed", len(preds.unparsed_lines))
    return EXIT_OK


def cmd_report(args) -> int:
    runs = Path(args.runs)
    rows = read_metrics_csv((runs / "metrics.csv").read_text(encoding="utf-8"))
    cells = average_cells(rows)
    md, comp = render_report(cells, load_baselines(args.baselines), rows, label=args.label)
    out = Path(args.out) if args.out else runs
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.md").write_text(md)
    (out / "report.csv").write_text(comp)
    print(f"report: {out / 'report.md'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reworkbench",
                                     description="Rework anomaly detection benchmark harness.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic normals/anomalies dataset")
    _add_synthetic_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="data")
    p.set_defaults(func=cmd_generate)

    def inputs(p):
        p.add_argument("--data", help="directory holding normals.csv and anomalies.csv")
        p.add_argument("--normals")
        p.add_argument("--anomalies")
        _add_synthetic_flags(p)
        _add_layout_flags(p)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("layout", help="arrange anomalies among normals")
    inputs(p)
    p.add_argument("--distribution", choices=[d.value for d in Distribution], required=True)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--out", default="layout")
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("run", help="run the distribution x prompt grid")
    inputs(p)
    p.add_argument("--distribution", action="append", choices=[d.value for d in Distribution],
                   help="repeatable; default all three")
    p.add_argument("--prompt", action="append", choices=[m.value for m in PromptMode],
                   help="repeatable; default all three")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--provider", choices=PROVIDERS, default="mock-perfect")
    p.add_argument("--model", default=ProviderConfig.model)
    p.add_argument("--endpoint", default=ProviderConfig.endpoint)
    p.add_argument("--api-key-env", default=ProviderConfig.api_key_env,
                   help="name of the environment variable holding the API key")
    p.add_argument("--tpm-budget", type=int, default=30_000)
    p.add_argument("--timeout-secs", type=float, default=300.0, help="per-chunk run deadline")
    p.add_argument("--request-timeout", type=float, default=ProviderConfig.request_timeout)
    p.add_argument("--max-agent-steps", type=int, default=4)
    p.add_argument("--fp-rate", type=float, default=0.02)
    p.add_argument("--fn-rate", type=float, default=0.15)
    p.add_argument("--delay-secs", type=float, default=None,
                   help="mock-delay reply latency; default is past the deadline")
    p.add_argument("--relayout-per-run", action="store_true")
    p.add_argument("--out", default="runs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("score", help="re-score a stored predictions file offline")
    p.add_argument("--dataset", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--distribution", default="")
    p.add_argument("--prompt", default="")
    p.add_argument("--run", type=int, default=1)
    p.add_argument("--status", default="completed",
                   choices=["completed", "deadline_exceeded", "provider_error"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("report", help="rebuild report.md from a run directory's metrics.csv")
    p.add_argument("--runs", required=True)
    p.add_argument("--baselines")
    p.add_argument("--label", default="LLM")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, ConfigError, ChunkingError, GenerationError, ValueError, OSError,
            json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
