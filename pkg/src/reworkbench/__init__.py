"""Benchmark harness for detecting rework anomalies in process variants with chat models."""

from .eventlog import (Label, LabeledDataset, LabeledVariant, ParseError, format_variant,
                       parse_dataset, parse_variant_line, read_dataset, write_dataset)
from .evalkit import (CellAverage, ConfusionMatrix, MetricsRow, PredictionSet, aggregate,
                      metrics, parse_predictions, render_report, score)
from .gateway import (ProviderConfig, RunOutcome, RunStatus, SlidingWindowLimiter, oracle_mock,
                      run_agent_loop)
from .layout import (Distribution, LayoutSpec, arrange_dataset, generate_synthetic,
                     layout_histogram, sample_insertion_indices)
from .prompting import PromptMode, build_bundle, estimate_tokens, plan_chunks
from .rework import DetectMode, DetectPolicy, ReworkFinding, explain_finding, find_rework, is_rework

__version__ = "0.1.0"
