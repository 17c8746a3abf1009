"""A full distribution x prompt grid against a simulated model.

The noisy mock reports each true anomaly with probability 0.85 and each
normal variant with probability 0.02, so the numbers land in the same
region as a reasonable live model. Nothing touches the network, and
pacing waits run on a virtual clock, so this finishes in about a second.
"""

import tempfile
from pathlib import Path

from reworkbench import generate_synthetic
from reworkbench.harness import ExperimentConfig, run_experiment

normals, anomalies = generate_synthetic(seed=2024)
out = Path(tempfile.mkdtemp(prefix="reworkbench-"))
cfg = ExperimentConfig(normals=normals, anomalies=anomalies, provider="mock-noisy",
                       fp_rate=0.02, fn_rate=0.15, out_dir=out)
result = run_experiment(cfg)

for cell in result.cells:
    print(f"{cell.distribution:<12}{cell.mode:<5} accuracy {cell.accuracy:6.2f}%  "
          f"fdr {cell.fdr:5.2f}%")

# the mock ignores the prompt, so rows differ only through the layout
print("\n" + result.report_md.split("## Comparison with reference methods")[1].strip())
print(f"\nartifacts in {out}")
