"""Where do the anomalies end up?

Lay the same 71 anomalous variants among 689 normal ones under each
placement distribution and print a text histogram of their positions.
"""

from reworkbench import Distribution, LayoutSpec, generate_synthetic
from reworkbench.layout import layout, layout_histogram

normals, anomalies = generate_synthetic(689, 71, seed=1)
print(f"{len(normals)} normal variants, {len(anomalies)} carrying rework\n")
print("an anomalous variant, as the model sees it:")
print(f"  {anomalies[0].id}# {' -> '.join(anomalies[0].activities)}\n")

for kind in Distribution:
    ds, _ = layout(LayoutSpec(kind, seed=3), normals, anomalies)
    hist = layout_histogram(ds, bins=10)
    print(f"{kind.value} layout")
    for lo, hi, n in zip(hist.bin_edges, hist.bin_edges[1:], hist.counts):
        print(f"  {lo:5.0f}-{hi:<5.0f} {'#' * n} {n}")
    print()
