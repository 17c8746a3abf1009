"""Placement of anomalous variants among normal ones, and synthetic data.

Three placement distributions decide where anomalies go:

* ``normal``      -- indices ~ Normal(mean_fraction*n, (sigma_fraction*n)^2)
* ``uniform``     -- integer indices drawn uniformly over [0, n], with replacement
* ``exponential`` -- indices ~ Exponential(scale_fraction*n), head-concentrated

Real-valued draws are rounded half-to-even and clamped into [0, n].
"""

from __future__ import annotations

import csv
import enum
import io
import json
import string
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .eventlog import Label, LabeledDataset, LabeledVariant, renumber
from .rework import DetectPolicy, is_rework
from .rng import Xoshiro256


class ConfigError(ValueError):
    pass


class Distribution(str, enum.Enum):
    NORMAL = "normal"
    UNIFORM = "uniform"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class LayoutSpec:
    kind: Distribution
    seed: int = 0
    mean_fraction: float = 0.5
    sigma_fraction: float = 1 / 6
    scale_fraction: float = 1 / 8

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", Distribution(self.kind))
        except ValueError:
            raise ConfigError(f"unknown distribution {self.kind!r}") from None
        if not 0.0 < self.mean_fraction < 1.0:
            raise ConfigError("mean_fraction must lie in (0, 1)")
        if not self.sigma_fraction > 0.0:
            raise ConfigError("sigma_fraction must be positive")
        if not self.scale_fraction > 0.0:
            raise ConfigError("scale_fraction must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d


def sample_insertion_indices(spec: LayoutSpec, k: int, n: int,
                             rng: Xoshiro256 | None = None) -> list[int]:
    """Draw ``k`` sorted insertion indices in ``[0, n]``.

    ``rng`` defaults to a fresh generator seeded with ``spec.seed``; pass one
    explicitly to continue an existing stream.
    """
    if k < 0:
        raise ConfigError("k must be non-negative")
    if n < 1:
        raise ConfigError("n must be at least 1")
    if rng is None:
        rng = Xoshiro256(spec.seed)
    if spec.kind is Distribution.UNIFORM:
        out = [rng.integers(0, n) for _ in range(k)]
    else:
        if spec.kind is Distribution.NORMAL:
            mu, sigma = spec.mean_fraction * n, spec.sigma_fraction * n
            draws = [rng.normal(mu, sigma) for _ in range(k)]
        else:
            scale = spec.scale_fraction * n
            draws = [rng.exponential(scale) for _ in range(k)]
        out = [min(max(round(x), 0), n) for x in draws]
    out.sort()
    return out


def arrange_dataset(normals: Sequence[LabeledVariant], anomalies: Sequence[LabeledVariant],
                    indices: Sequence[int], provenance: str = "") -> LabeledDataset:
    """Insert anomalies before the normal at each index; renumber ids 1..N.

    ``indices`` is relative to the normal list, so anomaly ``j`` lands at
    final position ``indices[j] + j``.
    """
    if len(indices) != len(anomalies):
        raise ValueError(f"{len(anomalies)} anomalies but {len(indices)} indices")
    n = len(normals)
    if any(b < a for a, b in zip(indices, indices[1:])):
        raise ValueError("indices must be sorted")
    for i in indices:
        if not 0 <= i <= n:
            raise ValueError(f"index {i} outside [0, {n}]")
    out = []
    j = 0
    for pos, lv in enumerate(normals):
        while j < len(indices) and indices[j] == pos:
            out.append(anomalies[j])
            j += 1
        out.append(lv)
    out.extend(anomalies[j:])
    return LabeledDataset(renumber(out), provenance)


def layout(spec: LayoutSpec, normals, anomalies, provenance: str = ""):
    """Sample indices and arrange in one step; returns ``(dataset, indices)``."""
    idx = sample_insertion_indices(spec, len(anomalies), max(len(normals), 1))
    idx = [min(i, len(normals)) for i in idx]
    return arrange_dataset(normals, anomalies, idx, provenance), idx


def layout_sidecar(spec: LayoutSpec, indices: Sequence[int], n_normal: int,
                   n_anomalous: int) -> str:
    return json.dumps({
        "spec": spec.to_dict(),
        "seed": spec.seed,
        "n_normal": n_normal,
        "n_anomalous": n_anomalous,
        "insertion_indices": list(indices),
    }, indent=2) + "\n"


@dataclass(frozen=True)
class HistogramData:
    bin_edges: list[float]
    counts: list[int]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bin_start", "bin_end", "count"])
        for a, b, c in zip(self.bin_edges, self.bin_edges[1:], self.counts):
            w.writerow([f"{a:g}", f"{b:g}", c])
        return buf.getvalue()


def layout_histogram(ds: LabeledDataset, bins: int = 10) -> HistogramData:
    if bins < 1:
        raise ValueError("bins must be >= 1")
    positions = [i for i, lv in enumerate(ds) if lv.label is Label.REWORK]
    counts, edges = np.histogram(positions, bins=bins, range=(0, max(len(ds), 1)))
    return HistogramData([float(e) for e in edges], [int(c) for c in counts])


def activity_names(alphabet_size: int) -> list[str]:
    """``Activity A`` .. ``Activity Z``, then ``Activity AA`` and so on."""
    letters = string.ascii_uppercase
    names = []
    width = 1
    while len(names) < alphabet_size:
        for i in range(26 ** width):
            tag = ""
            x = i
            for _ in range(width):
                x, r = divmod(x, 26)
                tag = letters[r] + tag
            names.append(f"Activity {tag}")
            if len(names) == alphabet_size:
                break
        width += 1
    return names


class GenerationError(RuntimeError):
    pass


def generate_synthetic(n_normal: int = 689, n_anomalous: int = 71, alphabet_size: int = 26,
                       len_range: tuple[int, int] = (4, 12),
                       policy: DetectPolicy = DetectPolicy(), seed: int = 0,
                       max_tries: int = 10_000):
    """Build distinct rework-free normals and rework-carrying anomalies.

    Normals are rejection-sampled until ``policy`` finds nothing. Each anomaly
    starts from such a base and gets a random unit repeated in place, so it
    carries a tandem repeat of ``min_repetitions`` copies. Lengths of
    anomalies stay within ``len_range``. Returns ``(normals, anomalies)``
    with ids 1..n in each list.
    """
    lo, hi = len_range
    if alphabet_size < 2:
        raise ConfigError("alphabet_size must be >= 2")
    if not 2 <= lo <= hi:
        raise ConfigError("len_range must satisfy 2 <= min <= max")
    reps = policy.min_repetitions
    unit_lo = policy.min_unit_len
    if unit_lo * reps > hi:
        raise ConfigError("max length too short to hold a repeated unit")

    rng = Xoshiro256(seed)
    names = activity_names(alphabet_size)
    seen: set[tuple[str, ...]] = set()

    def clean_sequence(length: int) -> tuple[str, ...]:
        for _ in range(max_tries):
            v = tuple(rng.choice(names) for _ in range(length))
            if v not in seen and not is_rework(v, policy):
                return v
        raise GenerationError(
            f"no rework-free variant of length {length} after {max_tries} tries; "
            "use a larger alphabet or shorter variants")

    normals = []
    for _ in range(n_normal):
        v = clean_sequence(rng.integers(lo, hi))
        seen.add(v)
        normals.append(v)

    anomalies = []
    for _ in range(n_anomalous):
        for _ in range(max_tries):
            total = rng.integers(max(lo, unit_lo * reps), hi)
            unit_hi = max(unit_lo, min(3, total // reps))
            size = rng.integers(unit_lo, unit_hi)
            base_len = total - size * (reps - 1)
            base = clean_sequence(base_len) if base_len >= 2 else tuple(rng.choice(names) for _ in range(base_len))
            start = rng.integers(0, base_len - size)
            unit = base[start:start + size]
            v = base[:start + size] + unit * (reps - 1) + base[start + size:]
            if v not in seen and is_rework(v, policy):
                seen.add(v)
                anomalies.append(v)
                break
        else:
            raise GenerationError("could not construct a distinct anomalous variant")

    return (
        [LabeledVariant(i, v, Label.NORMAL) for i, v in enumerate(normals, 1)],
        [LabeledVariant(i, v, Label.REWORK) for i, v in enumerate(anomalies, 1)],
    )
