"""Deterministic rework detection on activity sequences.

Two notions of repetition are supported:

* ``TANDEM`` -- a unit repeated back to back (``X -> X`` or ``Q C Q C``).
* ``RECURRENT`` -- a unit occurring at several disjoint positions, possibly
  with other activities in between (``C R S C R G C R``).

When a variant contains several repeats the reported one is canonical:
smallest start, then shortest unit, then most repetitions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence


class DetectMode(str, enum.Enum):
    TANDEM = "tandem"
    RECURRENT = "recurrent"


@dataclass(frozen=True)
class DetectPolicy:
    mode: DetectMode = DetectMode.TANDEM
    min_unit_len: int = 1
    min_repetitions: int = 2

    def __post_init__(self):
        object.__setattr__(self, "mode", DetectMode(self.mode))
        if self.min_unit_len < 1:
            raise ValueError("min_unit_len must be >= 1")
        if self.min_repetitions < 2:
            raise ValueError("min_repetitions must be >= 2")


TANDEM = DetectPolicy()


@dataclass(frozen=True)
class ReworkFinding:
    start: int
    unit: tuple[str, ...]
    repetitions: int
    policy: DetectMode = DetectMode.TANDEM

    def __post_init__(self):
        if not self.unit:
            raise ValueError("a finding needs a non-empty unit")
        if self.repetitions < 2:
            raise ValueError("a finding needs at least two repetitions")
        object.__setattr__(self, "unit", tuple(self.unit))

    @property
    def span(self) -> int:
        return len(self.unit) * self.repetitions


def _tandem_count(v: Sequence, start: int, size: int) -> int:
    unit = v[start:start + size]
    reps = 1
    pos = start + size
    while v[pos:pos + size] == unit:
        reps += 1
        pos += size
    return reps


def _recurrent_count(v: Sequence, start: int, size: int) -> int:
    # greedy leftmost matching gives the maximum number of disjoint copies
    unit = v[start:start + size]
    reps = 1
    pos = start + size
    last = len(v) - size
    while pos <= last:
        if v[pos:pos + size] == unit:
            reps += 1
            pos += size
        else:
            pos += 1
    return reps


def find_rework(v: Sequence[str], policy: DetectPolicy = TANDEM) -> ReworkFinding | None:
    v = tuple(v)
    n = len(v)
    lo = policy.min_unit_len
    need = policy.min_repetitions
    count = _tandem_count if policy.mode is DetectMode.TANDEM else _recurrent_count
    for start in range(n):
        for size in range(lo, (n - start) // need + 1):
            reps = count(v, start, size)
            if reps >= need:
                return ReworkFinding(start, v[start:start + size], reps, policy.mode)
    return None


def is_rework(v: Sequence[str], policy: DetectPolicy = TANDEM) -> bool:
    return find_rework(v, policy) is not None


def explain_finding(v: Sequence[str], f: ReworkFinding) -> str:
    """Render the repeated region the way a model answer would: ``A->A``."""
    return "->".join(f.unit * f.repetitions)


def explain(v: Sequence[str], policy: DetectPolicy = TANDEM) -> str | None:
    f = find_rework(v, policy)
    return None if f is None else explain_finding(v, f)
