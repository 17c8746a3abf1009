"""Event-log and variant-dataset parsing, and the textual variant format.

A variant is rendered for the model as ``"<id># A -> B -> C"``. Two input
formats are understood:

``VariantCsv``
    header ``variant_id,activities,label``; one labelled variant per row,
    activities joined by ``->`` (``→`` is accepted too).
``RawEventCsv``
    header ``case_id,activity,timestamp`` with RFC 3339 timestamps. Events
    are grouped per case, ordered by time, and identical traces collapse
    into one variant labelled normal. This raw schema is a minimal
    assumption; real logs usually need conversion first.
"""

from __future__ import annotations

import csv
import enum
import io
import re
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Sequence

ARROW = "->"
_ARROW_RE = re.compile(r"->|→")

VARIANT_HEADER = ["variant_id", "activities", "label"]
RAW_EVENT_HEADER = ["case_id", "activity", "timestamp"]


class ParseError(ValueError):
    """Malformed dataset or variant text. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Label(str, enum.Enum):
    NORMAL = "normal"
    REWORK = "rework"


class DatasetFormat(str, enum.Enum):
    VARIANT_CSV = "variant_csv"
    RAW_EVENT_CSV = "raw_event_csv"


def check_activity(name: str) -> str:
    if not name:
        raise ValueError("empty activity name")
    if "\n" in name or "\r" in name:
        raise ValueError(f"activity name contains a newline: {name!r}")
    if ARROW in name or "→" in name:
        raise ValueError(f"activity name contains the arrow separator: {name!r}")
    return name


@dataclass(frozen=True)
class LabeledVariant:
    id: int
    activities: tuple[str, ...]
    label: Label = Label.NORMAL

    def __post_init__(self):
        if self.id < 1:
            raise ValueError(f"variant id must be positive, got {self.id}")
        if not self.activities:
            raise ValueError("a variant needs at least one activity")
        object.__setattr__(self, "activities", tuple(self.activities))
        for a in self.activities:
            check_activity(a)
        object.__setattr__(self, "label", Label(self.label))

    @property
    def is_rework(self) -> bool:
        return self.label is Label.REWORK


@dataclass(frozen=True)
class LabeledDataset:
    items: tuple[LabeledVariant, ...]
    provenance: str = ""
    _by_id: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        by_id = {}
        for lv in self.items:
            if lv.id in by_id:
                raise ValueError(f"duplicate variant id {lv.id}")
            by_id[lv.id] = lv
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def get(self, variant_id: int) -> LabeledVariant | None:
        return self._by_id.get(variant_id)

    @property
    def ids(self) -> list[int]:
        return [lv.id for lv in self.items]

    def count(self, label: Label) -> int:
        return sum(1 for lv in self.items if lv.label is label)


def split_activities(text: str, line: int | None = None) -> tuple[str, ...]:
    tokens = tuple(t.strip() for t in _ARROW_RE.split(text))
    if any(not t for t in tokens):
        raise ParseError(f"empty activity in {text!r}", line)
    return tokens


def format_variant(lv: LabeledVariant) -> str:
    return f"{lv.id}# " + " -> ".join(lv.activities)


_LINE_RE = re.compile(r"^\s*(\d+)\s*#(.*)$", re.DOTALL)


def parse_variant_line(line: str) -> tuple[int, tuple[str, ...]]:
    """Inverse of :func:`format_variant`: ``"3# A -> B"`` -> ``(3, ("A", "B"))``."""
    if "#" not in line:
        raise ParseError(f"missing '#' separator: {line!r}")
    m = _LINE_RE.match(line)
    if m is None:
        raise ParseError(f"non-numeric variant id: {line!r}")
    return int(m.group(1)), split_activities(m.group(2).strip("\r\n"))


def _parse_label(token: str, line: int) -> Label:
    try:
        return Label(token.strip().lower())
    except ValueError:
        raise ParseError(f"unknown label {token!r}", line) from None


def _read_rows(text: str, header: list[str]):
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise ParseError("empty file", 1)
    got = [h.strip() for h in rows[0]]
    if got != header:
        raise ParseError(f"expected header {','.join(header)}, got {','.join(got)}", 1)
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} columns, got {len(row)}", lineno)
        yield lineno, row


def _parse_variant_csv(text: str, provenance: str) -> LabeledDataset:
    items = []
    seen = set()
    for lineno, (vid, acts, label) in _read_rows(text, VARIANT_HEADER):
        try:
            variant_id = int(vid.strip())
        except ValueError:
            raise ParseError(f"non-integer variant_id {vid!r}", lineno) from None
        if variant_id < 1:
            raise ParseError(f"variant_id must be positive, got {variant_id}", lineno)
        if variant_id in seen:
            raise ParseError(f"duplicate variant_id {variant_id}", lineno)
        seen.add(variant_id)
        activities = split_activities(acts, lineno)
        lab = _parse_label(label, lineno)
        try:
            items.append(LabeledVariant(variant_id, activities, lab))
        except ValueError as e:
            raise ParseError(str(e), lineno) from None
    return LabeledDataset(items, provenance)


def _parse_timestamp(value: str, line: int) -> datetime:
    v = value.strip()
    if v.endswith(("Z", "z")):
        v = v[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(v)
    except ValueError:
        raise ParseError(f"bad RFC 3339 timestamp {value!r}", line) from None
    if ts.tzinfo is None:
        raise ParseError(f"timestamp without UTC offset {value!r}", line)
    return ts


def _parse_raw_event_csv(text: str, provenance: str) -> LabeledDataset:
    cases: dict[str, list] = {}
    for lineno, (case_id, activity, ts) in _read_rows(text, RAW_EVENT_HEADER):
        activity = activity.strip()
        if not activity:
            raise ParseError("empty activity", lineno)
        try:
            check_activity(activity)
        except ValueError as e:
            raise ParseError(str(e), lineno) from None
        cases.setdefault(case_id.strip(), []).append((_parse_timestamp(ts, lineno), lineno, activity))

    variants: dict[tuple[str, ...], int] = {}
    for events in cases.values():
        events.sort(key=lambda e: (e[0], e[1]))
        trace = tuple(e[2] for e in events)
        if trace not in variants:
            variants[trace] = len(variants) + 1
    items = [LabeledVariant(vid, trace, Label.NORMAL) for trace, vid in variants.items()]
    return LabeledDataset(items, provenance)


def parse_dataset(source, fmt: DatasetFormat | str = DatasetFormat.VARIANT_CSV,
                  provenance: str = "") -> LabeledDataset:
    """Parse a dataset from bytes, text, or a binary/text stream."""
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8-sig")
        except UnicodeDecodeError as e:
            raise ParseError(f"not valid UTF-8: {e}") from None
    fmt = DatasetFormat(fmt)
    if fmt is DatasetFormat.VARIANT_CSV:
        return _parse_variant_csv(source, provenance)
    return _parse_raw_event_csv(source, provenance)


def read_dataset(path, fmt: DatasetFormat | str = DatasetFormat.VARIANT_CSV) -> LabeledDataset:
    with open(path, "rb") as f:
        return parse_dataset(f, fmt, provenance=str(path))


def dataset_to_csv(items: Iterable[LabeledVariant]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VARIANT_HEADER)
    for lv in items:
        w.writerow([lv.id, " -> ".join(lv.activities), lv.label.value])
    return buf.getvalue()


def write_dataset(path, items: Iterable[LabeledVariant]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(dataset_to_csv(items))


def renumber(items: Sequence[LabeledVariant], start: int = 1) -> list[LabeledVariant]:
    """Reassign ids 1..N in presentation order."""
    return [LabeledVariant(i, lv.activities, lv.label) for i, lv in enumerate(items, start=start)]
