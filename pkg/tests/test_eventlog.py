import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from reworkbench.eventlog import (Label, LabeledDataset, LabeledVariant, ParseError,
                                  dataset_to_csv, format_variant, parse_dataset,
                                  parse_variant_line, renumber)

A = "Activity A"


def test_variant_csv_row_from_table_one():
    ds = parse_dataset(b"variant_id,activities,label\n"
                       b"2,Activity A -> Activity A -> Activity Z -> Activity W,rework\n")
    (lv,) = ds
    assert lv == LabeledVariant(2, ("Activity A", "Activity A", "Activity Z", "Activity W"),
                                Label.REWORK)


def test_single_activity_row():
    (lv,) = parse_dataset(b"variant_id,activities,label\n1,Activity Q,normal\n")
    assert lv.activities == ("Activity Q",) and lv.label is Label.NORMAL


def test_unicode_arrow_and_quoted_commas():
    text = ('variant_id,activities,label\n'
            '1,"Pay, then ship → Close",normal\n').encode()
    (lv,) = parse_dataset(text)
    assert lv.activities == ("Pay, then ship", "Close")


def test_row_order_preserved():
    rows = "".join(f"{i},X{i} -> Y,normal\n" for i in (5, 3, 9, 1))
    ds = parse_dataset(("variant_id,activities,label\n" + rows).encode())
    assert ds.ids == [5, 3, 9, 1]


@pytest.mark.parametrize("row, line", [
    ("1,A,normal,extra", 2),
    ("x,A,normal", 2),
    ("1,A -> -> B,normal", 2),
    ("1,A,weird", 2),
    ("1,,normal", 2),
])
def test_malformed_rows_name_line(row, line):
    with pytest.raises(ParseError) as e:
        parse_dataset(f"variant_id,activities,label\n{row}\n".encode())
    assert e.value.line == line
    assert f"line {line}" in str(e.value)


def test_duplicate_id_rejected():
    with pytest.raises(ParseError, match="duplicate"):
        parse_dataset(b"variant_id,activities,label\n1,A,normal\n1,B,normal\n")


def test_wrong_header_rejected():
    with pytest.raises(ParseError, match="header"):
        parse_dataset(b"id,acts,label\n1,A,normal\n")


def test_non_utf8_rejected():
    with pytest.raises(ParseError, match="UTF-8"):
        parse_dataset(b"variant_id,activities,label\n1,\xff,normal\n")


RAW = """case_id,activity,timestamp
c1,Activity C,2024-01-01T10:02:00Z
c2,Activity A,2024-01-01T09:00:00Z
c1,Activity A,2024-01-01T10:00:00Z
c2,Activity B,2024-01-01T09:05:00+00:00
c1,Activity B,2024-01-01T10:01:00Z
c3,Activity A,2024-01-02T09:00:00Z
c3,Activity B,2024-01-02T09:00:00Z
c3,Activity C,2024-01-02T09:30:00Z
"""


def test_raw_events_ordered_by_timestamp():
    # hand-ordered fixture: c1 is A, B, C once sorted by time
    expected_c1 = ("Activity A", "Activity B", "Activity C")
    ds = parse_dataset(RAW.encode(), "raw_event_csv")
    assert ds[0].activities == expected_c1
    assert ds[0].label is Label.NORMAL


def test_raw_events_collapse_identical_traces_and_break_ties_by_row():
    ds = parse_dataset(RAW.encode(), "raw_event_csv")
    # c3 ties A/B at 09:00; row order keeps A first so c3 equals c1
    assert [lv.activities for lv in ds] == [
        ("Activity A", "Activity B", "Activity C"),
        ("Activity A", "Activity B"),
    ]
    assert ds.ids == [1, 2]


def test_raw_events_stable():
    assert parse_dataset(RAW.encode(), "raw_event_csv") == parse_dataset(RAW.encode(), "raw_event_csv")


def test_raw_event_bad_timestamp():
    with pytest.raises(ParseError, match="line 2"):
        parse_dataset(b"case_id,activity,timestamp\nc1,A,yesterday\n", "raw_event_csv")


def test_format_table_one():
    lv = LabeledVariant(1, ("Activity Q", "Activity C", "Activity R", "Activity S"))
    assert format_variant(lv) == "1# Activity Q -> Activity C -> Activity R -> Activity S"
    assert format_variant(LabeledVariant(7, (A,))) == "7# Activity A"


@pytest.mark.parametrize("line, expected", [
    ("1# A->A->B->B->A", (1, ("A", "A", "B", "B", "A"))),
    ("42#  Activity X  ->  Activity X ", (42, ("Activity X", "Activity X"))),
    ("3# Activity Q → Activity C", (3, ("Activity Q", "Activity C"))),
])
def test_parse_variant_line(line, expected):
    assert parse_variant_line(line) == expected


@pytest.mark.parametrize("line", ["x# A", "A -> B", "1# A -> -> B", "1#", "#3 A"])
def test_parse_variant_line_errors(line):
    with pytest.raises(ParseError):
        parse_variant_line(line)


def test_round_trip_1000_seeded_variants():
    rng = random.Random(1234)
    names = [f"Activity {c}" for c in "ABCDEFGHIJ"] + ["Check stock", "Q"]
    for _ in range(1000):
        vid = rng.randint(1, 10**6)
        acts = tuple(rng.choice(names) for _ in range(rng.randint(1, 15)))
        assert parse_variant_line(format_variant(LabeledVariant(vid, acts))) == (vid, acts)


activity = st.text(st.characters(blacklist_categories=("Cs", "Cc", "Zs", "Zl", "Zp")),
                   min_size=1, max_size=8).filter(lambda s: "->" not in s and "→" not in s
                                                   and "#" not in s and s == s.strip())


@given(st.integers(1, 10**9), st.lists(activity, min_size=1, max_size=10))
def test_round_trip_property(vid, acts):
    lv = LabeledVariant(vid, acts)
    assert parse_variant_line(format_variant(lv)) == (vid, tuple(acts))


def test_csv_round_trip():
    items = [LabeledVariant(1, ("A", "B")), LabeledVariant(2, ("x, y", "x, y"), Label.REWORK)]
    assert list(parse_dataset(dataset_to_csv(items).encode())) == items


def test_dataset_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        LabeledDataset([LabeledVariant(1, ("A",)), LabeledVariant(1, ("B",))])


def test_activity_invariants():
    with pytest.raises(ValueError):
        LabeledVariant(1, ("A->B",))
    with pytest.raises(ValueError):
        LabeledVariant(1, ("line\nbreak",))
    with pytest.raises(ValueError):
        LabeledVariant(0, ("A",))


def test_renumber():
    items = renumber([LabeledVariant(9, ("A",)), LabeledVariant(4, ("B",))])
    assert [lv.id for lv in items] == [1, 2]
