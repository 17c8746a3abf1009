"""Score a model answer after the fact.

Any text works as an answer: lines of the form ``<id># ...`` count as
predictions and the rest is ignored. Here a hand-written answer gets
scored against a small labelled dataset.
"""

from reworkbench import Label, LabeledDataset, LabeledVariant, metrics, parse_predictions, score
from reworkbench.rework import explain

variants = [
    ("Create", "Approve", "Pay"),
    ("Create", "Approve", "Approve", "Pay"),
    ("Create", "Check", "Fix", "Check", "Fix", "Pay"),
    ("Create", "Reject"),
]
ds = LabeledDataset(tuple(
    LabeledVariant(i, v, Label.REWORK if explain(v) else Label.NORMAL)
    for i, v in enumerate(variants, 1)))

answer = """Sure, these variants contain rework:
2# Approve->Approve
4# Create->Reject
"""
preds = parse_predictions(answer, ds.ids)
row = metrics(score(ds, preds))
print(f"parsed ids {sorted(preds.ids)}, ignored {len(preds.unparsed_lines)} line(s)")
print(f"tp={row.tp} fp={row.fp} fn={row.fn} tn={row.tn}")
print(f"precision {row.precision:.2f}%  recall {row.recall:.2f}%  f1 {row.f1:.2f}%")
for lv in ds:
    if lv.is_rework:
        print(f"variant {lv.id} repeats {explain(lv.activities)}")
