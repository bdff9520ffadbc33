import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catecon.report import Report

keys = st.text(st.characters(codec="utf-8", exclude_categories=("Cs",)), min_size=1, max_size=8)
leaves = st.none() | st.booleans() | st.integers(-10**6, 10**6) | st.floats(allow_nan=False, allow_infinity=False) | keys
details = st.recursive(leaves, lambda kids: st.lists(kids, max_size=4) | st.dictionaries(keys, kids, max_size=4),
                       max_leaves=12)


@st.composite
def reports(draw):
    rep = Report(draw(keys))
    for k in draw(st.lists(keys, max_size=5, unique=True)):
        rep.record(k, draw(st.sampled_from([True, False, None])), draw(details))
    for _ in range(draw(st.integers(0, 3))):
        rep.fail(draw(keys), draw(keys), draw(details))
    if draw(st.booleans()):
        rep.error(draw(keys), draw(keys))
    return rep


@given(reports())
def test_structured_round_trip(rep):
    again = Report.from_dict(json.loads(rep.to_json()))
    assert again.to_dict() == rep.to_dict()
    assert again.exit_code == rep.exit_code


@given(reports())
def test_failures_carry_witnesses(rep):
    assert rep.exit_code in (0, 1, 2)
    if rep.status != "pass":
        assert rep.witnesses


def test_numpy_and_sets_become_plain_data():
    rep = Report("r")
    rep.record("a", True, {"arr": np.arange(3), "x": np.float64(1.5), "s": frozenset({2, 1}), (1, 2): (3,)})
    assert rep.to_dict()["sections"]["a"]["detail"] == {"arr": [0, 1, 2], "x": 1.5, "s": [1, 2], "(1, 2)": [3]}


def test_merge_escalates_status():
    outer, inner = Report("outer"), Report("inner")
    inner.fail("c", "broken", [1])
    outer.merge(inner)
    assert outer.status == "fail" and outer.witnesses[0].check == "inner/c"
    bad = Report("bad")
    bad.error("input", "nope")
    outer.merge(bad)
    assert outer.exit_code == 2
    outer.fail("later", "still error")
    assert outer.status == "error"


def test_bad_status_rejected():
    with pytest.raises(ValueError):
        Report.from_dict({"name": "x", "status": "maybe"})


def test_text_keeps_multiline_detail():
    rep = Report("t")
    rep.record("table", None, "a b\nc d")
    assert "table\na b\nc d" in rep.to_text()
