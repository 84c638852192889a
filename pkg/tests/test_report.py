import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ivsmile.errors import UnknownMetric
from ivsmile.report import (
    STATS,
    describe,
    render_report,
    standard_tables,
    summarize,
    table_csv,
    write_report,
)
from ivsmile.shape import ShapeLabel
from ivsmile.strategies import ConcavityFilter, StrategyOutcome


def outcome(i, concave, value, convexest=None):
    return StrategyOutcome(
        ticker=f"T{i:02d}",
        quarter="Q1-2022",
        is_concave=concave,
        label=ShapeLabel.INVERSE_U if concave else ShapeLabel.CONVEX,
        convexest=(-0.01 if concave else 0.01) if convexest is None else convexest,
        impmove_straddle=value,
        impmove_strangle=value / 2,
        straddle_return=value - 0.5,
        strangle_return=value - 0.7,
        price_return=0.01 * i,
        lambda_used=0.01,
        modality=1,
    )


def test_quartiles_linear_rule():
    d = describe([4.0, 1.0, 3.0, 2.0])
    assert (d["25%"], d["50%"], d["75%"]) == (1.75, 2.5, 3.25)
    assert d["mean"] == 2.5 and d["min"] == 1.0 and d["max"] == 4.0


def test_single_outcome_per_group():
    table = summarize([outcome(0, True, 0.3), outcome(1, False, 0.1)], "impmove_straddle")
    for stat in STATS:
        assert table.value(stat, 0) == 0.3
        assert table.value(stat, 1) == 0.1
        assert table.value(stat, 2) == pytest.approx(0.2)


def test_empty_group_is_na():
    table = summarize([outcome(0, True, 0.3)], "impmove_straddle")
    assert table.value("mean", 1) is None
    text = table_csv(table)
    assert "mean,0.3000000000,NA,NA" in text
    assert text.endswith("count,1,0,NA\n")


def test_unknown_metric():
    with pytest.raises(UnknownMetric):
        summarize([outcome(0, True, 0.3)], "sharpe")


def test_empty_report_says_so():
    docs = render_report(standard_tables([]), [], "markdown")
    assert "No events" in docs["report.md"]
    js = json.loads(render_report(standard_tables([]), [], "json")["report.json"])
    assert js["events"] == []


def test_convexest_filter_regroups():
    outs = [outcome(0, True, 0.3, convexest=0.02), outcome(1, False, 0.1, convexest=-0.02)]
    by_def = summarize(outs, "impmove_straddle", ConcavityFilter.DEFINITION)
    by_cvx = summarize(outs, "impmove_straddle", ConcavityFilter.CONVEXEST)
    assert by_def.value("mean", 0) == 0.3
    assert by_cvx.value("mean", 0) == 0.1


values = st.lists(
    st.tuples(st.booleans(), st.floats(0.001, 1.0, allow_nan=False)), min_size=1, max_size=30
)


@given(values, st.randoms(use_true_random=False))
@settings(max_examples=50, deadline=None)
def test_permutation_invariance_and_counts(items, rnd):
    outs = [outcome(i, c, v) for i, (c, v) in enumerate(items)]
    shuffled = outs[:]
    rnd.shuffle(shuffled)
    for fmt in ("csv", "json", "markdown"):
        a = render_report(standard_tables(outs), outs, fmt)
        b = render_report(standard_tables(shuffled), shuffled, fmt)
        assert a == b
    for table in standard_tables(outs)[:5]:
        assert sum(table.counts) == len(outs)
        for col in (0, 1):
            vals = [table.value(s, col) for s in ("min", "25%", "50%", "75%", "max")]
            if vals[0] is not None:
                assert vals == sorted(vals)


def test_write_report_is_byte_stable(tmp_path):
    outs = [outcome(i, i % 2 == 0, 0.05 * (i + 1)) for i in range(6)]
    random.Random(3).shuffle(outs)
    a = write_report(tmp_path / "a", standard_tables(outs), outs)
    b = write_report(tmp_path / "b", standard_tables(outs[::-1]), outs[::-1])
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()
    assert (tmp_path / "a" / "results.csv").read_text().splitlines()[0].startswith(
        "ticker,quarter,is_concave,label,convexest"
    )
