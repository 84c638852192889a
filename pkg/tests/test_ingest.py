import datetime as dt

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import NINE, make_snapshot
from ivsmile.errors import AmbiguousPhase, EmptyFile, InvariantViolation, MalformedRow
from ivsmile.ingest import (
    COLUMNS,
    ChainSnapshot,
    IvObservation,
    Phase,
    group_event_studies,
    parse_snapshot_file,
    parse_snapshot_text,
    quarter_label,
    serialize_snapshots,
)

HEADER = ",".join(COLUMNS)


def rows(ticker="GOOGL", snap="2022-04-25", ead="2022-04-26", phase="before", ms=NINE, iv=0.4):
    return [f"{ticker},{snap},{ead},{phase},3,100.0,0.0,{m},{iv}" for m in ms]


def test_nine_rows_make_one_snapshot(tmp_path):
    path = tmp_path / "chain.csv"
    path.write_text("\n".join([HEADER, *rows()]) + "\n")
    (snap,) = parse_snapshot_file(path)
    assert len(snap.observations) == 9
    assert snap.moneyness == list(NINE)
    assert snap.phase is Phase.BEFORE


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(EmptyFile):
        parse_snapshot_file(path)


def test_header_only_is_empty():
    with pytest.raises(EmptyFile):
        parse_snapshot_text(HEADER + "\n")


def test_duplicate_moneyness():
    text = "\n".join([HEADER, *rows(ms=(0.9, 1.0, 1.0, 1.1))])
    with pytest.raises(InvariantViolation, match="duplicate"):
        parse_snapshot_text(text)


def test_errors_carry_file_and_line():
    lines = [HEADER, *rows()]
    lines[4] = lines[4].replace("0.4", "abc")
    with pytest.raises(MalformedRow, match=r"chain\.csv:5"):
        parse_snapshot_text("\n".join(lines), source="chain.csv")


def test_wrong_field_count():
    with pytest.raises(MalformedRow):
        parse_snapshot_text(HEADER + "\nGOOGL,2022-04-25\n")


def test_unsorted_rows_are_sorted():
    text = "\n".join([HEADER, *reversed(rows())])
    (snap,) = parse_snapshot_text(text)
    assert snap.moneyness == sorted(snap.moneyness)


def test_missing_rate_column_uses_default():
    header = "ticker,snapshot_date,ead_date,expiry_days,spot,moneyness,iv"
    body = [f"X,2022-04-27,2022-04-26,2,50,{m},0.3" for m in (0.9, 1.0, 1.1)]
    (snap,) = parse_snapshot_text("\n".join([header, *body]), default_rate=0.03)
    assert snap.rate == 0.03
    assert snap.phase is Phase.AFTER  # inferred from the dates


def test_phase_must_match_dates():
    text = "\n".join([HEADER, *rows(phase="after")])
    with pytest.raises(InvariantViolation):
        parse_snapshot_text(text)


def test_observation_bounds():
    with pytest.raises(InvariantViolation):
        IvObservation(1.0, 0.0)
    with pytest.raises(InvariantViolation):
        IvObservation(-1.0, 0.3)


def test_too_few_observations():
    with pytest.raises(InvariantViolation):
        make_snapshot([0.3, 0.3], moneyness=(0.9, 1.0))


def test_grouping_with_on_snapshot():
    snaps = [make_snapshot([0.4] * 9, ticker="GOOGL", phase=p) for p in Phase]
    grouping = group_event_studies(snaps)
    (study,) = grouping.studies
    assert study.on is not None
    assert study.quarter == "Q2-2022"
    assert grouping.incomplete == []


def test_grouping_without_on_snapshot():
    snaps = [make_snapshot([0.4] * 9, phase=p) for p in (Phase.BEFORE, Phase.AFTER)]
    (study,) = group_event_studies(snaps).studies
    assert study.on is None


def test_two_before_snapshots_are_ambiguous():
    a = make_snapshot([0.4] * 9, phase=Phase.BEFORE, expiry_days=3)
    b = make_snapshot([0.4] * 9, phase=Phase.BEFORE, expiry_days=10)
    with pytest.raises(AmbiguousPhase):
        group_event_studies([a, b])


def test_incomplete_events_are_reported():
    grouping = group_event_studies([make_snapshot([0.4] * 9, phase=Phase.BEFORE)])
    assert grouping.studies == []
    (inc,) = grouping.incomplete
    assert inc.missing == (Phase.AFTER,)


def test_quarter_label():
    assert quarter_label(dt.date(2022, 1, 1)) == "Q1-2022"
    assert quarter_label(dt.date(2022, 12, 31)) == "Q4-2022"


finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def snapshots(draw):
    n = draw(st.integers(3, 12))
    ms = sorted(draw(st.sets(st.floats(0.5, 1.5, **finite), min_size=n, max_size=n)))
    ivs = draw(st.lists(st.floats(0.01, 3.0, **finite), min_size=n, max_size=n))
    ead = draw(st.dates(dt.date(2000, 1, 1), dt.date(2030, 1, 1)))
    offset = draw(st.sampled_from([-1, 0, 1]))
    phase = {-1: Phase.BEFORE, 0: Phase.ON, 1: Phase.AFTER}[offset]
    return ChainSnapshot(
        ticker=draw(st.sampled_from(["AAPL", "GOOGL", "X"])),
        snapshot_date=ead + dt.timedelta(days=offset),
        ead_date=ead,
        phase=phase,
        expiry_days=draw(st.integers(1, 400)),
        spot=draw(st.floats(0.01, 1e5, **finite)),
        rate=draw(st.floats(-0.05, 0.2, **finite)),
        observations=tuple(IvObservation(m, v) for m, v in zip(ms, ivs)),
    )


@given(snapshots())
@settings(max_examples=100, deadline=None)
def test_round_trip(snap):
    (back,) = parse_snapshot_text(serialize_snapshots([snap]))
    assert back == snap


@given(
    st.lists(
        st.tuples(
            st.sampled_from(["0.9", "1.0", "1.1", "1.2", "x", "", "-0.5", "nan"]),
            st.sampled_from(["0.3", "0.5", "0", "-0.2", "12", "abc", "inf"]),
        ),
        min_size=1,
        max_size=6,
    )
)
@settings(max_examples=200, deadline=None)
def test_fuzzed_rows_accepted_iff_valid(fields):
    body = [f"T,2022-04-25,2022-04-26,before,3,100,0,{m},{v}" for m, v in fields]

    def valid_number(text, lo, hi):
        try:
            x = float(text)
        except ValueError:
            return False
        return lo < x < hi

    ms = [m for m, _ in fields]
    expect_ok = (
        all(valid_number(m, 0, float("inf")) for m in ms)
        and all(valid_number(v, 0, 10) for _, v in fields)
        and len(set(float(m) for m in ms)) == len(ms)
        and len(ms) >= 3
    )
    try:
        (snap,) = parse_snapshot_text("\n".join([HEADER, *body]))
    except (InvariantViolation, MalformedRow):
        assert not expect_ok
    else:
        assert expect_ok
        assert snap.moneyness == sorted(float(m) for m in ms)
