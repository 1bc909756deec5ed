import pytest
from hypothesis import given, settings, strategies as st

from rtsim.metrics import (CSV_FIELDS, AccountingError, DropReason, MetricsRecord, csv_row,
                           parse_csv_row, summarize, summary_warning)


def _record(on_time=0, late=0, dropped=0, open_=0):
    rec = MetricsRecord()
    pid = 0
    for _ in range(on_time):
        rec.publish(pid)
        rec.record_delivery(pid, 0.9, 1.0)
        pid += 1
    for _ in range(late):
        rec.publish(pid)
        rec.record_delivery(pid, 1.5, 1.0)
        pid += 1
    for _ in range(dropped):
        rec.publish(pid)
        rec.record_drop(pid, DropReason.MAC_FAILURE)
        pid += 1
    for _ in range(open_):
        rec.publish(pid)
        pid += 1
    return rec


def test_mixed_outcomes():
    s = summarize(_record(8, 1, 1))
    assert s.miss_ratio == pytest.approx(0.2)
    assert s.drop_ratio == pytest.approx(0.1)
    assert s.drop_reasons["MacFailure"] == 1


def test_all_on_time():
    s = summarize(_record(5))
    assert (s.miss_ratio, s.drop_ratio) == (0.0, 0.0)


def test_all_dropped():
    s = summarize(_record(dropped=4))
    assert s.miss_ratio == s.drop_ratio == 1.0


def test_on_deadline_counts_on_time():
    rec = MetricsRecord()
    rec.publish(0)
    rec.record_delivery(0, 1.0, 1.0)
    assert rec.delivered_on_time == 1


def test_in_flight_is_missed_not_dropped():
    s = summarize(_record(1, open_=1))
    assert s.in_flight == 1
    assert s.miss_ratio == 0.5 and s.drop_ratio == 0.0


def test_double_termination_raises():
    rec = _record(1)
    with pytest.raises(AccountingError):
        rec.record_drop(0, DropReason.GF_VOID)
    rec.publish(1)
    with pytest.raises(AccountingError):
        rec.publish(1)


def test_empty_record_warns():
    s = summarize(MetricsRecord())
    assert s.miss_ratio == 0 and s.drop_ratio == 0
    assert summary_warning(s)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_bound_and_conservation(on_time, late, dropped, open_):
    rec = _record(on_time, late, dropped, open_)
    assert rec.conserved()
    s = summarize(rec)
    assert 0 <= s.drop_ratio <= s.miss_ratio <= 1


def test_csv_round_trip():
    s = summarize(_record(8, 1, 1))
    row = csv_row(s, "grid", "DRTS", "gf", 0.5, 0.7, 3)
    assert len(row) == len(CSV_FIELDS)
    parsed = parse_csv_row(row)
    assert parsed["miss_ratio"] == 0.2 and parsed["seed"] == 3
    assert row[11] == "0.200000"
