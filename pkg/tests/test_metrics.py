import pytest

from gradcast.metrics import (RunMetrics, RunRecorder, aggregate,
                              aggregate_columns, aggregate_row, run_row)
from gradcast.policies import Battery


class N:
    def __init__(self, node_id, capacity=1.0, consumed=0.0, is_sink=False):
        self.id = node_id
        self.is_sink = is_sink
        self.battery = Battery(capacity, consumed)


def rm(run_index=0, sent=10, delivered=8, delays=None, forwarded=100, **kw):
    delays = {} if delays is None else delays
    return RunMetrics(run_index, "BGB", 0.0, "", sent, delivered,
                      min_delay_ms=delays, forwarded_total=forwarded, **kw)


def test_delivery_records_first_arrival_delay():
    rec = RunRecorder(0, "BGB", 0.0)
    rec.on_sent(("a", 1), 40.0)
    rec.on_delivery(("a", 1), 100.0)
    assert rec.delivered[("a", 1)] == 60.0
    rec.on_delivery(("a", 1), 120.0)   # a later duplicate cannot shrink it
    assert rec.delivered[("a", 1)] == 60.0


def test_undelivered_messages_only_count_as_sent():
    rec = RunRecorder(0, "BGB", 0.0)
    rec.on_sent(("a", 1), 40.0)
    m = rec.finalize([N(0)], include_sink=False)
    assert m.messages_sent == 1 and m.messages_delivered == 0
    assert m.success_ratio == 0.0 and m.avg_delay_ms is None


def test_success_ratio_absent_when_nothing_sent():
    rec = RunRecorder(0, "BGB", 0.0)
    m = rec.finalize([N(0)], include_sink=False)
    assert m.success_ratio is None
    assert run_row(m)[4] == ""


def test_finalize_energy_and_dead_counts():
    nodes = [N(0, consumed=0.25), N(1, consumed=1.0), N(2, consumed=0.75, is_sink=True)]
    rec = RunRecorder(0, "BGB", 0.0)
    m = rec.finalize(nodes, include_sink=False)
    assert m.energy_consumed_pct == pytest.approx((25.0 + 100.0) / 2)
    assert m.dead_nodes == 1
    with_sink = rec.finalize(nodes, include_sink=True)
    assert with_sink.energy_consumed_pct == pytest.approx((25 + 100 + 75) / 3)


def test_energy_audit_detects_tampering():
    nodes = [N(0, consumed=0.5)]
    rec = RunRecorder(0, "BGB", 0.0)
    rec.finalize(nodes, include_sink=False, energy_log=[(0, 0.5)])
    with pytest.raises(AssertionError):
        rec.finalize(nodes, include_sink=False, energy_log=[(0, 0.4)])


def test_aggregate_two_runs():
    cell = aggregate([rm(0, delivered=4, sent=10, delays={1: 5.0}),
                      rm(1, delivered=6, sent=10, delays={1: 7.0})])
    mean, std, n = cell.stats["success_ratio"]
    assert mean == pytest.approx(0.5)
    assert std == pytest.approx(0.14142135623730953, rel=1e-9)
    assert n == 2
    dmean, dstd, dn = cell.stats["avg_delay_ms"]
    assert (dmean, dn) == (6.0, 2)


def test_aggregate_single_run_has_zero_std():
    cell = aggregate([rm(0)])
    mean, std, n = cell.stats["forwarded"]
    assert (mean, std, n) == (100.0, 0.0, 1)


def test_aggregate_order_invariant():
    runs = [rm(i, delivered=i, sent=10) for i in range(5)]
    a = aggregate(runs)
    b = aggregate(list(reversed(runs)))
    assert a.stats == b.stats


def test_aggregate_skips_absent_metrics_with_count():
    runs = [rm(0, delays={1: 5.0}), rm(1, delays={})]
    cell = aggregate(runs)
    mean, std, n = cell.stats["avg_delay_ms"]
    assert (mean, n) == (5.0, 1)
    assert cell.n_runs == 2


def test_aggregate_rejects_empty():
    with pytest.raises(ValueError):
        aggregate([])


def test_csv_rows_line_up_with_columns():
    m = rm(3, delays={("s", 1): 12.5}, adv_total=7, ncnt_total=2)
    row = run_row(m)
    assert row[0] == "3" and row[6] == "100" and row[7] == "9"
    cell = aggregate([m])
    assert len(aggregate_row(cell)) == len(aggregate_columns())
