import pytest
from hypothesis import given, strategies as st

from ivnsim import des
from ivnsim.shapers import (
    IDLE, TRANSMITTING, WAITING, BagState, CbsState, PolicerConfig, PolicerHistory, TtAction,
    TtSchedule, bag_gate, bag_release, cbs_advance, cbs_eligible, cbs_ready_time, guard_admit,
    police_ingress, tt_dispatch_time, windows_overlap,
)

US, MS = des.US, des.MS


def test_waiting_gains_idle_slope():
    s = CbsState(75_000_000, 100_000_000)
    cbs_advance(s, 10 * US, WAITING)
    assert s.credit == 750 * 10**12


def test_transmitting_loses_send_slope():
    s = CbsState(75_000_000, 100_000_000)
    cbs_advance(s, 123_040_000, TRANSMITTING)
    assert s.credit == -3076 * 10**12


def test_idle_resets_positive_credit():
    s = CbsState(75_000_000, 100_000_000, credit=500 * 10**12)
    cbs_advance(s, 5, IDLE)
    assert s.credit == 0


def test_idle_recovers_negative_credit_up_to_zero():
    s = CbsState(10, 100, credit=-100)
    cbs_advance(s, 4, IDLE)
    assert s.credit == -60
    cbs_advance(s, 100, IDLE)
    assert s.credit == 0


def test_eligibility_boundary():
    assert cbs_eligible(CbsState(1, 2))
    assert cbs_eligible(CbsState(1, 2, credit=0))
    assert not cbs_eligible(CbsState(1, 2, credit=-1))


@given(st.integers(1, 10**9), st.integers(-10**15, -1), st.integers(0, 10**6))
def test_ready_time_is_first_nonnegative_instant(slope, credit, last):
    s = CbsState(slope, slope + 1, credit, last)
    t = cbs_ready_time(s)
    assert credit + slope * (t - last) >= 0
    assert credit + slope * (t - 1 - last) < 0


def test_bad_slope_rejected():
    with pytest.raises(ValueError):
        CbsState(100, 100)


def test_dispatch_time_examples():
    sched = TtSchedule(5 * MS, [TtAction(1 * MS, 1, "p", 10 * US)])
    assert tt_dispatch_time(sched, 1, 0) == 1 * MS
    assert tt_dispatch_time(sched, 1, 1 * MS) == 1 * MS
    assert tt_dispatch_time(sched, 1, 1 * MS + 1) == 6 * MS


@given(st.integers(1, 10**6), st.data())
def test_dispatch_time_brute_force(cycle, data):
    offset = data.draw(st.integers(0, cycle - 1))
    now = data.draw(st.integers(0, 3 * cycle))
    sched = TtSchedule(cycle, [TtAction(offset, 1, "p", 1)])
    t = tt_dispatch_time(sched, 1, now)
    assert t >= now and t % cycle == offset and t - now < cycle


def test_guard_admit_examples():
    sched = TtSchedule(5 * MS, [TtAction(1 * MS, 1, "p", 10 * US)])
    assert guard_admit(None, 0, 123_040_000)
    assert guard_admit(TtSchedule(5 * MS), 0, 123_040_000)
    assert not guard_admit(sched, 1 * MS - 100 * US, 123_040_000)
    assert guard_admit(sched, 1 * MS - 200 * US, 123_040_000)


@given(st.integers(10, 2000), st.data())
def test_guard_admit_matches_interval_scan(cycle, data):
    n = data.draw(st.integers(0, 3))
    starts = sorted(data.draw(st.sets(st.integers(0, cycle - 1), min_size=n, max_size=n)))
    actions = []
    for i, s in enumerate(starts):
        nxt = starts[i + 1] if i + 1 < len(starts) else starts[0] + cycle
        actions.append(TtAction(s, i, "p", data.draw(st.integers(1, max(1, nxt - s)))))
    sched = TtSchedule(cycle, actions)
    now = data.draw(st.integers(0, 3 * cycle))
    tx = data.draw(st.integers(1, cycle - 1))
    blocked = set()
    for k in range(-1, 6):
        for a in actions:
            blocked.update(range(k * cycle + a.offset, k * cycle + a.offset + a.reserved))
    expect = not any(t in blocked for t in range(now, now + tx))
    assert guard_admit(sched, now, tx) == expect


@given(st.integers(1, 100), st.integers(0, 100), st.integers(0, 100), st.integers(0, 100),
       st.integers(0, 100))
def test_windows_overlap_brute_force(cycle, s1, d1, s2, d2):
    s1, s2 = s1 % cycle, s2 % cycle
    a = {(s1 + i) % cycle for i in range(d1)}
    b = {(s2 + i) % cycle for i in range(d2)}
    assert windows_overlap(s1, d1, s2, d2, cycle) == bool(a & b)


def test_bag_gate_examples():
    s = BagState(1 * MS)
    assert bag_gate(s, 7) == 7
    bag_release(s, 10 * MS)
    assert bag_gate(s, 10 * MS + 200 * US) == 11 * MS
    assert bag_gate(s, 12 * MS) == 12 * MS


def test_policer_examples():
    cfg = PolicerConfig(1 * MS, 200, 0)
    h = PolicerHistory()
    assert police_ingress(cfg, 100, 0, h) == "accept"
    assert police_ingress(cfg, 100, 500 * US, h) == "rate"
    assert police_ingress(cfg, 201, 5 * MS, h) == "size"
    assert police_ingress(cfg, 200, 1 * MS, h) == "accept"
    assert (h.accepted, h.dropped_rate, h.dropped_size) == (2, 1, 1)


def test_policer_jitter_allowance():
    cfg = PolicerConfig(1 * MS, 200, 100 * US)
    h = PolicerHistory()
    police_ingress(cfg, 64, 0, h)
    assert police_ingress(cfg, 64, 900 * US, h) == "accept"
