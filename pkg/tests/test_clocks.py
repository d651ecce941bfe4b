import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from ivnsim.clocks import LocalClock, Oscillator


def exact_local(drift_ppm, elapsed):
    return Fraction(elapsed) * (1 + Fraction(drift_ppm) / 10**6)


def test_identity_without_drift():
    c = LocalClock()
    for t in (0, 1, 123_456_789):
        assert c.global_to_local(t) == t
        assert c.local_to_global(t) == t


@pytest.mark.parametrize("drift, elapsed, expect", [
    (100, 10**12, 1_000_100_000_000),
    (-50, 10**10, 9_999_500_000),
])
def test_drift_examples(drift, elapsed, expect):
    c = LocalClock(Oscillator(drift))
    assert c.global_to_local(elapsed) == expect == exact_local(drift, elapsed)


def test_sync_precision_zero_gives_zero_offset():
    c = LocalClock(Oscillator(20), sync_interval=10**9, sync_precision=0)
    c.apply_sync(5_000, random.Random(1))
    assert c.offset == 0 and c.global_to_local(5_000) == 5_000


def test_sync_offsets_bounded_and_reproducible():
    def offsets(seed):
        c = LocalClock(sync_interval=10**9, sync_precision=500_000)
        rng = random.Random(seed)
        out = []
        for k in range(200):
            c.apply_sync(k * 10**9, rng)
            out.append(c.offset)
        return out

    first = offsets(3)
    assert all(-500_000 <= o <= 500_000 for o in first)
    assert first == offsets(3)


def test_drift_limit_rejected():
    with pytest.raises(ValueError):
        Oscillator(10_000)


@given(st.integers(-200, 200), st.integers(1, 1000), st.integers(0, 10**12))
def test_round_trip_and_ticks(drift, tick, t):
    c = LocalClock(Oscillator(drift, tick))
    local = c.global_to_local(t)
    assert local % tick == 0
    assert local <= exact_local(drift, t) < local + tick
    # earliest global instant whose reading reaches ``local``
    g = c.local_to_global(local)
    assert g <= t
    assert c.global_to_local(g) >= local
    if g > 0:
        assert c.global_to_local(g - 1) < local


@given(st.integers(-100, 100), st.integers(0, 500_000), st.integers(0, 10**9), st.integers(0, 2**32))
def test_error_within_bound_between_syncs(drift, precision, dt, seed):
    interval = 10**9
    c = LocalClock(Oscillator(drift, 80_000), sync_interval=interval, sync_precision=precision)
    c.apply_sync(7 * interval, random.Random(seed))
    t = 7 * interval + dt
    assert abs(c.global_to_local(t) - t) <= c.max_error()
