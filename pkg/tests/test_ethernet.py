import pytest
from hypothesis import given, strategies as st

from ivnsim import des
from ivnsim.ethernet import (
    ClassTag, EgressPort, EthernetFrame, Link, Switch, TtBufferOverrun, frame_bytes,
    wire_duration, wire_length,
)
from ivnsim.shapers import TtAction, TtSchedule

RATE = 100_000_000


def frame(name, kind="be", payload=46, t=0, **tag):
    return EthernetFrame(name, "src", ClassTag(kind, **tag), payload, t, [["src", t, None]])


@pytest.mark.parametrize("wire, expect", [(1518, 123_040_000), (64, 6_720_000), (118, 11_040_000)])
def test_wire_duration_examples(wire, expect):
    assert wire_duration(wire, RATE) == expect


def test_wire_length_pads_to_minimum():
    assert wire_length(0) == 64
    assert wire_length(100) == 118
    assert wire_length(1500) == 1518
    with pytest.raises(ValueError):
        wire_length(1501)


@given(st.integers(0, 1500), st.integers(1, 10**12))
def test_wire_duration_is_ceiling(payload, rate):
    wire = wire_length(payload)
    d = wire_duration(wire, rate)
    bits = (8 + wire + 12) * 8
    assert (d - 1) * rate < bits * 10**12 <= d * rate


@given(st.integers(0, 1500), st.integers(0, 4095), st.integers(0, 7))
def test_frame_bytes_length(payload, ident, prio):
    f = frame("s", "rc", payload, ident=ident, priority=prio)
    raw = frame_bytes(f)
    assert len(raw) == f.wire_len
    assert raw[12:14] == b"\x81\x00"
    assert raw[14] >> 5 == prio


def make_switch(net, ports=("p1",), delay=8 * des.US, schedule=None, slopes=None):
    sw = Switch(net, "sw", delay)
    sink = []
    for name in ports:
        port = EgressPort(net, "sw", name, Link(RATE), schedule=schedule, idle_slopes=slopes)
        port.peer = lambda f, t, name=name: sink.append((name, t, f))
        sw.ports[name] = port
    return sw, sink


def test_be_starts_after_processing_delay(net):
    sw, _ = make_switch(net)
    sw.table["s"] = ["p1"]
    net.queue.at(1000, des.RECEIVE, sw.receive, frame("s"), 1000)
    net.run()
    assert net.transmits[0][0] == 1000 + 8 * des.US


def test_multicast_replicates(net):
    sw, sink = make_switch(net, ("p1", "p2"))
    sw.table["s"] = ["p1", "p2"]
    net.queue.at(0, des.RECEIVE, sw.receive, frame("s"), 0)
    net.run()
    assert sorted(name for name, _, _ in sink) == ["p1", "p2"]
    assert sink[0][2] is not sink[1][2]


def test_unroutable_is_dropped(net):
    sw, sink = make_switch(net)
    net.queue.at(0, des.RECEIVE, sw.receive, frame("nowhere"), 0)
    net.run()
    assert sink == [] and net.collector.drops == {"sw.unroutable": 1}


def test_two_tt_frames_overrun_buffer(net):
    sched = TtSchedule(5 * des.MS, [TtAction(1 * des.MS, 7, "p1", 10 * des.US)])
    port = EgressPort(net, "sw", "p1", Link(RATE), schedule=sched)
    port.enqueue(frame("a", "tt", ident=7), 0)
    with pytest.raises(TtBufferOverrun):
        port.enqueue(frame("b", "tt", ident=7), 10)


def test_tt_due_beats_be(net):
    sched = TtSchedule(5 * des.MS, [TtAction(1 * des.MS, 7, "p1", 10 * des.US)])
    port = EgressPort(net, "sw", "p1", Link(RATE), schedule=sched)
    port.peer = lambda f, t: None
    port.enqueue(frame("tt", "tt", ident=7), 0)
    port.start_tt(0)
    # BE frame too long to finish before the window: held back by the guard band
    net.queue.at(1 * des.MS - 50 * des.US, des.APP, port.enqueue, frame("be", payload=1500),
                 1 * des.MS - 50 * des.US)
    net.run(3 * des.MS)
    order = [(t, f.stream) for t, _, f in net.transmits]
    assert order[0] == (1 * des.MS, "tt")
    assert order[1][1] == "be" and order[1][0] >= 1 * des.MS + 10 * des.US


def test_guard_band_admits_short_frame(net):
    sched = TtSchedule(5 * des.MS, [TtAction(1 * des.MS, 7, "p1", 10 * des.US)])
    port = EgressPort(net, "sw", "p1", Link(RATE), schedule=sched)
    port.peer = lambda f, t: None
    t0 = 1 * des.MS - 200 * des.US
    net.queue.at(t0, des.APP, port.enqueue, frame("be", payload=1500), t0)
    net.run(2 * des.MS)
    assert net.transmits[0][0] == t0


def test_negative_credit_lets_be_through(net):
    port = EgressPort(net, "sw", "p1", Link(RATE), idle_slopes={"A": 20_000_000})
    port.peer = lambda f, t: None
    port.cbs["A"].credit = -1
    port.enqueue(frame("be"), 0)
    port.enqueue(frame("avb", "avb", sr_class="A", priority=3), 0)
    order = [f.stream for _, _, f in net.transmits]
    assert order == ["be"]
    net.run()
    assert [f.stream for _, _, f in net.transmits] == ["be", "avb"]


def test_rc_beats_be(net):
    port = EgressPort(net, "sw", "p1", Link(RATE))
    port.peer = lambda f, t: None
    port.enqueue(frame("first", payload=0), 0)  # occupies the line
    port.enqueue(frame("be"), 1)
    port.enqueue(frame("rc", "rc", priority=6), 2)
    net.run()
    assert [f.stream for _, _, f in net.transmits] == ["first", "rc", "be"]


def test_rc_priorities(net):
    port = EgressPort(net, "sw", "p1", Link(RATE))
    port.peer = lambda f, t: None
    port.enqueue(frame("first", payload=0), 0)
    for p in (2, 7, 4):
        port.enqueue(frame(f"rc{p}", "rc", priority=p), 1)
    net.run()
    assert [f.stream for _, _, f in net.transmits] == ["first", "rc7", "rc4", "rc2"]


@given(st.lists(st.tuples(st.integers(0, 10**8), st.integers(0, 1500)), min_size=1, max_size=20))
def test_port_is_work_conserving_for_be(items):
    from conftest import FakeNet

    net = FakeNet()
    port = EgressPort(net, "sw", "p1", Link(RATE))
    port.peer = lambda f, t: None
    items = sorted(items)
    for i, (t, payload) in enumerate(items):
        net.queue.at(t, des.APP, port.enqueue, frame(f"f{i}", payload=payload, t=t), t)
    net.run()
    # FIFO, never overlapping, never idle while frames wait
    free = 0
    for (t, _, f), (arr, payload) in zip(net.transmits, items):
        assert t == max(arr, free)
        free = t + wire_duration(wire_length(payload), RATE)
