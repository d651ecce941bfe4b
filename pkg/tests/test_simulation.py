from fractions import Fraction

import pytest

from ivnsim import des
from ivnsim.andl import load, loads
from ivnsim.ethernet import wire_duration, wire_length
from ivnsim.results.constraints import parse_constraints
from ivnsim.results.writers import read_pcap
from ivnsim.simulation import Simulation, simulate

from conftest import SCENARIOS

US, MS = des.US, des.MS
POOLED = __import__("pathlib").Path(__file__).parent / "data" / "pooled.andl"
PERFECT = {"clock.sync_precision": "0ns"}


def control(**overrides):
    return load(SCENARIOS / "control.andl", {**PERFECT, **overrides})


def test_tt_latency_from_hop_arithmetic():
    r = simulate(control(), duration=50 * MS)
    tx = wire_duration(wire_length(128), 100_000_000)
    assert tx == 13_280_000
    tick = 80 * 1000
    # four transmissions, three switch delays, one tick of guard per hop
    expect = 4 * tx + 3 * 8 * US + 4 * tick
    s = r.collector.streams["ctrl_tt"]
    assert s.min == s.max == expect == 77_440_000


def test_hop_residence_per_hop():
    r = simulate(control(), duration=50 * MS)
    s = r.collector.streams["ctrl_tt"]
    # sender + three switches
    assert len(s.hop_sums) == 4
    assert sum(s.hop_sums) + s.count * 4 * 13_280_000 == s.sum


def test_watermarks_match_queue_log_replay():
    sim = Simulation(control(cross_traffic_frame_size="800"), duration=30 * MS, queue_log=True)
    r = sim.run()
    level, peak = {}, {}
    for key, df, _ in r.collector.queue_log:
        level[key] = level.get(key, 0) + df
        peak[key] = max(peak.get(key, 0), level[key])
    assert peak == {k: wm.max_frames for k, wm in r.collector.watermarks.items()}


def test_same_seed_same_outputs():
    a = Simulation(load(SCENARIOS / "control.andl"), seed=5, duration=20 * MS, capture=True).run()
    b = Simulation(load(SCENARIOS / "control.andl"), seed=5, duration=20 * MS, capture=True).run()
    assert a.csv() == b.csv() and a.json() == b.json() and a.pcap_bytes() == b.pcap_bytes()
    c = Simulation(load(SCENARIOS / "control.andl"), seed=6, duration=20 * MS).run()
    assert c.csv() != a.csv()


def test_pcap_contains_every_transmission():
    r = Simulation(control(classes="tt"), duration=25 * MS, capture=True).run()
    _, records = read_pcap(r.pcap_bytes())
    # three TT frames, four hops each
    assert len(records) == 12
    assert all(len(data) == wire_length(128) for _, _, data, _ in records)


def test_stop_rule_ends_run_at_violation():
    rules = parse_constraints(
        '<constraints><constraint module="control.DME1" name="ctrl_rc:rxMessageAge" action="stop">'
        "<max>0.00001</max></constraint></constraints>")
    r = Simulation(control(), duration=100 * MS, constraints=rules).run()
    assert r.stop is not None and r.summary.stopped_early
    assert r.summary.final_time == r.stop.time
    assert r.violations[-1] == r.stop
    assert r.stop.value > Fraction(1, 100_000)


def test_report_rule_keeps_running():
    rules = parse_constraints(
        '<constraints><constraint module="control.DME1" name="rxMessageAge:vector">'
        "<max>0.00001</max></constraint></constraints>")
    r = Simulation(control(), duration=20 * MS, constraints=rules).run()
    assert r.stop is None and len(r.violations) > 10
    assert not r.summary.stopped_early


def test_classes_override_filters_messages():
    model = control(classes="rc,be")
    assert {m.stats_class for m in model.messages} == {"rc", "be"}


def test_can_route_through_backbone():
    r = simulate(load(SCENARIOS / "two_can_buses.andl", PERFECT), duration=100 * MS)
    s = r.collector.streams["msg1"]
    assert s.count > 10
    gw = r.sim.hosts["gw1"]
    assert gw.releases and all(rel - arr <= h for _, arr, rel, h in gw.releases)


def test_pool_releases_within_holdup():
    for seed in range(3):
        r = Simulation(load(POOLED), seed=seed, duration=100 * MS).run()
        gw = r.sim.hosts["gw1"]
        assert len(gw.releases) > 100
        assert all(arr <= rel <= arr + h for _, arr, rel, h in gw.releases)
        assert {m for m, *_ in gw.releases} == {"a", "b", "c"}
        assert set(r.collector.streams) == {"a", "b", "c"}


def test_burst_completion_recorded():
    r = simulate(control(cross_traffic_frame_size="1518"), duration=100 * MS)
    (key,) = r.collector.bursts
    assert key == "cross->DME1" and r.collector.bursts[key].count == 1


def test_tt_buffers_hold_at_most_one_frame():
    r = simulate(load(SCENARIOS / "control.andl"), duration=100 * MS)
    tt = [wm for wm in r.collector.watermarks.values() if wm.cls == "tt"]
    assert tt and all(wm.max_frames <= 1 for wm in tt)


def test_bad_duration():
    with pytest.raises(ValueError):
        Simulation(control(), duration=0)


def test_metadata_reports_run_settings():
    r = simulate(control(), duration=5 * MS, seed=9)
    meta = r.metadata()
    assert meta["seed"] == 9 and meta["duration_ps"] == 5 * MS
