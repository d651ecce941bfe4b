"""Builds a runnable network from a validated model and drives one run."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import des
from .andl.model import DeviceModel, MessageModel, NetworkModel
from .andl.schedule import ScheduleResult, generate_tt_schedule
from .andl.validate import pool_bound, pool_key_for, pools_of
from .can import CanBus, CanFrame
from .clocks import LocalClock, Oscillator
from .ethernet import (
    SR_CLASS_PRIORITY,
    ClassTag,
    EgressPort,
    EthernetFrame,
    Link,
    QueueOverflow,
    Switch,
    frame_bytes,
    wire_length,
)
from .gateway import MAX_FRAMES, Destination, Pool, RoutingTable, encapsulated_size
from .results import writers
from .results.constraints import ConstraintChecker, ConstraintRule, Violation
from .results.stats import Collector, record_latency
from .shapers import BagState, PolicerConfig, PolicerHistory, bag_gate, bag_release

DEFAULT_DURATION = 1 * des.S
DEFAULT_IDLE_SHARE = Fraction(3, 4)
RX_METRIC = "rxMessageAge:vector"


def flow_key(msg: MessageModel, segment: str, segs) -> str:
    """Stream name of a message on an Ethernet segment (pools share one)."""
    pool = pool_key_for(msg, segment, segs)
    return f"{pool[0]}:{pool[1]}" if pool else msg.name


def eth_ident(msg: MessageModel, mapping) -> tuple:
    if mapping.kind == "be":
        return ("be", msg.name)
    return (mapping.kind, mapping.ident)


def class_tag(mapping) -> ClassTag:
    if mapping.kind == "tt":
        return ClassTag("tt", mapping.ident, 7)
    if mapping.kind == "rc":
        return ClassTag("rc", mapping.ident, mapping.priority)
    if mapping.kind == "avb":
        return ClassTag("avb", mapping.ident, SR_CLASS_PRIORITY[mapping.sr_class], mapping.sr_class)
    return ClassTag("be", 0, mapping.priority)


class _Delivered:
    """Minimal frame view handed to :func:`record_latency`."""

    __slots__ = ("created_at", "hop_trail")

    def __init__(self, created_at: int, hop_trail: list):
        self.created_at = created_at
        self.hop_trail = hop_trail


class BagShaper:
    """Source-side release gate of one rate-constrained virtual link."""

    def __init__(self, host: "Host", flow: str, bag: int, max_frame: int):
        self.host = host
        self.flow = flow
        self.state = BagState(bag, max_frame)
        self.pending: deque = deque()
        self.event: Optional[des.Event] = None
        self.releases: list[int] = []
        self.wm = host.sim.collector.watermark(host.name, "bag", "rc", flow)
        self.name = f"{host.name}.bag.{flow}"

    def offer(self, frame: EthernetFrame, t: int) -> None:
        self.pending.append(frame)
        self.wm.add(frame.wire_len)
        if self.event is None:
            self.release(t)

    def release(self, t: Optional[int] = None) -> None:
        if t is None:
            t = self.host.sim.queue.current_time
        self.event = None
        while self.pending:
            when = bag_gate(self.state, t)
            if when > t:
                self.event = self.host.sim.queue.at(when, des.APP, self.release)
                return
            frame = self.pending.popleft()
            self.wm.remove(frame.wire_len)
            bag_release(self.state, t)
            self.releases.append(t)
            self.host.emit(frame, t)


class Host:
    """End node or gateway: Ethernet ports, CAN attachments and applications."""

    def __init__(self, sim: "Simulation", model: DeviceModel):
        self.sim = sim
        self.name = model.name
        self.model = model
        self.ports: dict[str, EgressPort] = {}
        self.table: dict[str, list[str]] = {}
        self.buses: dict[str, CanBus] = {}
        self.shapers: dict[str, BagShaper] = {}

    # -- sending ------------------------------------------------------------

    def send_eth(self, frame: EthernetFrame, t: int) -> None:
        shaper = self.shapers.get(frame.stream)
        if shaper is not None:
            shaper.offer(frame, t)
        else:
            self.emit(frame, t)

    def emit(self, frame: EthernetFrame, t: int) -> None:
        peers = self.table.get(frame.stream)
        if not peers:
            self.sim.collector.drop(f"{self.name}.unroutable", frame.stream)
            return
        for i, peer in enumerate(peers):
            copy = frame if i == len(peers) - 1 else frame.copy()
            try:
                self.ports[peer].enqueue(copy, t)
            except QueueOverflow:
                self.sim.collector.drop(f"{self.name}.{peer}.overflow", frame.stream)

    # -- receiving ----------------------------------------------------------

    def receive(self, frame: EthernetFrame, t_rx: int) -> None:
        frame.hop_trail.append([self.name, t_rx, None])
        if frame.inner is not None:
            eth_trail = frame.hop_trail
            for inner in frame.inner:
                msg = self.sim.messages[inner.message]
                if self.name in msg.receivers:
                    trail = joined_trail(inner, eth_trail)
                    self.sim.deliver(msg, self.name, inner.created_at, trail, t_rx)
            return
        msg = self.sim.messages.get(frame.stream)
        if msg is None or self.name not in msg.receivers:
            self.sim.collector.drop(f"{self.name}.unroutable", frame.stream)
            return
        self.sim.deliver(msg, self.name, frame.created_at, frame.hop_trail, t_rx, frame.burst)

    def can_receive(self, bus: CanBus, frame: CanFrame, t: int) -> None:
        msg = self.sim.messages.get(frame.message)
        if msg is None or self.name not in msg.receivers:
            return
        if self.sim.last_hop.get((msg.name, self.name)) != bus.name:
            return
        trail = [list(h) for h in frame.hop_trail] + [[self.name, t, None]]
        self.sim.deliver(msg, self.name, frame.created_at, trail, t)


def joined_trail(inner: CanFrame, eth_trail: list) -> list:
    """Hop trail of a tunnelled CAN frame: its own hops, then the Ethernet ones."""
    trail = [list(h) for h in inner.hop_trail]
    trail[-1][2] = eth_trail[0][2]
    trail += [list(h) for h in eth_trail[1:]]
    return trail


class GatewayHost(Host):
    """Host that also translates between CAN segments and Ethernet."""

    def __init__(self, sim: "Simulation", model: DeviceModel):
        super().__init__(sim, model)
        self.routing = RoutingTable()
        self.pools: dict[str, Pool] = {}
        self.pool_tags: dict[str, ClassTag] = {}
        self.pool_holdup: dict[tuple, int] = {}
        self.flush_events: dict[str, des.Event] = {}
        self.holdups: dict[int, int] = {}
        self.releases: list[tuple[str, int, int, int]] = []  # (message, arrival, release, holdup)
        self.segment_of_bus: dict[str, str] = {}
        self.segment_of_peer: dict[str, str] = {}

    # CAN ingress
    def can_receive(self, bus: CanBus, frame: CanFrame, t: int) -> None:
        super().can_receive(bus, frame, t)
        key = (self.segment_of_bus[bus.name], ("can", frame.id))
        if key not in self.routing.entries:
            self.routing.route(key)
            return
        copy = CanFrame(frame.id, frame.data, frame.created_at, frame.message,
                        [list(h) for h in frame.hop_trail] + [[self.name, t, None]])
        delay = self.model.processing_delay
        self.sim.queue.at(t + delay, des.RECEIVE, self.translate, key, copy, t)

    def translate(self, key, frame: CanFrame, arrival: int) -> None:
        t = self.sim.queue.current_time
        for dest in self.routing.route(key):
            if dest.kind == "can":
                out = CanFrame(dest.params, frame.data, frame.created_at, frame.message,
                               [list(h) for h in frame.hop_trail])
                self.buses[dest.via].enqueue(self.name, out, t)
            else:
                self.admit(dest.pool, key, frame, arrival, t)

    def admit(self, pool_key: str, key, frame: CanFrame, arrival: int, t: int) -> None:
        pool = self.pools[pool_key]
        size = encapsulated_size([f.dlc for f, _ in pool.pending] + [frame.dlc])
        if pool.pending and (size > 1500 or len(pool.pending) >= MAX_FRAMES):
            self.flush(pool_key)
        holdup = self.pool_holdup[(pool_key, key)]
        before = pool.deadline
        pool.admit(key, frame, arrival, holdup)
        if pool.deadline < t:
            pool.deadline = t
        if before != pool.deadline:
            old = self.flush_events.get(pool_key)
            if old is not None:
                self.sim.queue.cancel(old)
            self.flush_events[pool_key] = self.sim.queue.at(pool.deadline, des.FLUSH, self.flush, pool_key)
        self.holdups[id(frame)] = holdup

    def flush(self, pool_key: str) -> None:
        t = self.sim.queue.current_time
        pool = self.pools[pool_key]
        old = self.flush_events.pop(pool_key, None)
        if old is not None:
            self.sim.queue.cancel(old)
        if not pool.pending:
            return
        frames = [f for f, _ in pool.pending]
        for f, arrival in pool.pending:
            self.releases.append((f.message, arrival, t, self.holdups.pop(id(f))))
        payload = pool.flush(t)
        eth = EthernetFrame(pool_key, self.name, self.pool_tags[pool_key], len(payload), t,
                            [[self.name, t, None]], inner=frames, data=payload)
        self.send_eth(eth, t)

    # Ethernet ingress
    def receive(self, frame: EthernetFrame, t_rx: int) -> None:
        frame.hop_trail.append([self.name, t_rx, None])
        delay = self.model.processing_delay
        self.sim.queue.at(t_rx + delay, des.RECEIVE, self.handle_eth, frame, t_rx)

    def handle_eth(self, frame: EthernetFrame, t_rx: int) -> None:
        t = self.sim.queue.current_time
        handled = False
        segment = self.segment_of_peer[frame.hop_trail[-2][0]]
        if frame.inner is not None:
            for inner in frame.inner:
                key = (segment, ("can", inner.id))
                msg = self.sim.messages[inner.message]
                if self.name in msg.receivers:
                    self.sim.deliver(msg, self.name, inner.created_at, joined_trail(inner, frame.hop_trail), t_rx)
                    handled = True
                if key in self.routing.entries:
                    trail = joined_trail(inner, frame.hop_trail)
                    for dest in self.routing.route(key):
                        out = CanFrame(dest.params, inner.data, inner.created_at, inner.message, trail)
                        self.buses[dest.via].enqueue(self.name, out, t)
                    handled = True
        else:
            msg = self.sim.messages.get(frame.stream)
            if msg is not None and self.name in msg.receivers:
                self.sim.deliver(msg, self.name, frame.created_at, frame.hop_trail, t_rx, frame.burst)
                handled = True
            if msg is not None:
                key = (segment, eth_ident(msg, msg.mapping(segment)))
                if key in self.routing.entries:
                    data = frame.data if frame.data is not None else bytes(frame.payload_len)
                    for dest in self.routing.route(key):
                        trail = [list(h) for h in frame.hop_trail]
                        out = CanFrame(dest.params, data[:8], frame.created_at, msg.name, trail)
                        self.buses[dest.via].enqueue(self.name, out, t)
                    handled = True
        if frame.stream in self.table:
            # Ethernet transit through the gateway's own ports
            self.emit(frame, t)
            handled = True
        if not handled:
            self.sim.collector.drop(f"{self.name}.unroutable", frame.stream)


class App:
    """Traffic source of one message: periodic, jittered, optionally bursty."""

    def __init__(self, sim: "Simulation", host: Host, msg: MessageModel):
        self.sim = sim
        self.host = host
        self.msg = msg
        self.name = f"{host.name}.{msg.name}"
        self.rng = random.Random(f"{sim.seed}:{msg.name}")
        self.k = 0
        self.eth: Optional[tuple[str, ClassTag]] = None
        self.can: list[tuple[str, int]] = []
        seen = set()
        for _, path in msg.routes:
            nxt = path[1]
            if nxt in seen:
                continue
            seen.add(nxt)
            seg = sim.model.segment_of(path[0], nxt)
            mapping = msg.mapping(seg.name)
            if seg.kind == "can":
                self.can.append((nxt, mapping.ident))
            elif self.eth is None:
                self.eth = (flow_key(msg, seg.name, sim.model.segment_map), class_tag(mapping))

    def start(self) -> None:
        self._schedule(self.msg.offset)

    def _schedule(self, base: int) -> None:
        t = base + (self.rng.randint(0, self.msg.jitter) if self.msg.jitter else 0)
        if t <= self.sim.duration:
            self.sim.queue.at(t, des.APP, self.fire)

    def fire(self) -> None:
        t = self.sim.queue.current_time
        msg = self.msg
        k = self.k
        self.k += 1
        n = msg.frames_per_release
        for i in range(n):
            burst = (msg.name, k, n) if msg.burst is not None else None
            if self.eth is not None:
                flow, tag = self.eth
                frame = EthernetFrame(flow, self.host.name, tag, msg.payload, t,
                                      [[self.host.name, t, None]], burst=burst)
                self.host.send_eth(frame, t)
            for bus, can_id in self.can:
                data = bytes((k + i + j) & 0xFF for j in range(msg.payload))
                frame = CanFrame(can_id, data, t, msg.name, [[self.host.name, t, None]])
                self.host.buses[bus].enqueue(self.host.name, frame, t)
        if msg.period:
            self._schedule(msg.offset + self.k * msg.period)


@dataclass
class RunResult:
    model: NetworkModel
    seed: int
    duration: int
    summary: des.RunSummary
    collector: Collector
    violations: list[Violation]
    stop: Optional[Violation]
    pcap: Optional[list[tuple[int, bytes]]]
    event_log: Optional[list[str]]
    tt_log: list[tuple[str, str, int, int]]
    schedule: ScheduleResult
    sim: "Simulation" = field(repr=False, default=None)

    @property
    def config_digest(self) -> str:
        return writers.digest((self.model, self.seed, self.duration))

    def metadata(self) -> dict:
        return {
            "network": self.model.name,
            "seed": self.seed,
            "duration_ps": self.duration,
            "final_time_ps": self.summary.final_time,
            "events": self.summary.processed,
            "stopped_early": self.summary.stopped_early,
            "tie_classes": dict(des.TIE_CLASSES),
            "inline": [list(kv) for kv in self.model.metadata],
            "overrides": [list(kv) for kv in self.model.overrides],
            "tt_cycle_ps": self.schedule.cycle,
        }

    def csv(self) -> str:
        return writers.csv_text(self.collector)

    def json(self) -> str:
        return writers.json_text(self.collector, self.config_digest, self.metadata(), self.violations)

    def pcap_bytes(self) -> bytes:
        return writers.pcap_bytes(self.pcap or [])


class Simulation:
    def __init__(
        self,
        model: NetworkModel,
        seed: Optional[int] = None,
        duration: Optional[int] = None,
        constraints: Optional[list[ConstraintRule]] = None,
        capture: bool = False,
        event_log: bool = False,
        queue_log: bool = False,
    ):
        self.model = model
        self.seed = seed if seed is not None else (model.seed if model.seed is not None else 0)
        self.duration = duration if duration is not None else (model.duration or DEFAULT_DURATION)
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        self.queue = des.EventQueue()
        self.collector = Collector(queue_log=queue_log)
        self.checker = ConstraintChecker(constraints) if constraints else None
        self.capture: Optional[list] = [] if capture else None
        self.event_log: Optional[list[str]] = [] if event_log else None
        self.tt_log: list[tuple[str, str, int, int]] = []
        self.messages = {m.name: m for m in model.messages}
        self.schedule = generate_tt_schedule(model)
        self.last_hop: dict[tuple[str, str], str] = {}
        self.bursts: dict[tuple, int] = {}
        self._build()

    # -- construction --------------------------------------------------------

    def _build(self) -> None:
        model = self.model
        segs = model.segment_map
        self.clocks: dict[str, LocalClock] = {}
        self.hosts: dict[str, Host] = {}
        self.switches: dict[str, Switch] = {}
        self.buses: dict[str, CanBus] = {}
        for dev in model.devices:
            if dev.kind == "canLink":
                self.buses[dev.name] = CanBus(self, dev.name, dev.bitrate)
                continue
            self.clocks[dev.name] = self._clock(dev)
            if dev.kind == "switch":
                self.switches[dev.name] = Switch(self, dev.name, dev.processing_delay)
            elif dev.kind == "gateway":
                self.hosts[dev.name] = GatewayHost(self, dev)
            else:
                self.hosts[dev.name] = Host(self, dev)

        slopes = self._idle_slopes()
        for seg in model.segments:
            for link in seg.links:
                for a, b in ((link.a, link.b), (link.b, link.a)):
                    dev = model.device(a)
                    clock = self.clocks[a]
                    port = EgressPort(
                        self, a, b, Link(link.rate, link.delay),
                        clock=None if clock.is_ideal else clock,
                        schedule=self.schedule.port(a, b),
                        guard_margin=self.schedule.margins[a],
                        idle_slopes=slopes.get((a, b)),
                        capacity=dev.queue_capacity,
                    )
                    self._device(a).ports[b] = port
                    if a in self.hosts and isinstance(self.hosts[a], GatewayHost):
                        self.hosts[a].segment_of_peer[b] = seg.name
            for dev_name, bus_name in seg.attachments:
                host = self.hosts[dev_name]
                bus = self.buses[bus_name]
                bus.attach(host)
                host.buses[bus_name] = bus
                if isinstance(host, GatewayHost):
                    host.segment_of_bus[bus_name] = seg.name
        for seg in model.segments:
            for link in seg.links:
                for a, b in ((link.a, link.b), (link.b, link.a)):
                    self._device(a).ports[b].peer = self._device(b).receive

        self._tables(segs)
        self._gateways(segs)
        self.apps = [App(self, self.hosts[m.sender], m) for m in model.messages]

    def _device(self, name: str):
        return self.switches.get(name) or self.hosts[name]

    def _clock(self, dev: DeviceModel) -> LocalClock:
        c = dev.clock
        drift = c.drift_ppm
        if c.random_drift and drift:
            rng = random.Random(f"{self.seed}:drift:{dev.name}")
            bound = int(drift * 1000)
            drift = Fraction(rng.randint(-bound, bound), 1000)
        clock = LocalClock(Oscillator(Fraction(drift), c.tick_length), c.sync_interval,
                           c.sync_precision, dev.name)
        clock.rng = random.Random(f"{self.seed}:clock:{dev.name}")
        return clock

    def _idle_slopes(self) -> dict[tuple[str, str], dict[str, int]]:
        """Per port and SR class: sum of stream reservations, else the default share."""
        reserved: dict[tuple[str, str], dict[str, list]] = {}
        for msg in self.model.messages:
            for m in msg.mappings:
                if m.kind != "avb":
                    continue
                ports = set()
                for _, path in msg.routes:
                    for a, b in zip(path, path[1:]):
                        if self.model.edge_segments[frozenset((a, b))] == m.segment:
                            ports.add((a, b))
                for port in ports:
                    reserved.setdefault(port, {}).setdefault(m.sr_class, []).append(m.idle_slope)
        out = {}
        for (a, b), classes in reserved.items():
            rate = self.model.link(a, b).rate
            out[(a, b)] = {}
            for sr, slopes in sorted(classes.items()):
                if any(s is None for s in slopes):
                    slope = int(rate * DEFAULT_IDLE_SHARE)
                else:
                    slope = sum(slopes)
                if not 0 < slope < rate:
                    raise ValueError(f"AVB class {sr} reservation {slope} b/s on {a}->{b} "
                                     f"must stay below the {rate} b/s port rate")
                out[(a, b)][sr] = slope
        return out

    def _tables(self, segs) -> None:
        """Forwarding tables, source shapers and ingress policers per flow."""
        for msg in self.model.messages:
            for _, path in msg.routes:
                self.last_hop[(msg.name, path[-1])] = path[-2]
                for a, b in zip(path, path[1:]):
                    seg = self.model.segment_of(a, b)
                    if seg.kind != "ethernet":
                        continue
                    flow = flow_key(msg, seg.name, segs)
                    table = self._device(a).table
                    peers = table.setdefault(flow, [])
                    if b not in peers:
                        peers.append(b)
                    mapping = msg.mapping(seg.name)
                    if mapping.kind == "rc":
                        if a in self.hosts and flow not in self.hosts[a].shapers and self._is_origin(msg, a, seg.name):
                            max_frame = mapping.max_frame or 1518
                            self.hosts[a].shapers[flow] = BagShaper(self.hosts[a], flow, mapping.bag, max_frame)
                        if b in self.switches and mapping.jitter_allowance is not None:
                            max_frame = mapping.max_frame or wire_length(self._flow_payload(msg, seg.name))
                            self.switches[b].policers.setdefault(flow, (
                                PolicerConfig(mapping.bag, max_frame, mapping.jitter_allowance),
                                PolicerHistory(),
                            ))

    def _flow_payload(self, msg: MessageModel, segment: str) -> int:
        pool = pool_key_for(msg, segment, self.model.segment_map)
        if pool is None:
            return msg.payload
        members = pools_of(self.model.messages, self.model.segment_map)[pool]
        return pool_bound([(m, h) for m, _, h in members])[1]

    def _is_origin(self, msg: MessageModel, device: str, segment: str) -> bool:
        if device == msg.sender:
            return True
        return pool_key_for(msg, segment, self.model.segment_map) is not None

    def _gateways(self, segs) -> None:
        """Translation routes and pools of every gateway, in message order."""
        pools = pools_of(self.model.messages, segs)
        for (gw, pool_name), members in pools.items():
            host = self.hosts[gw]
            key = f"{gw}:{pool_name}"
            first_msg, seg_name, _ = members[0]
            route_keys = []
            for msg, seg, holdup in members:
                for _, path in msg.routes:
                    if gw not in path[1:-1]:
                        continue
                    i = path.index(gw)
                    seg_in = self.model.segment_of(path[i - 1], gw).name
                    rk = (seg_in, ("can", msg.mapping(seg_in).ident))
                    route_keys.append(rk)
                    host.pool_holdup[(key, rk)] = holdup
            host.pools[key] = Pool(key, frozenset(route_keys))
            host.pool_tags[key] = class_tag(first_msg.mapping(seg_name))
        for msg in self.model.messages:
            for _, path in msg.routes:
                for i in range(1, len(path) - 1):
                    g = path[i]
                    if g not in self.hosts or not isinstance(self.hosts[g], GatewayHost):
                        continue
                    host = self.hosts[g]
                    seg_in = self.model.segment_of(path[i - 1], g)
                    seg_out = self.model.segment_of(g, path[i + 1])
                    if seg_in.kind == "can":
                        key = (seg_in.name, ("can", msg.mapping(seg_in.name).ident))
                    elif seg_in.kind == "ethernet" and seg_out.kind == "can":
                        if pool_key_for(msg, seg_in.name, segs) is not None:
                            origin_seg = self._can_origin_segment(msg, path, i)
                            key = (seg_in.name, ("can", msg.mapping(origin_seg).ident))
                        else:
                            key = (seg_in.name, eth_ident(msg, msg.mapping(seg_in.name)))
                    else:
                        continue
                    if seg_out.kind == "can":
                        dest = Destination(seg_out.name, "can", path[i + 1], msg.mapping(seg_out.name).ident)
                    else:
                        flow = flow_key(msg, seg_out.name, segs)
                        dest = Destination(seg_out.name, "eth", flow, None, flow)
                    host.routing.add(key, dest)

    def _can_origin_segment(self, msg: MessageModel, path, i: int) -> str:
        """CAN segment a tunnelled frame came from before entering Ethernet."""
        for j in range(i - 1, 0, -1):
            seg = self.model.segment_of(path[j - 1], path[j])
            if seg.kind == "can":
                return seg.name
        raise AssertionError("tunnelled frame without CAN origin")

    # -- network callbacks used by ports ----------------------------------------

    def on_transmit(self, port: EgressPort, frame: EthernetFrame, t: int) -> None:
        if self.capture is not None:
            self.capture.append((t, frame_bytes(frame)))

    def on_tt_dispatch(self, port: EgressPort, frame: EthernetFrame, t: int) -> None:
        self.tt_log.append((port.node, port.name, frame.tag.ident, t))

    def deliver(self, msg: MessageModel, receiver: str, created_at: int, trail: list, t: int,
                burst: Optional[tuple] = None) -> None:
        if burst is not None:
            key = (msg.name, receiver, burst[1])
            got = self.bursts.get(key, 0) + 1
            if got == burst[2]:
                self.bursts.pop(key, None)
                self.collector.burst(f"{msg.name}->{receiver}").add(t - created_at)
            else:
                self.bursts[key] = got
        if not msg.record:
            return
        latency = record_latency(self.collector, msg.name, _Delivered(created_at, trail), msg.stats_class)
        if self.checker is not None:
            value = Fraction(latency, des.S)
            module = f"{self.model.name}.{receiver}"
            self.checker.check(module, RX_METRIC, value, t)
            self.checker.check(module, f"{msg.name}:rxMessageAge", value, t)
            if self.checker.stop is not None:
                raise des.StopSimulation(self.checker.stop)

    # -- clock synchronisation ------------------------------------------------------

    def _sync(self, name: str) -> None:
        t = self.queue.current_time
        clock = self.clocks[name]
        clock.apply_sync(t, clock.rng)
        for port in self._device(name).ports.values():
            if port.clock is not None:
                port.resync(t)
        nxt = t + clock.sync_interval
        if nxt <= self.duration:
            self.queue.at(nxt, des.CLOCK_SYNC, self._sync, name)

    # -- running ---------------------------------------------------------------------

    def run(self) -> RunResult:
        for name, clock in self.clocks.items():
            if not clock.is_ideal:
                clock.apply_sync(0, clock.rng)
                if clock.sync_interval > 0:
                    self.queue.at(clock.sync_interval, des.CLOCK_SYNC, self._sync, name)
        for dev in list(self.switches.values()) + list(self.hosts.values()):
            for port in dev.ports.values():
                port.start_tt(0)
        for app in self.apps:
            app.start()
        log = None
        if self.event_log is not None:
            out = self.event_log

            def log(e: des.Event) -> None:
                out.append(f"{e.fire_time} {e.tie_class} {e.seq} {e.label()}")

        summary = des.run_until(self.queue, self.duration, log=log)
        checker = self.checker
        return RunResult(
            self.model, self.seed, self.duration, summary, self.collector,
            list(checker.violations) if checker else [], checker.stop if checker else None,
            self.capture, self.event_log, self.tt_log, self.schedule, self,
        )


def simulate(model: NetworkModel, **kwargs) -> RunResult:
    return Simulation(model, **kwargs).run()
