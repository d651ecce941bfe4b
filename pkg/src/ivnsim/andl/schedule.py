"""First-feasible TDMA schedule generation for time-triggered flows."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import lcm
from typing import Optional

from .. import des
from ..ethernet import wire_duration, wire_length
from ..shapers import TtAction, TtSchedule, windows_overlap
from .errors import Diagnostic, Infeasible, LcmOverflow
from .model import MessageModel, NetworkModel
from .validate import pool_bound, pools_of

DEFAULT_LCM_CAP = 1 * des.S


@dataclass
class Hop:
    device: str
    peer: str
    offset: int  # unreduced local dispatch time within the flow's first period
    tx: int
    reserved: int


@dataclass
class TtFlow:
    ct_id: int
    period: int
    payload: int
    messages: list[str]
    hops: list[Hop] = field(default_factory=list)


@dataclass
class ScheduleResult:
    cycle: int
    ports: dict[tuple[str, str], TtSchedule]
    flows: dict[int, TtFlow]
    margins: dict[str, int]

    def port(self, device: str, peer: str) -> Optional[TtSchedule]:
        return self.ports.get((device, peer))


def guard_margins(model: NetworkModel) -> dict[str, int]:
    return {d.name: d.clock.guard_margin() for d in model.devices if d.kind != "canLink"}


def _ceil_to(t: int, tick: int) -> int:
    return -(-t // tick) * tick


def _tt_edges(model: NetworkModel, msg: MessageModel, segment: str):
    """Ordered (port, parent port) pairs of the message's TT tree in ``segment``."""
    edges: dict[tuple[str, str], Optional[tuple[str, str]]] = {}
    for _, path in msg.routes:
        parent = None
        for a, b in zip(path, path[1:]):
            if model.edge_segments[frozenset((a, b))] == segment:
                edges.setdefault((a, b), parent)
                parent = (a, b)
            else:
                parent = None
    return edges


def tt_flows(model: NetworkModel) -> list[tuple[TtFlow, dict, Optional[int]]]:
    """Collect TT flows: (flow, port tree, creation offset or None)."""
    pools = pools_of(model.messages, model.segment_map)
    flows: dict[int, tuple[TtFlow, dict, Optional[int]]] = {}
    for msg in model.messages:
        for m in msg.mappings:
            if m.kind != "tt":
                continue
            edges = _tt_edges(model, msg, m.segment)
            pooled = None
            for key, members in pools.items():
                if any(x is msg and seg == m.segment for x, seg, _ in members):
                    pooled = [(x, h) for x, _, h in members]
            if pooled is not None:
                payload = pool_bound(pooled)[1]
                origin = None
            else:
                payload = msg.payload
                first = next(iter(edges))
                origin = msg.offset if first[0] == msg.sender else None
            if m.ident in flows:
                flow, tree, org = flows[m.ident]
                flow.period = min(flow.period, msg.period)
                flow.payload = max(flow.payload, payload)
                flow.messages.append(msg.name)
                for k, v in edges.items():
                    tree.setdefault(k, v)
            else:
                flows[m.ident] = (TtFlow(m.ident, msg.period, payload, [msg.name]), dict(edges), origin)
    return list(flows.values())


def generate_tt_schedule(model: NetworkModel, lcm_cap: int = DEFAULT_LCM_CAP) -> ScheduleResult:
    """Greedy first-fit offsets, hop by hop, in message order.

    Hop k of a flow starts no earlier than hop k-1 plus transmission,
    propagation, processing and the guard margin; each port window is the
    transmission time plus the port's guard margin.
    """
    flows = tt_flows(model)
    margins = guard_margins(model)
    cycle = 0
    for flow, _, _ in flows:
        cycle = flow.period if cycle == 0 else lcm(cycle, flow.period)
        if cycle > lcm_cap:
            raise LcmOverflow([Diagnostic(None, None,
                                          f"TT cycle {cycle} ps exceeds the cap of {lcm_cap} ps")])
    windows: dict[tuple[str, str], list[TtAction]] = {}
    result_flows: dict[int, TtFlow] = {}
    for flow, tree, origin in flows:
        placed: dict[tuple[str, str], Hop] = {}
        for port, parent in tree.items():
            dev, peer = port
            device = model.device(dev)
            tick = device.clock.tick_length
            margin = margins[dev]
            link = model.link(dev, peer)
            tx = wire_duration(wire_length(flow.payload), link.rate)
            reserved = tx + margin
            if parent is None:
                earliest = (origin + margin) if origin is not None else 0
            else:
                up = placed[parent]
                up_link = model.link(*parent)
                earliest = up.offset + up.tx + up_link.delay + device.processing_delay + margin
            t = _ceil_to(earliest, tick)
            existing = windows.setdefault(port, [])
            while True:
                if t - earliest >= flow.period:
                    raise Infeasible([Diagnostic(None, None,
                                                 f"no TT slot for ctID {flow.ct_id} on port {dev}->{peer}: "
                                                 f"port saturated within the {flow.period} ps period")])
                shift = 0
                for j in range(cycle // flow.period):
                    start = (t + j * flow.period) % cycle
                    for a in existing:
                        if windows_overlap(start, reserved, a.offset, a.reserved, cycle):
                            shift = max(shift, (a.offset + a.reserved - start) % cycle or cycle)
                if shift == 0:
                    break
                t = _ceil_to(t + shift, tick)
            for j in range(cycle // flow.period):
                existing.append(TtAction((t + j * flow.period) % cycle, flow.ct_id, peer, reserved))
            placed[port] = Hop(dev, peer, t, tx, reserved)
        flow.hops = list(placed.values())
        result_flows[flow.ct_id] = flow
    ports = {port: TtSchedule(cycle, actions) for port, actions in windows.items()}
    return ScheduleResult(cycle, ports, result_flows, margins)


def format_schedule(result: ScheduleResult) -> str:
    """Stable text listing: cycle, then per port sorted (offset, ct_id, window)."""
    lines = [f"cycle {result.cycle} ps"]
    for (dev, peer) in sorted(result.ports):
        lines.append(f"port {dev}->{peer}")
        for a in result.ports[(dev, peer)].actions:
            lines.append(f"  offset {a.offset} ps  ctID {a.ct_id}  window {a.reserved} ps")
    return "\n".join(lines) + "\n"
