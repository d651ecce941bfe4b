"""Ethernet frames, links, egress ports and store-and-forward switches."""

from __future__ import annotations

import hashlib
import struct
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple, Optional

from . import des
from .shapers import (
    IDLE,
    TRANSMITTING,
    WAITING,
    CbsState,
    PolicerConfig,
    PolicerHistory,
    TtSchedule,
    cbs_advance,
    cbs_ready_time,
    guard_release_time,
    police_ingress,
)

if TYPE_CHECKING:
    from .clocks import LocalClock

HEADER_BYTES = 14
FCS_BYTES = 4
MIN_FRAME = 64
MAX_PAYLOAD = 1500
MIN_PAYLOAD = 46
PREAMBLE_BYTES = 8
IFG_BYTES = 12

SR_CLASS_PRIORITY = {"A": 3, "B": 2}


class QueueOverflow(RuntimeError):
    pass


class TtBufferOverrun(RuntimeError):
    pass


def wire_length(payload_len: int) -> int:
    """Frame length on the wire (header and FCS, no preamble)."""
    if not 0 <= payload_len <= MAX_PAYLOAD:
        raise ValueError(f"payload {payload_len} B outside [0, {MAX_PAYLOAD}]")
    return max(MIN_FRAME, HEADER_BYTES + FCS_BYTES + payload_len)


def wire_duration(on_wire_bytes: int, rate: int) -> int:
    """Port occupation for one frame incl. preamble, SFD and inter-frame gap."""
    if on_wire_bytes < MIN_FRAME:
        raise ValueError("frames are at least 64 B on the wire")
    bits = (PREAMBLE_BYTES + on_wire_bytes + IFG_BYTES) * 8
    return -(-bits * des.S // rate)


class ClassTag(NamedTuple):
    kind: str  # "tt", "rc", "avb" or "be"
    ident: int = 0
    priority: int = 0
    sr_class: Optional[str] = None


@dataclass(eq=False)
class EthernetFrame:
    stream: str
    src: str
    tag: ClassTag
    payload_len: int
    created_at: int
    hop_trail: list = field(default_factory=list)
    dst: tuple = ()
    burst: Optional[tuple] = None
    inner: Optional[list] = None
    data: Optional[bytes] = None

    def __post_init__(self):
        self.wire_len = wire_length(self.payload_len)

    def copy(self) -> "EthernetFrame":
        clone = EthernetFrame(
            self.stream, self.src, self.tag, self.payload_len, self.created_at,
            [list(h) for h in self.hop_trail], self.dst, self.burst, self.inner, self.data,
        )
        return clone


ETHERTYPE_CAN_TUNNEL = 0x88B5
ETHERTYPE_APP = 0x88B6
TPID_8021Q = 0x8100


def mac_address(name: str, group: bool = False) -> bytes:
    """Deterministic locally administered MAC derived from a name."""
    first = 0x03 if group else 0x02
    return bytes([first]) + hashlib.sha256(name.encode()).digest()[:5]


def frame_bytes(frame: EthernetFrame) -> bytes:
    """Header with 802.1Q tag (PCP = class priority), payload, padding.

    The FCS is not captured; the tagged header replaces the 14 B untagged
    header plus FCS, so the result is exactly ``frame.wire_len`` bytes.
    """
    tag = frame.tag
    tci = (tag.priority & 0x7) << 13 | (tag.ident & 0xFFF)
    ethertype = ETHERTYPE_CAN_TUNNEL if frame.inner is not None else ETHERTYPE_APP
    head = mac_address(frame.stream, group=True) + mac_address(frame.src)
    head += struct.pack(">HHH", TPID_8021Q, tci, ethertype)
    body = frame.data if frame.data is not None else bytes(frame.payload_len)
    body = body.ljust(MIN_PAYLOAD, b"\x00")
    return head + body


@dataclass(frozen=True)
class Link:
    rate: int
    propagation_delay: int = 0

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("link rate must be positive")
        if self.propagation_delay < 0:
            raise ValueError("propagation delay must be non-negative")


class EgressPort:
    """One output line card with per-class queues.

    Selection order: a TT frame whose dispatch is due, then among frames that
    pass the guard band, RC by priority, AVB class A and B gated by their
    credit-based shapers, then best effort.
    """

    def __init__(
        self,
        net,
        node: str,
        name: str,
        link: Link,
        clock: Optional["LocalClock"] = None,
        schedule: Optional[TtSchedule] = None,
        guard_margin: int = 0,
        idle_slopes: Optional[dict[str, int]] = None,
        capacity: Optional[int] = None,
    ):
        self.net = net
        self.node = node
        self.name = name
        self.link = link
        self.clock = clock
        self.schedule = schedule if schedule is not None and schedule.actions else None
        self.guard_margin = guard_margin
        self.capacity = capacity
        self.peer = None  # callable(frame, t_rx)

        self.tt_slots: dict[int, Optional[EthernetFrame]] = {}
        if self.schedule is not None:
            for action in self.schedule.actions:
                self.tt_slots[action.ct_id] = None
        self.tt_due: deque[EthernetFrame] = deque()
        self.rc: dict[int, deque] = {}
        self.avb: dict[str, deque] = {}
        self.cbs: dict[str, CbsState] = {}
        for sr_class, slope in (idle_slopes or {}).items():
            self.avb[sr_class] = deque()
            self.cbs[sr_class] = CbsState(slope, link.rate)
        self.be: deque[EthernetFrame] = deque()

        self.busy_until = 0
        self.current: Optional[EthernetFrame] = None
        self.current_class: Optional[str] = None
        self.avb_sending: Optional[str] = None
        self.transmitted = 0
        self.busy_time = 0
        self._wake: Optional[des.Event] = None
        self._tt_timer: Optional[des.Event] = None
        self._tt_next_local: Optional[int] = None
        self._tt_next_action = None
        self._wm: dict = {}

    # -- queue bookkeeping -------------------------------------------------

    def _watermarks(self, cls: str, stream: str):
        key = (cls, stream)
        pair = self._wm.get(key)
        if pair is None:
            collector = self.net.collector
            pair = (collector.watermark(self.node, self.name, cls),
                    collector.watermark(self.node, self.name, cls, stream))
            self._wm[key] = pair
        return pair

    def _wm_add(self, frame: EthernetFrame, cls: str) -> None:
        for wm in self._watermarks(cls, frame.stream):
            wm.add(frame.wire_len)

    def _wm_remove(self, frame: EthernetFrame, cls: str) -> None:
        for wm in self._watermarks(cls, frame.stream):
            wm.remove(frame.wire_len)

    def queued(self) -> int:
        n = len(self.be) + len(self.tt_due) + sum(1 for f in self.tt_slots.values() if f is not None)
        n += sum(len(q) for q in self.rc.values()) + sum(len(q) for q in self.avb.values())
        return n

    def _queue_for(self, frame: EthernetFrame) -> tuple[deque, str]:
        tag = frame.tag
        if tag.kind == "rc":
            q = self.rc.get(tag.priority)
            if q is None:
                q = self.rc[tag.priority] = deque()
                self._rc_order = sorted(self.rc, reverse=True)
            return q, "rc"
        if tag.kind == "avb":
            if tag.sr_class not in self.avb:
                raise KeyError(f"port {self.node}.{self.name} has no AVB class {tag.sr_class} reservation")
            return self.avb[tag.sr_class], "avb"
        return self.be, "be"

    # -- ingress into the port ----------------------------------------------

    def enqueue(self, frame: EthernetFrame, t: int) -> None:
        tag = frame.tag
        if tag.kind == "tt":
            if tag.ident not in self.tt_slots:
                raise TtBufferOverrun(
                    f"{self.node}.{self.name}: no TT action for ct_id {tag.ident}"
                )
            if self.tt_slots[tag.ident] is not None:
                raise TtBufferOverrun(
                    f"{self.node}.{self.name}: TT buffer for ct_id {tag.ident} already occupied at {t} ps"
                )
            self.tt_slots[tag.ident] = frame
            self._wm_add(frame, "tt")
            return
        q, cls = self._queue_for(frame)
        if self.capacity is not None and len(q) >= self.capacity:
            raise QueueOverflow(f"{self.node}.{self.name} {cls} queue full")
        if cls == "avb" and not q:
            self._cbs_update(tag.sr_class, t)
        q.append(frame)
        self._wm_add(frame, cls)
        self.service(t)

    # -- credit-based shaper --------------------------------------------------

    def _cbs_update(self, sr_class: str, t: int) -> CbsState:
        state = self.cbs[sr_class]
        if self.avb_sending == sr_class:
            mode = TRANSMITTING
        elif self.avb[sr_class]:
            mode = WAITING
        else:
            mode = IDLE
        return cbs_advance(state, t, mode)

    # -- transmission -------------------------------------------------------

    def _local(self, t: int) -> int:
        return t if self.clock is None else self.clock.global_to_local(t)

    def _to_global(self, t_local: int, now: int) -> int:
        if self.clock is None:
            return max(now, t_local)
        return max(now, self.clock.local_to_global(t_local))

    def _guard_release(self, frame: EthernetFrame, t: int) -> Optional[int]:
        """Global time at which ``frame`` clears the guard band (t if now)."""
        if self.schedule is None:
            return t
        tx = wire_duration(frame.wire_len, self.link.rate)
        if self.clock is not None:
            tx = self.clock.local_duration(tx)
        local = self._local(t)
        release = guard_release_time(self.schedule, local, tx + self.guard_margin)
        if release is None:
            return None
        if release == local:
            return t
        return self._to_global(release, t)

    def select_next(self, t: int):
        """Return (frame, class) to send at ``t``, or (None, retry time)."""
        if self.tt_due:
            return self.tt_due.popleft(), "tt"
        retry = None
        candidates = []
        if self.rc:
            for prio in self._rc_order:
                q = self.rc[prio]
                if q:
                    candidates.append((q, "rc", None))
        for sr_class in ("A", "B"):
            q = self.avb.get(sr_class)
            if q:
                candidates.append((q, "avb", sr_class))
        if self.be:
            candidates.append((self.be, "be", None))
        for q, cls, sr_class in candidates:
            frame = q[0]
            if sr_class is not None:
                state = self._cbs_update(sr_class, t)
                if state.credit < 0:
                    ready = cbs_ready_time(state)
                    retry = ready if retry is None else min(retry, ready)
                    continue
            release = self._guard_release(frame, t)
            if release == t:
                q.popleft()
                self._wm_remove(frame, cls)
                return frame, cls
            if release is not None:
                retry = release if retry is None else min(retry, release)
        return None, retry

    def service(self, t: int) -> None:
        if self.current is not None and self.busy_until <= t:
            self._complete()
        if self.busy_until > t:
            return
        if self._wake is not None:
            self.net.queue.cancel(self._wake)
            self._wake = None
        frame, info = self.select_next(t)
        if frame is not None:
            self._transmit(frame, info, t)
        elif info is not None:
            self._wake = self.net.queue.at(info, des.SERVICE, self.service, info)

    def _transmit(self, frame: EthernetFrame, cls: str, t: int) -> None:
        duration = wire_duration(frame.wire_len, self.link.rate)
        if cls == "avb":
            sr_class = frame.tag.sr_class
            # the frame was queued until now, even if its queue is empty after popping
            cbs_advance(self.cbs[sr_class], t, WAITING)
            self.avb_sending = sr_class
        self.current = frame
        self.current_class = cls
        self.busy_until = t + duration
        self.busy_time += duration
        self.transmitted += 1
        frame.hop_trail[-1][2] = t
        net = self.net
        net.on_transmit(self, frame, t)
        net.queue.at(t + duration, des.SERVICE, self._tx_done)
        net.queue.at(t + duration + self.link.propagation_delay, des.RECEIVE, self.peer, frame,
                     t + duration + self.link.propagation_delay)

    def _complete(self) -> None:
        t = self.busy_until
        if self.avb_sending is not None:
            sr_class = self.avb_sending
            self._cbs_update(sr_class, t)
            self.avb_sending = None
            if not self.avb[sr_class]:
                cbs_advance(self.cbs[sr_class], t, IDLE)
        self.current = None
        self.current_class = None

    def _tx_done(self) -> None:
        self.service(self.net.queue.current_time)

    # -- time-triggered dispatch --------------------------------------------

    def start_tt(self, now: int) -> None:
        if self.schedule is None:
            return
        local_time, action = self.schedule.next_action(self._local(now))
        self._arm_tt(local_time, action, now)

    def _arm_tt(self, local_time: int, action, now: int) -> None:
        self._tt_next_local = local_time
        self._tt_next_action = action
        fire = self._to_global(local_time, now)
        self._tt_timer = self.net.queue.at(fire, des.TT_DISPATCH, self._tt_fire)

    def resync(self, now: int) -> None:
        """Re-arm timers after the node clock was corrected."""
        if self._tt_timer is not None:
            self.net.queue.cancel(self._tt_timer)
            self._arm_tt(self._tt_next_local, self._tt_next_action, now)
        if self._wake is not None:
            self.service(now)

    def _tt_fire(self) -> None:
        now = self.net.queue.current_time
        action = self._tt_next_action
        frame = self.tt_slots.get(action.ct_id)
        if frame is not None:
            self.tt_slots[action.ct_id] = None
            self._wm_remove(frame, "tt")
            self.net.on_tt_dispatch(self, frame, now)
            if self.current is not None and self.busy_until <= now:
                self._complete()
            if self.busy_until <= now:
                if self._wake is not None:
                    self.net.queue.cancel(self._wake)
                    self._wake = None
                self._transmit(frame, "tt", now)
            else:
                self.tt_due.append(frame)
        local_time, next_action = self.schedule.next_action(self._tt_next_local + 1)
        self._arm_tt(local_time, next_action, now)


class Switch:
    """Store-and-forward switch with a static per-stream forwarding table."""

    def __init__(self, net, name: str, processing_delay: int = 8 * des.US):
        self.net = net
        self.name = name
        self.processing_delay = processing_delay
        self.ports: dict[str, EgressPort] = {}
        self.table: dict[str, list[str]] = {}
        self.policers: dict[str, tuple[PolicerConfig, PolicerHistory]] = {}

    def receive(self, frame: EthernetFrame, t_rx: int) -> None:
        frame.hop_trail.append([self.name, t_rx, None])
        policer = self.policers.get(frame.stream)
        if policer is not None:
            verdict = police_ingress(policer[0], frame.wire_len, t_rx, policer[1])
            if verdict != "accept":
                self.net.collector.drop(f"{self.name}.police.{verdict}", frame.stream)
                return
        if self.processing_delay:
            self.net.queue.at(t_rx + self.processing_delay, des.RECEIVE, self.forward, frame)
        else:
            self.forward(frame)

    def forward(self, frame: EthernetFrame) -> list[tuple[EgressPort, EthernetFrame]]:
        """Place a fully received frame into its egress queue(s)."""
        t = self.net.queue.current_time
        egress = self.table.get(frame.stream)
        if not egress:
            self.net.collector.drop(f"{self.name}.unroutable", frame.stream)
            return []
        actions = []
        for i, port_name in enumerate(egress):
            copy = frame if i == len(egress) - 1 else frame.copy()
            actions.append((self.ports[port_name], copy))
        for port, copy in actions:
            try:
                port.enqueue(copy, t)
            except QueueOverflow:
                self.net.collector.drop(f"{self.name}.{port.name}.overflow", frame.stream)
        return actions
