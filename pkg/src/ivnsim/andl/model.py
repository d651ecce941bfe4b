"""Validated, immutable network model produced from a description."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Optional

from .. import des

ETHERNET_CLASSES = ("tt", "rc", "avb", "be")
DEFAULT_LINK_RATE = 100_000_000
DEFAULT_CAN_BITRATE = 500_000
DEFAULT_PROCESSING = {"switch": 8 * des.US, "gateway": 8 * des.US, "node": 0}


@dataclass(frozen=True)
class ClockParams:
    drift_ppm: Fraction = Fraction(0)
    tick_length: int = 80 * des.NS
    sync_interval: int = 1 * des.MS
    sync_precision: int = 500 * des.NS
    # when set, drift_ppm is a bound and each device draws its own drift
    random_drift: bool = False

    @property
    def is_ideal(self) -> bool:
        return self.drift_ppm == 0 and self.sync_precision == 0

    def drift_error(self) -> int:
        """Worst-case drift accumulated over one sync interval, in ps."""
        num = abs(self.drift_ppm) * self.sync_interval
        return -(-num.numerator // (num.denominator * 1_000_000))

    def guard_margin(self) -> int:
        """Slack between TT hops and before each reserved window."""
        if self.is_ideal:
            return self.tick_length
        return 2 * self.sync_precision + 2 * self.drift_error() + self.tick_length


@dataclass(frozen=True)
class DeviceModel:
    name: str
    kind: str  # node, gateway, switch or canLink
    processing_delay: int = 0
    clock: ClockParams = ClockParams()
    bitrate: Optional[int] = None  # CAN bus only
    queue_capacity: Optional[int] = None


@dataclass(frozen=True)
class LinkModel:
    a: str
    b: str
    rate: int = DEFAULT_LINK_RATE
    delay: int = 0


@dataclass(frozen=True)
class SegmentModel:
    name: str
    kind: str  # "ethernet", "can" or "empty"
    links: tuple[LinkModel, ...] = ()
    attachments: tuple[tuple[str, str], ...] = ()  # (device, bus)


@dataclass(frozen=True)
class Mapping:
    segment: str
    kind: str  # can, tt, rc, avb, be
    ident: int = 0
    priority: int = 0
    sr_class: Optional[str] = None
    bag: Optional[int] = None
    max_frame: Optional[int] = None
    jitter_allowance: Optional[int] = None
    idle_slope: Optional[int] = None


@dataclass(frozen=True)
class PoolRef:
    gateway: str
    pool: str
    holdup: int


@dataclass(frozen=True)
class MessageModel:
    name: str
    sender: str
    receivers: tuple[str, ...]
    payload: int
    period: Optional[int] = None
    offset: int = 0
    jitter: int = 0
    burst: Optional[int] = None  # bytes per burst, split into payload-sized frames
    record: bool = True
    mappings: tuple[Mapping, ...] = ()
    pools: tuple[PoolRef, ...] = ()
    routes: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def mapping(self, segment: str) -> Optional[Mapping]:
        for m in self.mappings:
            if m.segment == segment:
                return m
        return None

    def pool(self, gateway: str) -> Optional[PoolRef]:
        for p in self.pools:
            if p.gateway == gateway:
                return p
        return None

    @property
    def stats_class(self) -> str:
        """Class reported in statistics: first Ethernet mapping, else can."""
        for m in self.mappings:
            if m.kind in ETHERNET_CLASSES:
                return m.kind
        return "can"

    @property
    def frames_per_release(self) -> int:
        if self.burst is None:
            return 1
        return max(1, -(-self.burst // max(self.payload, 1)))


@dataclass(frozen=True)
class NetworkModel:
    name: str
    devices: tuple[DeviceModel, ...] = ()
    segments: tuple[SegmentModel, ...] = ()
    messages: tuple[MessageModel, ...] = ()
    metadata: tuple[tuple[str, str], ...] = ()  # inline ini entries, verbatim
    overrides: tuple[tuple[str, str], ...] = ()
    seed: Optional[int] = None
    duration: Optional[int] = None

    @cached_property
    def device_map(self) -> dict[str, DeviceModel]:
        return {d.name: d for d in self.devices}

    @cached_property
    def segment_map(self) -> dict[str, SegmentModel]:
        return {s.name: s for s in self.segments}

    @cached_property
    def message_map(self) -> dict[str, MessageModel]:
        return {m.name: m for m in self.messages}

    def device(self, name: str) -> DeviceModel:
        return self.device_map[name]

    @cached_property
    def edge_segments(self) -> dict[frozenset, str]:
        """Segment of every physical edge, Ethernet link or CAN attachment."""
        edges = {}
        for seg in self.segments:
            for link in seg.links:
                edges[frozenset((link.a, link.b))] = seg.name
            for dev, bus in seg.attachments:
                edges[frozenset((dev, bus))] = seg.name
        return edges

    @cached_property
    def links(self) -> dict[frozenset, LinkModel]:
        return {frozenset((l.a, l.b)): l for s in self.segments for l in s.links}

    def link(self, a: str, b: str) -> LinkModel:
        return self.links[frozenset((a, b))]

    def segment_of(self, a: str, b: str) -> SegmentModel:
        return self.segment_map[self.edge_segments[frozenset((a, b))]]
