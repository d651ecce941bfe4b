"""CAN/Ethernet gateway: routing, pooled buffering and encapsulation.

Encapsulated payload layout (all integers big-endian)::

    count : 1 byte, number of CAN frames (1..255)
    repeated count times:
        id   : 4 bytes, low 11 bits significant
        dlc  : 1 byte
        data : dlc bytes

Bytes after the last declared entry are padding and are ignored.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Any, Hashable, Optional

from .can import CanFrame

ENTRY_HEADER = struct.Struct(">IB")
MAX_FRAMES = 255


class MalformedPayload(ValueError):
    pass


class NotAMember(KeyError):
    pass


def encapsulate(frames: list[CanFrame]) -> bytes:
    if not 1 <= len(frames) <= MAX_FRAMES:
        raise ValueError("between 1 and 255 CAN frames per Ethernet payload")
    out = bytearray([len(frames)])
    for frame in frames:
        out += ENTRY_HEADER.pack(frame.id & 0x7FF, frame.dlc)
        out += frame.data
    return bytes(out)


def decapsulate(payload: bytes) -> list[CanFrame]:
    if not payload:
        raise MalformedPayload("empty payload")
    count = payload[0]
    if count == 0:
        raise MalformedPayload("zero frame count")
    frames = []
    pos = 1
    for i in range(count):
        if pos + ENTRY_HEADER.size > len(payload):
            raise MalformedPayload(f"entry {i} header truncated")
        can_id, dlc = ENTRY_HEADER.unpack_from(payload, pos)
        pos += ENTRY_HEADER.size
        if dlc > 8:
            raise MalformedPayload(f"entry {i} declares dlc {dlc}")
        if pos + dlc > len(payload):
            raise MalformedPayload(f"entry {i} data truncated")
        frames.append(CanFrame(can_id & 0x7FF, payload[pos:pos + dlc]))
        pos += dlc
    return frames


def encapsulated_size(dlcs) -> int:
    return 1 + sum(ENTRY_HEADER.size + d for d in dlcs)


@dataclass(frozen=True)
class Destination:
    segment: str
    kind: str  # "eth" or "can"
    via: str  # egress port name or CAN bus name
    params: Any = None
    pool: Optional[str] = None


class RoutingTable:
    """Maps (ingress segment, identifier) to an ordered list of destinations."""

    def __init__(self):
        self.entries: dict[Hashable, list[Destination]] = {}
        self.dropped = 0

    def add(self, key: Hashable, destination: Destination) -> None:
        dests = self.entries.setdefault(key, [])
        if destination not in dests:
            dests.append(destination)

    def route(self, key: Hashable, frame=None) -> list[Destination]:
        dests = self.entries.get(key)
        if not dests:
            self.dropped += 1
            return []
        return list(dests)


def route(table: RoutingTable, key: Hashable, frame=None) -> list[Destination]:
    return table.route(key, frame)


@dataclass
class Pool:
    pool_id: str
    members: frozenset = frozenset()
    pending: list = field(default_factory=list)
    deadline: Optional[int] = None

    def admit(self, key: Hashable, frame: CanFrame, now: int, holdup: int) -> "Pool":
        if key not in self.members:
            raise NotAMember(f"{key!r} is not a member of pool {self.pool_id}")
        candidate = now + holdup
        if not self.pending:
            self.deadline = candidate
        else:
            self.deadline = min(self.deadline, candidate)
        self.pending.append((frame, now))
        return self

    def flush(self, now: int) -> bytes:
        if not self.pending:
            raise ValueError(f"pool {self.pool_id} is empty")
        payload = encapsulate([frame for frame, _ in self.pending])
        self.pending = []
        self.deadline = None
        return payload


def pool_admit(pool: Pool, key: Hashable, frame: CanFrame, now: int, frame_holdup: int) -> Pool:
    return pool.admit(key, frame, now, frame_holdup)


def pool_flush(pool: Pool, now: int) -> bytes:
    return pool.flush(now)
