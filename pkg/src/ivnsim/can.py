"""Bit-accurate CAN 2.0A frame timing and bus arbitration."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional

from . import des

CRC15_POLY = 0x4599
TAIL_BITS = 13  # CRC delimiter, ACK slot, ACK delimiter, EOF (7), intermission (3)
MAX_ID = 0x7FF


class DuplicateId(RuntimeError):
    pass


@dataclass(eq=False)
class CanFrame:
    id: int
    data: bytes = b""
    created_at: int = 0
    message: Optional[str] = None
    hop_trail: list = field(default_factory=list)

    def __post_init__(self):
        self.data = bytes(self.data)
        if not 0 <= self.id <= MAX_ID:
            raise ValueError(f"CAN id {self.id} is not an 11-bit identifier")
        if len(self.data) > 8:
            raise ValueError("CAN frames carry at most 8 data bytes")

    @property
    def dlc(self) -> int:
        return len(self.data)

    def __eq__(self, other):
        if not isinstance(other, CanFrame):
            return NotImplemented
        return self.id == other.id and self.data == other.data

    def __hash__(self):
        return hash((self.id, self.data))

    def __repr__(self):
        return f"CanFrame(id=0x{self.id:03x}, data={self.data.hex()})"


def _bits(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def crc15(bits: list[int]) -> int:
    crc = 0
    for bit in bits:
        feedback = bit ^ ((crc >> 14) & 1)
        crc = (crc << 1) & 0x7FFF
        if feedback:
            crc ^= CRC15_POLY
    return crc


def frame_bits(frame: CanFrame) -> list[int]:
    """SOF through CRC of a standard data frame, before stuffing."""
    bits = [0]  # SOF
    bits += _bits(frame.id, 11)
    bits += [0, 0, 0]  # RTR, IDE, r0
    bits += _bits(frame.dlc, 4)
    for byte in frame.data:
        bits += _bits(byte, 8)
    bits += _bits(crc15(bits), 15)
    return bits


def stuff(bits: list[int]) -> list[int]:
    """Insert a complementary bit after every run of five equal bits."""
    out = []
    run_bit, run_len = None, 0
    for bit in bits:
        out.append(bit)
        if bit == run_bit:
            run_len += 1
        else:
            run_bit, run_len = bit, 1
        if run_len == 5:
            stuff_bit = 1 - bit
            out.append(stuff_bit)
            run_bit, run_len = stuff_bit, 1
    return out


def destuff(bits: list[int]) -> list[int]:
    out = []
    run_bit, run_len = None, 0
    skip = False
    for bit in bits:
        if skip:
            if bit == run_bit:
                raise ValueError("stuff error: sixth equal bit")
            run_bit, run_len = bit, 1
            skip = False
            continue
        out.append(bit)
        if bit == run_bit:
            run_len += 1
        else:
            run_bit, run_len = bit, 1
        if run_len == 5:
            skip = True
    return out


def serialize_and_stuff(frame: CanFrame) -> tuple[int, int]:
    """Return (stuff bit count, total bit count incl. fixed tail)."""
    raw = frame_bits(frame)
    stuffed = stuff(raw)
    return len(stuffed) - len(raw), len(stuffed) + TAIL_BITS


def frame_duration(frame: CanFrame, bitrate: int) -> int:
    if bitrate <= 0:
        raise ValueError("bitrate must be positive")
    _, total = serialize_and_stuff(frame)
    return -(-total * des.S // bitrate)


class CanBus:
    """Shared CAN bus: lowest pending identifier wins arbitration."""

    def __init__(self, net, name: str, bitrate: int = 500_000):
        if bitrate <= 0:
            raise ValueError("bitrate must be positive")
        self.net = net
        self.name = name
        self.bitrate = bitrate
        self.busy_until = 0
        self.members: list = []  # objects with .name and .can_receive(bus, frame, t)
        self.pending: dict[str, list] = {}
        self._seq = 0
        self._arbitration: Optional[des.Event] = None
        self.busy_time = 0
        self.completed: list[tuple[int, str, int]] = []

    def attach(self, member) -> None:
        self.members.append(member)
        self.pending.setdefault(member.name, [])

    def enqueue(self, node: str, frame: CanFrame, t: int) -> None:
        heapq.heappush(self.pending[node], (frame.id, self._seq, frame))
        self._seq += 1
        self._request(max(t, self.busy_until))

    def _request(self, t: int) -> None:
        if self._arbitration is not None:
            if self._arbitration.fire_time <= t:
                return
            self.net.queue.cancel(self._arbitration)
        self._arbitration = self.net.queue.at(t, des.SERVICE, self._arbitrate_event)

    def arbitrate(self, t: int) -> Optional[tuple[str, CanFrame]]:
        """Pick the winning (node, frame) among frames pending at ``t``."""
        if self.busy_until > t:
            raise RuntimeError("bus is busy")
        best = None
        contenders = []
        for node, heap in self.pending.items():
            if heap:
                head = heap[0]
                contenders.append((head[0], node))
                if best is None or head[0] < best[0]:
                    best = (head[0], node)
        if best is None:
            return None
        same = [node for cid, node in contenders if cid == best[0]]
        if len(same) > 1:
            raise DuplicateId(f"id 0x{best[0]:03x} sent by {', '.join(same)} on {self.name}")
        node = best[1]
        frame = heapq.heappop(self.pending[node])[2]
        return node, frame

    def _arbitrate_event(self) -> None:
        self._arbitration = None
        t = self.net.queue.current_time
        if self.busy_until > t:
            self._request(self.busy_until)
            return
        won = self.arbitrate(t)
        if won is None:
            return
        node, frame = won
        duration = frame_duration(frame, self.bitrate)
        end = t + duration
        self.busy_until = end
        self.busy_time += duration
        if frame.hop_trail:
            frame.hop_trail[-1][2] = t
        self.net.queue.at(end, des.RECEIVE, self._deliver, node, frame)
        if any(self.pending.values()):
            self._request(end)

    def _deliver(self, sender: str, frame: CanFrame) -> None:
        t = self.net.queue.current_time
        self.completed.append((t, sender, frame.id))
        for member in self.members:
            if member.name != sender:
                member.can_receive(self, frame, t)
