"""Latency statistics, burst completion times and queue watermarks."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional


class IncompleteTrail(ValueError):
    pass


class StreamStats:
    """Running latency statistics of one stream, all values in ps."""

    def __init__(self, key: str, cls: str = "", window: int = 64):
        self.key = key
        self.cls = cls
        self.count = 0
        self.min: Optional[int] = None
        self.max: Optional[int] = None
        self.sum = 0
        self.drops = 0
        self.recent: deque[int] = deque(maxlen=window)
        self.hop_sums: list[int] = []

    def add(self, latency: int, hop_residence: tuple[int, ...] = ()) -> None:
        self.count += 1
        self.sum += latency
        if self.min is None or latency < self.min:
            self.min = latency
        if self.max is None or latency > self.max:
            self.max = latency
        self.recent.append(latency)
        sums = self.hop_sums
        for i, dt in enumerate(hop_residence):
            if i < len(sums):
                sums[i] += dt
            else:
                sums.append(dt)

    @property
    def mean(self) -> Optional[Fraction]:
        return Fraction(self.sum, self.count) if self.count else None

    @property
    def jitter(self) -> int:
        return 0 if not self.count else self.max - self.min

    def sliding_mean(self) -> Optional[Fraction]:
        if not self.recent:
            return None
        return Fraction(sum(self.recent), len(self.recent))


@dataclass
class BufferWatermark:
    node: str
    port: str
    cls: str
    stream: Optional[str] = None
    frames: int = 0
    bytes: int = 0
    max_frames: int = 0
    max_bytes: int = 0
    log: Optional[list] = field(default=None, repr=False)

    @property
    def key(self) -> str:
        parts = [self.node, self.port, self.cls]
        if self.stream is not None:
            parts.append(self.stream)
        return ".".join(parts)

    def add(self, nbytes: int) -> None:
        self.frames += 1
        self.bytes += nbytes
        if self.frames > self.max_frames:
            self.max_frames = self.frames
        if self.bytes > self.max_bytes:
            self.max_bytes = self.bytes
        if self.log is not None:
            self.log.append((self.key, 1, nbytes))

    def remove(self, nbytes: int) -> None:
        self.frames -= 1
        self.bytes -= nbytes
        if self.log is not None:
            self.log.append((self.key, -1, -nbytes))


@dataclass
class BurstStats:
    key: str
    count: int = 0
    min: Optional[int] = None
    max: Optional[int] = None
    sum: int = 0

    def add(self, duration: int) -> None:
        self.count += 1
        self.sum += duration
        self.min = duration if self.min is None else min(self.min, duration)
        self.max = duration if self.max is None else max(self.max, duration)


class Collector:
    """Owns every statistic of one run."""

    def __init__(self, window: int = 64, queue_log: bool = False):
        self.window = window
        self.streams: dict[str, StreamStats] = {}
        self.watermarks: dict[str, BufferWatermark] = {}
        self.bursts: dict[str, BurstStats] = {}
        self.drops: dict[str, int] = {}
        self.queue_log: Optional[list] = [] if queue_log else None

    def stream(self, key: str, cls: str = "") -> StreamStats:
        stats = self.streams.get(key)
        if stats is None:
            stats = self.streams[key] = StreamStats(key, cls, self.window)
        return stats

    def watermark(self, node: str, port: str, cls: str, stream: Optional[str] = None) -> BufferWatermark:
        wm = BufferWatermark(node, port, cls, stream, log=self.queue_log)
        existing = self.watermarks.get(wm.key)
        if existing is not None:
            return existing
        self.watermarks[wm.key] = wm
        return wm

    def burst(self, key: str) -> BurstStats:
        stats = self.bursts.get(key)
        if stats is None:
            stats = self.bursts[key] = BurstStats(key)
        return stats

    def drop(self, where: str, stream: Optional[str] = None) -> None:
        self.drops[where] = self.drops.get(where, 0) + 1
        if stream is not None:
            self.stream(stream).drops += 1


def record_latency(collector: Collector, key: str, frame, cls: str = "") -> int:
    """Record the end-to-end latency of a delivered frame and return it.

    ``frame`` needs ``created_at`` and a ``hop_trail`` of (node, arrival,
    departure) entries whose last entry is the receiver.
    """
    trail = frame.hop_trail
    if not trail:
        raise IncompleteTrail(f"frame of {key} has no hop trail")
    last = trail[-1]
    if last[1] is None:
        raise IncompleteTrail(f"frame of {key} has no final arrival")
    latency = last[1] - frame.created_at
    residence = tuple(hop[2] - hop[1] for hop in trail[:-1] if hop[2] is not None)
    collector.stream(key, cls).add(latency, residence)
    return latency
