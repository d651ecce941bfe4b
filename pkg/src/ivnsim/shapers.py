"""Traffic-class state machines.

Credit-based shaping for AVB stream classes, time-triggered dispatch with a
guard band, bandwidth-allocation-gap gating and ingress policing for
rate-constrained virtual links.

CBS credit is kept in units of 1e-12 bit so that ``slope[bit/s] * dt[ps]``
is an exact integer.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Iterable, Optional

TRANSMITTING = "transmitting"
WAITING = "waiting"
IDLE = "idle"


class UnknownCtId(KeyError):
    pass


@dataclass
class CbsState:
    idle_slope: int
    port_rate: int
    credit: int = 0
    last_update: int = 0

    def __post_init__(self):
        if not 0 < self.idle_slope < self.port_rate:
            raise ValueError("idle_slope must satisfy 0 < idle_slope < port_rate")

    @property
    def send_slope(self) -> int:
        return self.idle_slope - self.port_rate


def cbs_advance(state: CbsState, now: int, mode: str) -> CbsState:
    """Move the credit from ``state.last_update`` to ``now`` under ``mode``."""
    dt = now - state.last_update
    if dt < 0:
        raise ValueError("cbs_advance cannot go back in time")
    if mode == TRANSMITTING:
        state.credit += state.send_slope * dt
    elif mode == WAITING:
        state.credit += state.idle_slope * dt
    elif mode == IDLE:
        if state.credit > 0:
            state.credit = 0
        elif state.credit < 0:
            state.credit = min(0, state.credit + state.idle_slope * dt)
    else:
        raise ValueError(f"unknown CBS mode {mode!r}")
    state.last_update = now
    return state


def cbs_eligible(state: CbsState) -> bool:
    return state.credit >= 0


def cbs_ready_time(state: CbsState) -> int:
    """Time at which a waiting queue regains non-negative credit."""
    if state.credit >= 0:
        return state.last_update
    return state.last_update + -(state.credit // state.idle_slope)


@dataclass(frozen=True, order=True)
class TtAction:
    offset: int
    ct_id: int
    port: str
    reserved: int


@dataclass
class TtSchedule:
    """Dispatch actions of one egress port within a repeating cycle."""

    cycle: int
    actions: list[TtAction] = field(default_factory=list)

    def __post_init__(self):
        if self.cycle <= 0:
            raise ValueError("cycle must be positive")
        self.actions = sorted(self.actions)
        self._starts = [a.offset for a in self.actions]
        self._check()

    def _check(self):
        offsets = self._starts
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("TT offsets must be strictly increasing")
        for a in self.actions:
            if not 0 <= a.offset < self.cycle:
                raise ValueError(f"offset {a.offset} outside cycle")
        windows = [(a.offset, a.reserved) for a in self.actions]
        for i, (s1, d1) in enumerate(windows):
            for s2, d2 in windows[i + 1:]:
                if windows_overlap(s1, d1, s2, d2, self.cycle):
                    raise ValueError("TT windows overlap")

    def for_ct(self, ct_id: int) -> list[TtAction]:
        found = [a for a in self.actions if a.ct_id == ct_id]
        if not found:
            raise UnknownCtId(ct_id)
        return found

    def next_action(self, local_now: int) -> tuple[int, TtAction]:
        """Earliest (time, action) with time >= ``local_now``."""
        if not self.actions:
            raise LookupError("empty schedule")
        base, pos = divmod(local_now, self.cycle)
        i = bisect.bisect_left(self._starts, pos)
        if i == len(self.actions):
            return (base + 1) * self.cycle + self.actions[0].offset, self.actions[0]
        return base * self.cycle + self.actions[i].offset, self.actions[i]


def windows_overlap(s1: int, d1: int, s2: int, d2: int, cycle: int) -> bool:
    """Whether [s1, s1+d1) and [s2, s2+d2) intersect modulo ``cycle``."""
    if d1 <= 0 or d2 <= 0:
        return False
    if d1 >= cycle or d2 >= cycle:
        return True
    diff = (s2 - s1) % cycle
    # s2 lands inside the first window, or s1 inside the second
    return diff < d1 or (cycle - diff) % cycle < d2


def tt_dispatch_time(schedule: TtSchedule, ct_id: int, local_now: int) -> int:
    """Smallest t >= local_now with t congruent to an offset of ``ct_id``."""
    best = None
    for action in schedule.for_ct(ct_id):
        k = -(-(local_now - action.offset) // schedule.cycle)
        t = action.offset + k * schedule.cycle
        if best is None or t < best:
            best = t
    return best


def guard_admit(schedule: Optional[TtSchedule], now: int, tx_duration: int) -> bool:
    """True iff [now, now + tx_duration) touches no reserved TT window."""
    if tx_duration <= 0:
        raise ValueError("tx_duration must be positive")
    if schedule is None or not schedule.actions:
        return True
    return guard_release_time(schedule, now, tx_duration) == now


def guard_release_time(schedule: TtSchedule, now: int, tx_duration: int) -> Optional[int]:
    """Earliest t >= now at which ``tx_duration`` fits between TT windows.

    Returns None when no gap in the cycle is long enough.
    """
    if not schedule.actions:
        return now
    cycle = schedule.cycle
    if tx_duration >= cycle:
        return None
    t = now
    for _ in range(2 * len(schedule.actions) + 2):
        base = t - t % cycle
        end = None
        for a in schedule.actions:
            for start in (base - cycle + a.offset, base + a.offset, base + cycle + a.offset):
                if start < t + tx_duration and t < start + a.reserved:
                    end = max(end or 0, start + a.reserved)
        if end is None:
            return t
        t = end
    return None


@dataclass
class BagState:
    bag: int
    max_frame_bytes: int = 1518
    last_release: Optional[int] = None

    def __post_init__(self):
        if self.bag <= 0:
            raise ValueError("bag must be positive")


def bag_gate(state: BagState, now: int) -> int:
    """Earliest permitted release time for the next frame of the link."""
    if state.last_release is None:
        return now
    return max(now, state.last_release + state.bag)


def bag_release(state: BagState, t: int) -> None:
    state.last_release = t


@dataclass(frozen=True)
class PolicerConfig:
    bag: int
    max_frame_bytes: int
    jitter_allowance: int = 0


@dataclass
class PolicerHistory:
    last_accepted: Optional[int] = None
    accepted: int = 0
    dropped_rate: int = 0
    dropped_size: int = 0


ACCEPT = "accept"
DROP_RATE = "rate"
DROP_SIZE = "size"


def police_ingress(config: PolicerConfig, frame_bytes: int, arrival: int, history: PolicerHistory) -> str:
    """Return ``"accept"``, or the drop reason ``"size"`` / ``"rate"``."""
    if frame_bytes > config.max_frame_bytes:
        history.dropped_size += 1
        return DROP_SIZE
    last = history.last_accepted
    if last is not None and arrival < last + config.bag - config.jitter_allowance:
        history.dropped_rate += 1
        return DROP_RATE
    history.last_accepted = arrival
    history.accepted += 1
    return ACCEPT


def schedule_windows(actions: Iterable[TtAction]) -> list[tuple[int, int]]:
    return [(a.offset, a.offset + a.reserved) for a in actions]
