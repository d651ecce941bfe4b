"""Deterministic event queue and simulation loop.

Time is an integer count of picoseconds.  Events at the same instant are
ordered by ``tie_class`` and then by insertion order, so a run is fully
determined by its inputs.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

PS = 1
NS = 1_000
US = 1_000_000
MS = 1_000_000_000
S = 1_000_000_000_000

# Tie classes used by the network simulation, lowest fires first.
CLOCK_SYNC = 0
APP = 1
RECEIVE = 2
TT_DISPATCH = 3
SERVICE = 4
FLUSH = 5
SAMPLE = 6

TIE_CLASSES = {
    "clock_sync": CLOCK_SYNC,
    "app": APP,
    "receive": RECEIVE,
    "tt_dispatch": TT_DISPATCH,
    "service": SERVICE,
    "flush": FLUSH,
    "sample": SAMPLE,
}


class PastEvent(ValueError):
    """Raised when an event is scheduled before the current time."""


class StopSimulation(Exception):
    """Raised by a dispatcher to end the run after the current event."""

    def __init__(self, reason: Any = None):
        super().__init__(reason)
        self.reason = reason


class DispatchError(RuntimeError):
    """Wraps a failure raised while handling an event."""

    def __init__(self, event: "Event", cause: BaseException):
        super().__init__(f"error while dispatching {event.describe()}: {cause!r}")
        self.event = event
        self.cause = cause


@dataclass(eq=False)
class Event:
    fire_time: int
    tie_class: int = 0
    target: Any = None
    payload: tuple = ()
    seq: int = -1
    cancelled: bool = field(default=False, repr=False)

    def sort_key(self) -> tuple[int, int, int]:
        return (self.fire_time, self.tie_class, self.seq)

    def label(self) -> str:
        target = self.target
        owner = getattr(target, "__self__", None)
        func = getattr(target, "__name__", None)
        if owner is not None and func is not None:
            return f"{getattr(owner, 'name', type(owner).__name__)}.{func}"
        if func is not None:
            return func
        return "" if target is None else str(target)

    def describe(self) -> str:
        return f"event(t={self.fire_time}, class={self.tie_class}, seq={self.seq}, {self.label()})"


class EventQueue:
    """Priority queue of events keyed by (fire_time, tie_class, seq)."""

    def __init__(self, start: int = 0):
        if start < 0:
            raise ValueError("start time must be non-negative")
        self.current_time = start
        self._heap: list[tuple[int, int, int, Event]] = []
        self._next_seq = 0
        self._live = 0

    def __len__(self) -> int:
        return self._live

    def schedule(self, event: Event) -> Event:
        """Insert ``event`` and return it as the cancellation handle."""
        if event.fire_time < self.current_time:
            raise PastEvent(
                f"cannot schedule at {event.fire_time} ps, current time is {self.current_time} ps"
            )
        if event.seq >= 0:
            raise ValueError("event already scheduled")
        event.seq = self._next_seq
        self._next_seq += 1
        heapq.heappush(self._heap, (event.fire_time, event.tie_class, event.seq, event))
        self._live += 1
        return event

    def at(self, fire_time: int, tie_class: int, target: Callable, *payload) -> Event:
        return self.schedule(Event(fire_time, tie_class, target, payload))

    def cancel(self, handle: Optional[Event]) -> bool:
        if handle is None or handle.cancelled or handle.seq < 0:
            return False
        handle.cancelled = True
        self._live -= 1
        return True

    def peek_time(self) -> Optional[int]:
        self._drop_cancelled()
        return self._heap[0][0] if self._heap else None

    def _drop_cancelled(self) -> None:
        heap = self._heap
        while heap and heap[0][3].cancelled:
            heapq.heappop(heap)

    def pop_next(self) -> Optional[Event]:
        self._drop_cancelled()
        if not self._heap:
            return None
        event = heapq.heappop(self._heap)[3]
        # popped events can no longer be cancelled
        event.cancelled = True
        self._live -= 1
        self.current_time = event.fire_time
        return event


@dataclass
class RunSummary:
    processed: int
    final_time: int
    stopped_early: bool = False
    stop_reason: Any = None


def default_dispatch(event: Event) -> None:
    event.target(*event.payload)


def run_until(
    queue: EventQueue,
    t_end: int,
    dispatch: Callable[[Event], None] = default_dispatch,
    log: Optional[Callable[[Event], None]] = None,
) -> RunSummary:
    """Process every event with ``fire_time <= t_end``.

    A :class:`StopSimulation` raised by ``dispatch`` ends the run; the event
    that raised it counts as processed.  Any other exception is wrapped in
    :class:`DispatchError` naming the event.
    """
    if t_end < queue.current_time:
        raise ValueError(f"t_end {t_end} is before current time {queue.current_time}")
    processed = 0
    heap = queue._heap
    while True:
        while heap and heap[0][3].cancelled:
            heapq.heappop(heap)
        if not heap or heap[0][0] > t_end:
            break
        event = queue.pop_next()
        processed += 1
        if log is not None:
            log(event)
        try:
            dispatch(event)
        except StopSimulation as stop:
            return RunSummary(processed, queue.current_time, True, stop.reason)
        except Exception as exc:
            raise DispatchError(event, exc) from exc
    queue.current_time = t_end
    return RunSummary(processed, t_end)
