"""Inaccurate local oscillators with periodic synchronization.

A local clock runs at ``1 + drift_ppm * 1e-6`` times the global rate and is
pulled back to within ``sync_precision`` of global time at every sync event.
All conversions use exact rational arithmetic.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor

DRIFT_LIMIT_PPM = 10_000


@dataclass(frozen=True)
class Oscillator:
    drift_ppm: Fraction = Fraction(0)
    tick_length: int = 1

    def __post_init__(self):
        object.__setattr__(self, "drift_ppm", Fraction(self.drift_ppm))
        if abs(self.drift_ppm) >= DRIFT_LIMIT_PPM:
            raise ValueError(f"|drift_ppm| must be below {DRIFT_LIMIT_PPM}")
        if self.tick_length < 1:
            raise ValueError("tick_length must be at least 1 ps")

    @property
    def rate(self) -> Fraction:
        return 1 + self.drift_ppm / 1_000_000


class LocalClock:
    """Local time base of one node."""

    def __init__(
        self,
        oscillator: Oscillator | None = None,
        sync_interval: int = 0,
        sync_precision: int = 0,
        name: str = "",
    ):
        if sync_precision < 0 or sync_interval < 0:
            raise ValueError("sync parameters must be non-negative")
        self.oscillator = oscillator or Oscillator()
        self.sync_interval = sync_interval
        self.sync_precision = sync_precision
        self.name = name
        self.offset = 0
        self.last_sync_global = 0
        self.last_sync_local = 0

    @property
    def is_ideal(self) -> bool:
        return self.oscillator.drift_ppm == 0 and self.sync_precision == 0

    def _exact_local(self, t_global: int) -> Fraction:
        return self.last_sync_local + (t_global - self.last_sync_global) * self.oscillator.rate

    def global_to_local(self, t_global: int) -> int:
        if t_global < self.last_sync_global:
            raise ValueError("global time precedes the last sync")
        tick = self.oscillator.tick_length
        return floor(self._exact_local(t_global) / tick) * tick

    def local_to_global(self, t_local: int) -> int:
        """Earliest global time at which the local reading reaches ``t_local``."""
        tick = self.oscillator.tick_length
        target = -(-t_local // tick) * tick
        if target <= self.last_sync_local:
            return self.last_sync_global
        return self.last_sync_global + ceil((target - self.last_sync_local) / self.oscillator.rate)

    def local_duration(self, duration: int) -> int:
        """Global duration expressed in local units, rounded up."""
        return ceil(duration * self.oscillator.rate)

    def apply_sync(self, t_global: int, rng: random.Random) -> "LocalClock":
        p = self.sync_precision
        self.offset = rng.randint(-p, p) if p else 0
        self.last_sync_global = t_global
        self.last_sync_local = t_global + self.offset
        return self

    def max_error(self) -> int:
        """Upper bound on |local - global| between two syncs, in ps."""
        drift = abs(self.oscillator.drift_ppm) * self.sync_interval / 1_000_000
        return self.sync_precision + ceil(drift) + self.oscillator.tick_length
