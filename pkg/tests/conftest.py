"""Shared helpers for the test suite."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import pytest

from ivnsim import des
from ivnsim.results.stats import Collector

SCENARIOS = Path(str(resources.files("ivnsim") / "scenarios"))


class FakeNet:
    """Minimal stand-in for a simulation: a queue, a collector and hooks."""

    def __init__(self):
        self.queue = des.EventQueue()
        self.collector = Collector()
        self.transmits = []
        self.dispatches = []

    def on_transmit(self, port, frame, t):
        self.transmits.append((t, port.name, frame))

    def on_tt_dispatch(self, port, frame, t):
        self.dispatches.append((t, port.name, frame))

    def run(self, t_end=None):
        if t_end is None:
            t_end = 10**15
        return des.run_until(self.queue, t_end)


@pytest.fixture
def net():
    return FakeNet()


@pytest.fixture
def scenarios():
    return SCENARIOS


# -- acceptance report ---------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str) -> None:
    ACCEPTANCE[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {verdict}  {title}  ({detail})")
