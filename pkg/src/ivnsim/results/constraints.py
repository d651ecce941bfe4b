"""Declarative bounds on output vectors, read from XML.

Example::

    <constraints>
      <constraint module="Network.node1" name="rxMessageAge:vector" action="stop">
        <min>1.5</min>
        <max>1.7</max>
      </constraint>
      <constraint module="(.*)\\.node2" moduleIsRegex="true"
                  name="(rx|tx)MessageAge:vector" nameIsRegex="true">
        <avg_min samples="10">1.5</avg_min>
        <avg_max samples="10">1.7</avg_max>
        <interval_max window="10ms">1.7</interval_max>
        <sum_max>100</sum_max>
      </constraint>
    </constraints>

Values are compared exactly as rationals; latency vectors are in seconds.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

BOUND_TAGS = ("min", "max", "avg_min", "avg_max", "interval_min", "interval_max", "sum_max")


class ConstraintFileError(ValueError):
    pass


@dataclass
class ConstraintRule:
    module: str
    name: str
    module_is_regex: bool = False
    name_is_regex: bool = False
    min: Optional[Fraction] = None
    max: Optional[Fraction] = None
    avg_min: Optional[tuple[Fraction, int]] = None  # (bound, samples)
    avg_max: Optional[tuple[Fraction, int]] = None
    interval_min: Optional[tuple[Fraction, int]] = None  # (bound, window ps)
    interval_max: Optional[tuple[Fraction, int]] = None
    sum_max: Optional[Fraction] = None
    action: str = "report"
    index: int = 0

    def __post_init__(self):
        bounds = (self.min, self.max, self.avg_min, self.avg_max,
                  self.interval_min, self.interval_max, self.sum_max)
        if all(b is None for b in bounds):
            raise ConstraintFileError(f"constraint {self.index} has no bound")
        for b in (self.avg_min, self.avg_max, self.interval_min, self.interval_max):
            if b is not None and b[1] < 1:
                raise ConstraintFileError(f"constraint {self.index}: samples/window must be >= 1")
        if self.action not in ("report", "stop"):
            raise ConstraintFileError(f"constraint {self.index}: action must be report or stop")
        self._module_re = re.compile(self.module) if self.module_is_regex else None
        self._name_re = re.compile(self.name) if self.name_is_regex else None

    def matches(self, module: str, metric: str) -> bool:
        if self._module_re is not None:
            if not self._module_re.fullmatch(module):
                return False
        elif module != self.module:
            return False
        if self._name_re is not None:
            return self._name_re.fullmatch(metric) is not None
        return metric == self.name

    def describe(self) -> str:
        return f"#{self.index} module={self.module} name={self.name}"


@dataclass(frozen=True)
class Violation:
    rule: int
    bound: str
    limit: Fraction
    module: str
    metric: str
    value: Fraction
    time: int
    action: str

    def describe(self) -> str:
        return (f"rule #{self.rule} {self.bound}={float(self.limit):.9g} violated by {self.module} "
                f"{self.metric} value {float(self.value):.9g} at {self.time} ps")


def _bool(text: Optional[str]) -> bool:
    return (text or "false").strip().lower() in ("true", "1", "yes")


def _value(text: Optional[str], where: str) -> Fraction:
    try:
        return Fraction((text or "").strip())
    except ValueError:
        raise ConstraintFileError(f"{where}: not a number: {text!r}") from None


def _window(text: Optional[str], where: str) -> int:
    from ..andl.validate import parse_time

    if text is None:
        raise ConstraintFileError(f"{where}: missing window attribute")
    text = text.strip()
    try:
        if text and text[-1].isalpha():
            return parse_time(text)
        seconds = Fraction(text)
    except ValueError as exc:
        raise ConstraintFileError(f"{where}: {exc}") from None
    return int(seconds * 10**12)


def parse_constraints(text: str) -> list[ConstraintRule]:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise ConstraintFileError(f"malformed XML: {exc}") from None
    if root.tag != "constraints":
        raise ConstraintFileError("root element must be <constraints>")
    rules = []
    for i, el in enumerate(root.findall("constraint")):
        where = f"constraint {i}"
        if "module" not in el.attrib or "name" not in el.attrib:
            raise ConstraintFileError(f"{where}: module and name attributes are required")
        kw = {}
        for child in el:
            tag = child.tag
            if tag not in BOUND_TAGS:
                raise ConstraintFileError(f"{where}: unsupported element <{tag}>")
            value = _value(child.text, f"{where} <{tag}>")
            if tag in ("avg_min", "avg_max"):
                try:
                    n = int(child.attrib.get("samples", ""))
                except ValueError:
                    raise ConstraintFileError(f"{where} <{tag}>: samples must be an integer") from None
                kw[tag] = (value, n)
            elif tag in ("interval_min", "interval_max"):
                kw[tag] = (value, _window(child.attrib.get("window"), f"{where} <{tag}>"))
            else:
                kw[tag] = value
        rules.append(ConstraintRule(
            el.attrib["module"], el.attrib["name"],
            _bool(el.attrib.get("moduleIsRegex")), _bool(el.attrib.get("nameIsRegex")),
            action=el.attrib.get("action", "report"), index=i, **kw,
        ))
    return rules


def load_constraints(path) -> list[ConstraintRule]:
    with open(path, encoding="utf-8") as fh:
        return parse_constraints(fh.read())


@dataclass
class _Series:
    recent: deque
    timed: deque = field(default_factory=deque)
    first_time: Optional[int] = None
    total: Fraction = Fraction(0)


class ConstraintChecker:
    """Evaluates every sample against the matching rules."""

    def __init__(self, rules: list[ConstraintRule]):
        self.rules = list(rules)
        self.violations: list[Violation] = []
        self.stop: Optional[Violation] = None
        self._series: dict[tuple[int, str, str], _Series] = {}
        self._match: dict[tuple[str, str], list[ConstraintRule]] = {}

    def _rules_for(self, module: str, metric: str) -> list[ConstraintRule]:
        key = (module, metric)
        found = self._match.get(key)
        if found is None:
            found = self._match[key] = [r for r in self.rules if r.matches(module, metric)]
        return found

    def check(self, module: str, metric: str, value, t: int) -> list[Violation]:
        """Feed one sample; returns the violations it caused."""
        rules = self._rules_for(module, metric)
        if not rules:
            return []
        value = Fraction(value)
        out = []
        for rule in rules:
            for bound, limit in evaluate(rule, self._state(rule, module, metric), value, t):
                out.append(Violation(rule.index, bound, limit, module, metric, value, t, rule.action))
        self.violations.extend(out)
        if self.stop is None:
            for v in out:
                if v.action == "stop":
                    self.stop = v
                    break
        return out

    def _state(self, rule: ConstraintRule, module: str, metric: str) -> _Series:
        key = (rule.index, module, metric)
        s = self._series.get(key)
        if s is None:
            n = max(rule.avg_min[1] if rule.avg_min else 1, rule.avg_max[1] if rule.avg_max else 1)
            s = self._series[key] = _Series(deque(maxlen=n))
        return s


def evaluate(rule: ConstraintRule, s: _Series, value: Fraction, t: int) -> list[tuple[str, Fraction]]:
    """Update one series with a sample and list the bounds it breaks."""
    broken = []
    if rule.min is not None and value < rule.min:
        broken.append(("min", rule.min))
    if rule.max is not None and value > rule.max:
        broken.append(("max", rule.max))
    s.recent.append(value)
    for tag, spec, cmp in (("avg_min", rule.avg_min, -1), ("avg_max", rule.avg_max, 1)):
        if spec is None:
            continue
        bound, n = spec
        if len(s.recent) >= n:
            window = list(s.recent)[-n:]
            mean = sum(window, Fraction(0)) / n
            if (cmp < 0 and mean < bound) or (cmp > 0 and mean > bound):
                broken.append((tag, bound))
    if rule.interval_min is not None or rule.interval_max is not None:
        if s.first_time is None:
            s.first_time = t
        s.timed.append((t, value))
        longest = max(w for _, w in (x for x in (rule.interval_min, rule.interval_max) if x))
        while s.timed and s.timed[0][0] <= t - longest:
            s.timed.popleft()
        for tag, spec, cmp in (("interval_min", rule.interval_min, -1), ("interval_max", rule.interval_max, 1)):
            if spec is None:
                continue
            bound, w = spec
            if t - s.first_time < w:
                continue
            vals = [v for ts, v in s.timed if ts > t - w]
            mean = sum(vals, Fraction(0)) / len(vals)
            if (cmp < 0 and mean < bound) or (cmp > 0 and mean > bound):
                broken.append((tag, bound))
    if rule.sum_max is not None:
        s.total += value
        if s.total > rule.sum_max:
            broken.append(("sum_max", rule.sum_max))
    return broken


def check_constraints(rules: list[ConstraintRule], sample: tuple[str, str, object], t: int = 0,
                      checker: Optional[ConstraintChecker] = None) -> tuple[list[Violation], bool]:
    """Functional entry point: returns (violations, stop signal)."""
    checker = checker or ConstraintChecker(rules)
    module, metric, value = sample
    found = checker.check(module, metric, value, t)
    return found, any(v.action == "stop" for v in found)
