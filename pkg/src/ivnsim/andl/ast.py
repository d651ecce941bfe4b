"""Syntax tree of a network description; every node keeps its position."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

Pos = tuple[int, int]


@dataclass
class Quantity:
    value: Fraction
    unit: Optional[str]
    dim: Optional[str]  # "time", "size", "rate" or None for a plain number
    base: Fraction  # value converted to ps, bytes or bit/s
    pos: Pos = (0, 0)


@dataclass
class Name:
    name: str
    pos: Pos = (0, 0)


@dataclass
class Text:
    text: str
    pos: Pos = (0, 0)


Value = Union[Quantity, Name, Text]


@dataclass
class Param:
    name: str
    values: list[Value]
    pos: Pos = (0, 0)

    @property
    def value(self) -> Value:
        return self.values[0]


@dataclass
class TypeDef:
    kind: str
    name: str
    base: Optional[str]
    params: list[Param]
    pos: Pos = (0, 0)


@dataclass
class TypesBlock:
    name: str
    defs: list[TypeDef]
    pos: Pos = (0, 0)


@dataclass
class DeviceDecl:
    kind: str
    name: str
    base: Optional[str] = None
    params: list[Param] = field(default_factory=list)
    pos: Pos = (0, 0)


@dataclass
class LinkSpec:
    base: Optional[str]
    params: list[Param]
    pos: Pos = (0, 0)


@dataclass
class Connection:
    a: str
    b: str
    link: Optional[LinkSpec]
    pos: Pos = (0, 0)
    a_pos: Pos = (0, 0)
    b_pos: Pos = (0, 0)


@dataclass
class Segment:
    name: str
    connections: list[Connection]
    pos: Pos = (0, 0)


@dataclass
class MappingEntry:
    target: str  # segment or gateway name
    kind: str  # can, tt, rc, avb, be or pool
    params: list[Param]
    pool: Optional[str] = None
    pos: Pos = (0, 0)


@dataclass
class Message:
    name: str
    params: list[Param]
    mappings: list[MappingEntry]
    pos: Pos = (0, 0)

    def param(self, name: str) -> Optional[Param]:
        for p in self.params:
            if p.name == name:
                return p
        return None


@dataclass
class InlineEntry:
    key: str
    value: str
    pos: Pos = (0, 0)


@dataclass
class Network:
    name: str
    inline: list[InlineEntry] = field(default_factory=list)
    devices: list[DeviceDecl] = field(default_factory=list)
    segments: list[Segment] = field(default_factory=list)
    messages: list[Message] = field(default_factory=list)
    pos: Pos = (0, 0)


@dataclass
class Ast:
    types: list[TypesBlock]
    network: Network
