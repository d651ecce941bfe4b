"""Semantic checks and resolution from syntax tree to :class:`NetworkModel`."""

from __future__ import annotations

from collections import deque
from dataclasses import replace
from fractions import Fraction
from typing import Optional

from ..ethernet import MAX_PAYLOAD
from ..gateway import ENTRY_HEADER, MAX_FRAMES
from . import ast
from .errors import AndlSyntaxError, AndlValidationError, Diagnostic
from .lexer import Lexer, quantity
from .model import (
    DEFAULT_CAN_BITRATE,
    DEFAULT_LINK_RATE,
    DEFAULT_PROCESSING,
    ETHERNET_CLASSES,
    ClockParams,
    DeviceModel,
    LinkModel,
    Mapping,
    MessageModel,
    NetworkModel,
    PoolRef,
    SegmentModel,
)

CAN_MAX_PAYLOAD = 8
CAN_MAX_ID = 0x7FF

NODE_PARAMS = {
    "processingDelay", "queueCapacity", "driftPpm", "randomDrift",
    "tickLength", "syncInterval", "syncPrecision",
}
PARAMS_BY_KIND = {
    "node": NODE_PARAMS,
    "gateway": NODE_PARAMS,
    "switch": NODE_PARAMS,
    "canLink": {"bitrate"},
    "ethernetLink": {"bandwidth", "delay"},
}
MESSAGE_PARAMS = {"sender", "receivers", "payload", "period", "offset", "jitter", "burst", "record"}
MAPPING_PARAMS = {
    "can": {"id"},
    "tt": {"ctID"},
    "rc": {"vlID", "bag", "priority", "maxFrameSize", "jitterAllowance"},
    "avb": {"streamID", "class", "idleSlope"},
    "be": {"priority"},
    "pool": {"holdUp"},
}
CLASS_IDENT = {"tt": "ctID", "rc": "vlID", "avb": "streamID"}

OVERRIDE_KEYS = (
    "seed",
    "duration",
    "cross_traffic_frame_size",
    "classes",
    "clock.max_drift_ppm",
    "clock.sync_precision",
    "clock.tick_length",
    "clock.sync_interval",
    "processing_delay",
)


class _Bad(Exception):
    """Internal: a parameter failed conversion; diagnostic already recorded."""


class Validator:
    def __init__(self, tree: ast.Ast, overrides: Optional[dict] = None):
        self.tree = tree
        self.overrides = dict(overrides or {})
        self.diags: list[Diagnostic] = []
        self.types: dict[str, tuple[str, ast.TypeDef]] = {}

    # -- diagnostics and conversions ----------------------------------------

    def err(self, pos, message: str) -> None:
        line, col = pos if pos else (None, None)
        self.diags.append(Diagnostic(line, col, message))

    def flush(self) -> None:
        if self.diags:
            raise AndlValidationError(list(dict.fromkeys(self.diags)))

    def _one(self, p: ast.Param) -> ast.Value:
        if len(p.values) != 1:
            self.err(p.pos, f"parameter '{p.name}' takes a single value")
            raise _Bad
        return p.value

    def _quantity(self, p: ast.Param, dim: str, what: str) -> Fraction:
        v = self._one(p)
        if not isinstance(v, ast.Quantity) or v.dim not in (dim, None) or (v.dim is None and v.value != 0 and dim != "size"):
            self.err(p.pos, f"parameter '{p.name}' expects a {what}")
            raise _Bad
        if v.base < 0:
            self.err(p.pos, f"parameter '{p.name}' must not be negative")
            raise _Bad
        return v.base

    def time(self, p: ast.Param) -> int:
        base = self._quantity(p, "time", "time such as 5ms")
        if base.denominator != 1:
            self.err(p.pos, f"parameter '{p.name}' is not a whole number of picoseconds")
            raise _Bad
        return int(base)

    def size(self, p: ast.Param) -> int:
        base = self._quantity(p, "size", "size such as 64B")
        if base.denominator != 1:
            self.err(p.pos, f"parameter '{p.name}' is not a whole number of bytes")
            raise _Bad
        return int(base)

    def rate(self, p: ast.Param) -> int:
        v = self._one(p)
        if not isinstance(v, ast.Quantity) or v.dim != "rate" or v.base <= 0:
            self.err(p.pos, f"parameter '{p.name}' expects a positive rate such as 100Mb/s")
            raise _Bad
        if v.base.denominator != 1:
            self.err(p.pos, f"parameter '{p.name}' is not a whole number of bit/s")
            raise _Bad
        return int(v.base)

    def integer(self, p: ast.Param, lo: int, hi: int) -> int:
        v = self._one(p)
        if not isinstance(v, ast.Quantity) or v.dim is not None or v.value.denominator != 1:
            self.err(p.pos, f"parameter '{p.name}' expects an integer")
            raise _Bad
        n = int(v.value)
        if not lo <= n <= hi:
            self.err(p.pos, f"parameter '{p.name}' = {n} outside [{lo}, {hi}]")
            raise _Bad
        return n

    def number(self, p: ast.Param) -> Fraction:
        v = self._one(p)
        if not isinstance(v, ast.Quantity) or v.dim is not None:
            self.err(p.pos, f"parameter '{p.name}' expects a plain number")
            raise _Bad
        return v.value

    def boolean(self, p: ast.Param) -> bool:
        v = self._one(p)
        if isinstance(v, ast.Name) and v.name in ("true", "false"):
            return v.name == "true"
        self.err(p.pos, f"parameter '{p.name}' expects true or false")
        raise _Bad

    def name(self, p: ast.Param) -> str:
        v = self._one(p)
        if not isinstance(v, ast.Name):
            self.err(p.pos, f"parameter '{p.name}' expects a name")
            raise _Bad
        return v.name

    def names(self, p: ast.Param) -> list[str]:
        out = []
        for v in p.values:
            if not isinstance(v, ast.Name):
                self.err(p.pos, f"parameter '{p.name}' expects names")
                raise _Bad
            out.append(v.name)
        return out

    # -- types ------------------------------------------------------------------

    def index_types(self) -> None:
        for block in self.tree.types:
            for td in block.defs:
                self.types[f"{block.name}.{td.name}"] = (block.name, td)

    def lookup_type(self, qname: str, block: Optional[str], pos) -> Optional[ast.TypeDef]:
        candidates = [qname]
        if block is not None and "." not in qname:
            candidates.insert(0, f"{block}.{qname}")
        if "." not in qname:
            candidates += [k for k in self.types if k.split(".", 1)[1] == qname]
        for key in candidates:
            if key in self.types:
                return self.types[key][1]
        self.err(pos, f"undefined type '{qname}'")
        return None

    def resolve_params(self, kind: str, base: Optional[str], own: list[ast.Param], pos,
                       block: Optional[str] = None) -> Optional[dict[str, ast.Param]]:
        """Merge inherited parameters (base first, refinements win)."""
        chain = []
        seen = set()
        current = base
        current_block = block
        while current is not None:
            td = self.lookup_type(current, current_block, pos)
            if td is None:
                return None
            key = id(td)
            if key in seen:
                self.err(pos, f"inheritance cycle through type '{current}'")
                return None
            seen.add(key)
            if td.kind != kind:
                self.err(pos, f"type '{current}' is a {td.kind}, not a {kind}")
                return None
            chain.append(td)
            current_block = next(b for b, t in self.types.values() if t is td)
            current = td.base
        merged: dict[str, ast.Param] = {}
        for td in reversed(chain):
            for p in td.params:
                merged[p.name] = p
        for p in own:
            merged[p.name] = p
        allowed = PARAMS_BY_KIND[kind]
        for p in merged.values():
            if p.name not in allowed:
                self.err(p.pos, f"unsupported parameter '{p.name}' for {kind}")
        return merged

    def check_type_defs(self) -> None:
        for key, (block, td) in self.types.items():
            self.resolve_params(td.kind, td.base, td.params, td.pos, block)

    # -- devices and topology ---------------------------------------------------

    def device(self, decl: ast.DeviceDecl) -> Optional[DeviceModel]:
        params = self.resolve_params(decl.kind, decl.base, decl.params, decl.pos)
        if params is None:
            return None
        try:
            if decl.kind == "canLink":
                bitrate = self.rate(params["bitrate"]) if "bitrate" in params else DEFAULT_CAN_BITRATE
                return DeviceModel(decl.name, decl.kind, bitrate=bitrate)
            clock = ClockParams()
            if "driftPpm" in params:
                drift = self.number(params["driftPpm"])
                if abs(drift) >= 10_000:
                    self.err(params["driftPpm"].pos, "driftPpm must satisfy |drift| < 10000")
                    raise _Bad
                clock = replace(clock, drift_ppm=drift)
            if "randomDrift" in params:
                clock = replace(clock, random_drift=self.boolean(params["randomDrift"]))
            if "tickLength" in params:
                tick = self.time(params["tickLength"])
                if tick < 1:
                    self.err(params["tickLength"].pos, "tickLength must be at least 1ps")
                    raise _Bad
                clock = replace(clock, tick_length=tick)
            if "syncInterval" in params:
                clock = replace(clock, sync_interval=self.time(params["syncInterval"]))
            if "syncPrecision" in params:
                clock = replace(clock, sync_precision=self.time(params["syncPrecision"]))
            processing = DEFAULT_PROCESSING[decl.kind]
            if "processingDelay" in params:
                processing = self.time(params["processingDelay"])
            capacity = None
            if "queueCapacity" in params:
                capacity = self.integer(params["queueCapacity"], 1, 1 << 31)
            return DeviceModel(decl.name, decl.kind, processing, clock, None, capacity)
        except _Bad:
            return None

    def segments(self, devices: dict[str, DeviceModel]) -> list[SegmentModel]:
        out = []
        edges: dict[frozenset, str] = {}
        for seg in self.tree.network.segments:
            links = []
            attachments = []
            for conn in seg.connections:
                bad = False
                for end, pos in ((conn.a, conn.a_pos), (conn.b, conn.b_pos)):
                    if end not in devices:
                        declared = any(d.name == end for d in self.tree.network.devices)
                        if not declared:
                            self.err(pos, f"undefined device '{end}'")
                        bad = True
                if bad:
                    continue
                if conn.a == conn.b:
                    self.err(conn.pos, f"device '{conn.a}' connected to itself")
                    continue
                key = frozenset((conn.a, conn.b))
                if key in edges:
                    self.err(conn.pos, f"'{conn.a}' and '{conn.b}' are already connected in segment {edges[key]}")
                    continue
                edges[key] = seg.name
                ka, kb = devices[conn.a].kind, devices[conn.b].kind
                if ka == "canLink" and kb == "canLink":
                    self.err(conn.pos, "two CAN busses cannot be connected directly")
                elif "canLink" in (ka, kb):
                    dev, bus = (conn.b, conn.a) if ka == "canLink" else (conn.a, conn.b)
                    if devices[dev].kind == "switch":
                        self.err(conn.pos, f"switch '{dev}' cannot attach to CAN bus '{bus}'")
                    elif conn.link is not None:
                        self.err(conn.link.pos, "link annotations are unsupported on CAN attachments")
                    else:
                        attachments.append((dev, bus))
                else:
                    links.append(self.link(conn))
            if links and attachments:
                self.err(seg.pos, f"segment '{seg.name}' mixes Ethernet links and CAN attachments")
            kind = "ethernet" if links else "can" if attachments else "empty"
            out.append(SegmentModel(seg.name, kind, tuple(l for l in links if l), tuple(attachments)))
        return out

    def link(self, conn: ast.Connection) -> Optional[LinkModel]:
        rate, delay = DEFAULT_LINK_RATE, 0
        if conn.link is not None:
            params = self.resolve_params("ethernetLink", conn.link.base, conn.link.params, conn.link.pos)
            if params is None:
                return None
            try:
                if "bandwidth" in params:
                    rate = self.rate(params["bandwidth"])
                if "delay" in params:
                    delay = self.time(params["delay"])
            except _Bad:
                return None
        return LinkModel(conn.a, conn.b, rate, delay)

    # -- messages -----------------------------------------------------------------

    def adjacency(self, segments: list[SegmentModel]) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {}
        for seg in segments:
            pairs = [(l.a, l.b) for l in seg.links] + list(seg.attachments)
            for a, b in pairs:
                adj.setdefault(a, []).append(b)
                adj.setdefault(b, []).append(a)
        return adj

    @staticmethod
    def shortest_path(adj, devices, src: str, dst: str) -> Optional[tuple[str, ...]]:
        """Breadth-first search; end nodes other than ``src`` are never transit."""
        parent = {src: None}
        todo = deque([src])
        while todo:
            u = todo.popleft()
            if u == dst:
                path = []
                while u is not None:
                    path.append(u)
                    u = parent[u]
                return tuple(reversed(path))
            if u != src and devices[u].kind == "node":
                continue
            for v in adj.get(u, ()):
                if v not in parent:
                    parent[v] = u
                    todo.append(v)
        return None

    def mapping(self, entry: ast.MappingEntry, msg_period: Optional[int], payload: int) -> Optional[Mapping]:
        params = {p.name: p for p in entry.params}
        allowed = MAPPING_PARAMS[entry.kind]
        for p in entry.params:
            if p.name not in allowed:
                self.err(p.pos, f"unsupported parameter '{p.name}' for {entry.kind} mapping")
                return None
        kind = entry.kind
        try:
            if kind == "can":
                if "id" not in params:
                    self.err(entry.pos, "can mapping requires an id")
                    return None
                return Mapping(entry.target, kind, ident=self.integer(params["id"], 0, CAN_MAX_ID))
            if kind in CLASS_IDENT:
                key = CLASS_IDENT[kind]
                if key not in params:
                    self.err(entry.pos, f"{kind} mapping requires {key}")
                    return None
                ident = self.integer(params[key], 0, (1 << 32) - 1)
            else:
                ident = 0
            if kind == "tt":
                if msg_period is None:
                    self.err(entry.pos, "tt mapping requires the message to have a period")
                    return None
                return Mapping(entry.target, kind, ident=ident)
            if kind == "rc":
                bag = self.time(params["bag"]) if "bag" in params else msg_period
                if not bag:
                    self.err(entry.pos, "rc mapping needs a bag or a message period")
                    return None
                prio = self.integer(params["priority"], 0, 7) if "priority" in params else 7
                max_frame = self.size(params["maxFrameSize"]) if "maxFrameSize" in params else None
                ja = self.time(params["jitterAllowance"]) if "jitterAllowance" in params else None
                return Mapping(entry.target, kind, ident, prio, bag=bag, max_frame=max_frame, jitter_allowance=ja)
            if kind == "avb":
                sr = self.name(params["class"]) if "class" in params else "A"
                if sr not in ("A", "B"):
                    self.err(params["class"].pos, f"AVB class must be A or B, not {sr}")
                    return None
                slope = self.rate(params["idleSlope"]) if "idleSlope" in params else None
                return Mapping(entry.target, kind, ident, {"A": 3, "B": 2}[sr], sr_class=sr, idle_slope=slope)
            if kind == "be":
                prio = self.integer(params["priority"], 0, 7) if "priority" in params else 0
                return Mapping(entry.target, kind, 0, prio)
        except _Bad:
            return None
        raise AssertionError(kind)

    def message(self, msg: ast.Message, devices, segs: dict[str, SegmentModel], adj) -> Optional[MessageModel]:
        for p in msg.params:
            if p.name not in MESSAGE_PARAMS:
                self.err(p.pos, f"unsupported message parameter '{p.name}'")
                return None
        params = {p.name: p for p in msg.params}
        for required in ("sender", "receivers", "payload"):
            if required not in params:
                self.err(msg.pos, f"message '{msg.name}' lacks '{required}'")
                return None
        try:
            sender = self.name(params["sender"])
            receivers = self.names(params["receivers"])
            payload = self.size(params["payload"])
            period = self.time(params["period"]) if "period" in params else None
            offset = self.time(params["offset"]) if "offset" in params else 0
            jitter = self.time(params["jitter"]) if "jitter" in params else 0
            burst = self.size(params["burst"]) if "burst" in params else None
            record = self.boolean(params["record"]) if "record" in params else True
        except _Bad:
            return None
        if period == 0:
            self.err(params["period"].pos, "period must be positive")
            return None
        if period is not None and jitter >= period:
            self.err(params["jitter"].pos, "jitter must be shorter than the period")
            return None
        if burst is not None and payload == 0:
            self.err(params["burst"].pos, "a burst needs a non-zero payload")
            return None
        ok = True
        for who, pos in [(sender, params["sender"].pos)] + [(r, params["receivers"].pos) for r in receivers]:
            if who not in devices:
                self.err(pos, f"undefined device '{who}'")
                ok = False
            elif devices[who].kind not in ("node", "gateway"):
                self.err(pos, f"'{who}' is a {devices[who].kind}; messages run between nodes or gateways")
                ok = False
        if len(set(receivers)) != len(receivers):
            self.err(params["receivers"].pos, "duplicate receiver")
            ok = False
        if sender in receivers:
            self.err(params["receivers"].pos, "sender cannot be its own receiver")
            ok = False
        if not ok:
            return None

        routes = []
        for r in receivers:
            path = self.shortest_path(adj, devices, sender, r)
            if path is None:
                self.err(params["receivers"].pos, f"receiver '{r}' is unreachable from '{sender}'")
                ok = False
            else:
                routes.append((r, path))
        mappings = []
        pools = []
        entries = {}
        for entry in msg.mappings:
            entries[entry.target] = entry
            if entry.kind == "pool":
                if entry.target not in devices or devices[entry.target].kind != "gateway":
                    self.err(entry.pos, f"pool mapping target '{entry.target}' is not a gateway")
                    ok = False
                    continue
                p = {x.name: x for x in entry.params}
                if set(p) - {"holdUp"}:
                    bad = next(x for x in entry.params if x.name != "holdUp")
                    self.err(bad.pos, f"unsupported parameter '{bad.name}' for pool mapping")
                    ok = False
                    continue
                if "holdUp" not in p:
                    self.err(entry.pos, "pool mapping requires holdUp")
                    ok = False
                    continue
                try:
                    pools.append(PoolRef(entry.target, entry.pool, self.time(p["holdUp"])))
                except _Bad:
                    ok = False
                continue
            seg = segs.get(entry.target)
            if seg is None:
                self.err(entry.pos, f"mapping target '{entry.target}' is not a segment")
                ok = False
                continue
            if seg.kind == "can" and entry.kind != "can":
                self.err(entry.pos, f"segment '{seg.name}' is CAN; {entry.kind} mapping is not possible")
                ok = False
                continue
            if seg.kind == "ethernet" and entry.kind == "can":
                self.err(entry.pos, f"segment '{seg.name}' is Ethernet; can mapping is not possible")
                ok = False
                continue
            if entry.kind == "can" and payload > CAN_MAX_PAYLOAD:
                self.err(entry.pos, f"payload {payload} B exceeds the CAN maximum of {CAN_MAX_PAYLOAD} B")
                ok = False
                continue
            if entry.kind in ETHERNET_CLASSES and payload > MAX_PAYLOAD:
                self.err(entry.pos, f"payload {payload} B exceeds the Ethernet maximum of {MAX_PAYLOAD} B")
                ok = False
                continue
            m = self.mapping(entry, period, payload)
            if m is None:
                ok = False
            else:
                mappings.append(m)
        if not ok:
            return None

        model = MessageModel(msg.name, sender, tuple(receivers), payload, period, offset, jitter,
                             burst, record, tuple(mappings), tuple(pools), tuple(routes))
        crossed = []
        entry_points = set()
        edge_seg = {}
        for seg in segs.values():
            for l in seg.links:
                edge_seg[frozenset((l.a, l.b))] = seg
            for d, b in seg.attachments:
                edge_seg[frozenset((d, b))] = seg
        unsupported = set()
        first_eth = {edge_seg[frozenset(path[:2])].name for _, path in routes
                     if edge_seg[frozenset(path[:2])].kind == "ethernet"}
        if len(first_eth) > 1:
            unsupported.add("a sender may feed only one Ethernet segment directly")
        for _, path in routes:
            prev = None
            for a, b in zip(path, path[1:]):
                seg = edge_seg[frozenset((a, b))]
                if seg.name not in crossed:
                    crossed.append(seg.name)
                if prev is not None and prev.kind == "can" and seg.kind == "ethernet":
                    entry_points.add(a)
                if prev is not None and prev.kind == seg.kind == "ethernet" and prev.name != seg.name:
                    unsupported.add(f"Ethernet to Ethernet translation at '{a}' is not supported")
                prev = seg
        for text in sorted(unsupported):
            self.err(msg.pos, f"message '{msg.name}': {text}")
            ok = False
        for name in crossed:
            if model.mapping(name) is None:
                self.err(msg.pos, f"message '{msg.name}' crosses segment '{name}' without a mapping")
                ok = False
        for m in mappings:
            if m.segment not in crossed:
                self.err(entries[m.segment].pos, f"message '{msg.name}' never crosses segment '{m.segment}'")
                ok = False
        for p in pools:
            if p.gateway not in entry_points:
                self.err(entries[p.gateway].pos,
                         f"pool at '{p.gateway}' unused: the message does not enter Ethernet there from CAN")
                ok = False
        return model if ok else None

    def check_message_set(self, messages: list[MessageModel], ast_msgs: dict[str, ast.Message],
                          segs: dict[str, SegmentModel]) -> None:
        def pos_of(msg: MessageModel, target: str):
            for e in ast_msgs[msg.name].mappings:
                if e.target == target:
                    return e.pos
            return ast_msgs[msg.name].pos

        # identifiers must be unique, pool members may share their backbone id
        owners: dict[tuple, tuple[MessageModel, Optional[tuple]]] = {}
        for msg in messages:
            for m in msg.mappings:
                if m.kind == "be":
                    continue
                if m.kind == "can":
                    key = ("can", m.segment, m.ident)
                else:
                    key = (m.kind, m.ident)
                pool = pool_key_for(msg, m.segment, segs)
                prev = owners.get(key)
                if prev is None:
                    owners[key] = (msg, pool)
                elif m.kind == "can" or pool is None or prev[1] != pool:
                    label = {"can": "CAN id", "tt": "ctID", "rc": "vlID", "avb": "streamID"}[m.kind]
                    self.err(pos_of(msg, m.segment),
                             f"duplicate {label} {m.ident} (already used by message '{prev[0].name}')")

        # pooled messages share one Ethernet frame, hence one backbone mapping
        pools: dict[tuple, list[tuple[MessageModel, Mapping, int]]] = {}
        for msg in messages:
            for gw, seg_name in gateway_entries(msg, segs):
                key = pool_key_for(msg, seg_name, segs, gw)
                ref = msg.pool(gw)
                holdup = ref.holdup if ref else 0
                pools.setdefault(key, []).append((msg, msg.mapping(seg_name), holdup))
        for key, members in pools.items():
            first = members[0][1]
            for msg, m, _ in members[1:]:
                if replace(m, segment="") != replace(first, segment="") or m.segment != first.segment:
                    self.err(pos_of(msg, key[0]),
                             f"pool '{key[1]}' at '{key[0]}' mixes different Ethernet mappings")
            frames, size = pool_bound([(msg, h) for msg, _, h in members])
            if size > MAX_PAYLOAD or frames > MAX_FRAMES:
                self.err(pos_of(members[0][0], key[0]),
                         f"pool '{key[1]}' at '{key[0]}' may collect {frames} frames / {size} B, "
                         f"more than one Ethernet frame holds")

    # -- overrides and inline settings -----------------------------------------

    def settings(self) -> tuple[Optional[int], Optional[int]]:
        seed = duration = None
        for entry in self.tree.network.inline:
            if entry.key in ("seed", "seed-set"):
                try:
                    seed = int(entry.value)
                except ValueError:
                    self.err(entry.pos, f"inline {entry.key} must be an integer")
            elif entry.key == "sim-time-limit":
                try:
                    duration = parse_time(entry.value)
                except ValueError as exc:
                    self.err(entry.pos, f"inline sim-time-limit: {exc}")
        return seed, duration

    def run(self) -> NetworkModel:
        for key in self.overrides:
            if key not in OVERRIDE_KEYS:
                raise AndlValidationError([Diagnostic(None, None, f"unknown override '{key}'")])
        self.index_types()
        self.check_type_defs()
        net = self.tree.network
        devices: dict[str, DeviceModel] = {}
        for decl in net.devices:
            dev = self.device(decl)
            if dev is not None:
                devices[dev.name] = dev
        try:
            devices = self.apply_device_overrides(devices)
        except ValueError as exc:
            raise AndlValidationError([Diagnostic(None, None, f"override: {exc}")]) from None
        segments = self.segments(devices)
        seed, duration = self.settings()
        self.flush()

        segs = {s.name: s for s in segments}
        adj = self.adjacency(segments)
        messages = []
        for msg in net.messages:
            m = self.message(msg, devices, segs, adj)
            if m is not None:
                messages.append(m)
        self.flush()
        try:
            messages = self.apply_message_overrides(messages)
        except ValueError as exc:
            raise AndlValidationError([Diagnostic(None, None, f"override: {exc}")]) from None
        self.check_message_set(messages, {m.name: m for m in net.messages}, segs)
        self.flush()

        try:
            if "seed" in self.overrides:
                seed = int(self.overrides["seed"])
            if "duration" in self.overrides:
                duration = parse_time(self.overrides["duration"])
                if duration <= 0:
                    raise ValueError("duration must be positive")
        except ValueError as exc:
            raise AndlValidationError([Diagnostic(None, None, f"override: {exc}")]) from None
        return NetworkModel(
            net.name,
            tuple(devices[d.name] for d in net.devices),
            tuple(segments),
            tuple(messages),
            tuple((e.key, e.value) for e in net.inline),
            tuple(sorted((k, str(v)) for k, v in self.overrides.items())),
            seed,
            duration,
        )

    def apply_device_overrides(self, devices: dict[str, DeviceModel]) -> dict[str, DeviceModel]:
        o = self.overrides
        out = {}
        for name, dev in devices.items():
            if dev.kind != "canLink":
                clock = dev.clock
                if "clock.max_drift_ppm" in o:
                    bound = parse_number(o["clock.max_drift_ppm"])
                    if abs(bound) >= 10_000:
                        raise ValueError("clock.max_drift_ppm must satisfy |x| < 10000")
                    clock = replace(clock, drift_ppm=abs(bound), random_drift=bound != 0)
                if "clock.sync_precision" in o:
                    clock = replace(clock, sync_precision=parse_time(o["clock.sync_precision"]))
                if "clock.tick_length" in o:
                    tick = parse_time(o["clock.tick_length"])
                    if tick < 1:
                        raise ValueError("clock.tick_length must be at least 1ps")
                    clock = replace(clock, tick_length=tick)
                if "clock.sync_interval" in o:
                    clock = replace(clock, sync_interval=parse_time(o["clock.sync_interval"]))
                dev = replace(dev, clock=clock)
                if "processing_delay" in o and dev.kind == "switch":
                    dev = replace(dev, processing_delay=parse_time(o["processing_delay"]))
            out[name] = dev
        return out

    def apply_message_overrides(self, messages: list[MessageModel]) -> list[MessageModel]:
        o = self.overrides
        if "cross_traffic_frame_size" in o:
            frame = parse_size(o["cross_traffic_frame_size"])
            payload = max(64, frame) - 18
            if payload > MAX_PAYLOAD:
                raise ValueError(f"cross_traffic_frame_size {frame} B exceeds 1518 B")
            messages = [replace(m, payload=payload) if m.stats_class == "be" else m for m in messages]
        if "classes" in o:
            wanted = {c.strip() for c in str(o["classes"]).split(",") if c.strip()}
            unknown = wanted - set(ETHERNET_CLASSES) - {"can"}
            if unknown:
                raise ValueError(f"unknown classes {sorted(unknown)}")
            messages = [m for m in messages if m.stats_class in wanted]
        return messages


def gateway_entries(msg: MessageModel, segs: dict[str, SegmentModel]) -> list[tuple[str, str]]:
    """(gateway, Ethernet segment) where the message enters Ethernet from CAN."""
    out = []
    edge_seg = {}
    for seg in segs.values():
        for l in seg.links:
            edge_seg[frozenset((l.a, l.b))] = seg
        for d, b in seg.attachments:
            edge_seg[frozenset((d, b))] = seg
    for _, path in msg.routes:
        prev = None
        for a, b in zip(path, path[1:]):
            seg = edge_seg[frozenset((a, b))]
            if prev is not None and prev.kind == "can" and seg.kind == "ethernet":
                if (a, seg.name) not in out:
                    out.append((a, seg.name))
            prev = seg
    return out


def pool_bound(members: list[tuple[MessageModel, int]]) -> tuple[int, int]:
    """Worst-case (frames, encapsulated bytes) one pool flush can carry."""
    window = max(h for _, h in members)
    frames = 0
    size = 1
    for msg, _ in members:
        n = msg.frames_per_release
        if msg.period:
            n *= window // msg.period + 1 + (1 if msg.jitter else 0)
        frames += n
        size += n * (ENTRY_HEADER.size + msg.payload)
    return frames, size


def pools_of(model_messages, segs: dict[str, SegmentModel]) -> dict[tuple[str, str], list[tuple[MessageModel, str, int]]]:
    """Pool key -> members as (message, Ethernet segment, holdup)."""
    pools: dict = {}
    for msg in model_messages:
        for gw, seg_name in gateway_entries(msg, segs):
            ref = msg.pool(gw)
            key = (gw, ref.pool if ref else msg.name)
            pools.setdefault(key, []).append((msg, seg_name, ref.holdup if ref else 0))
    return pools


def pool_key_for(msg: MessageModel, segment: str, segs: dict[str, SegmentModel],
                 gateway: Optional[str] = None) -> Optional[tuple[str, str]]:
    """Pool (gateway, pool name) feeding ``segment``, implicit pools use the message name."""
    for gw, seg_name in gateway_entries(msg, segs):
        if seg_name == segment and (gateway is None or gw == gateway):
            ref = msg.pool(gw)
            return (gw, ref.pool if ref else msg.name)
    return None


def _literal(text: str):
    text = str(text).strip()
    try:
        lex = Lexer(text)
        tok = lex.next()
        end = lex.next()
    except AndlSyntaxError as exc:
        raise ValueError(exc.diagnostics[0].message) from None
    if tok.kind != "number" or end.kind != "eof":
        raise ValueError(f"not a literal: {text!r}")
    return quantity(tok.value, tok.unit)


def parse_time(text) -> int:
    dim, base = _literal(text)
    if dim not in ("time", None) or base < 0 or base.denominator != 1:
        raise ValueError(f"not a time: {text!r}")
    return int(base)


def parse_size(text) -> int:
    dim, base = _literal(text)
    if dim not in ("size", None) or base < 0 or base.denominator != 1:
        raise ValueError(f"not a size: {text!r}")
    return int(base)


def parse_number(text) -> Fraction:
    dim, base = _literal(text)
    if dim is not None:
        raise ValueError(f"not a plain number: {text!r}")
    return base


def validate(tree: ast.Ast, overrides: Optional[dict] = None) -> NetworkModel:
    """Resolve and check a parsed description.

    Raises :class:`AndlValidationError` with positioned diagnostics; a
    malformed override value raises :class:`ValueError`.
    """
    return Validator(tree, overrides).run()
