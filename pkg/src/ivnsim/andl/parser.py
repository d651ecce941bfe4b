"""Recursive-descent parser for the network description language.

Supported subset::

    file        := types* network types*
    types       := 'types' NAME '{' typedef* '}'
    typedef     := KIND NAME ['extends' QNAME] '{' body '}'
    network     := 'network' NAME '{' section* '}'
    section     := 'inline' 'ini' '{' RAW '}'
                 | 'devices' '{' (KIND NAME (';' | '{' body '}'))* '}'
                 | 'connections' '{' ('segment' NAME '{' conn* '}')* '}'
                 | 'communication' '{' message* '}'
    conn        := NAME '<-->' ['{' body '}' '<-->'] NAME ';'
    message     := 'message' NAME '{' (param | 'mapping' '{' entry* '}')* '}'
    entry       := NAME ':' (CLASS | 'pool' NAME) '{' param* '}'
    body        := ['new' QNAME [';']] param*
    param       := NAME value (',' value)* ';'

Optional ``;`` after closing braces is accepted.
"""

from __future__ import annotations

from typing import Optional

from . import ast
from .errors import AndlSyntaxError, Diagnostic
from .lexer import Lexer, Token, quantity

DEVICE_KINDS = ("canLink", "node", "gateway", "switch")
TYPE_KINDS = DEVICE_KINDS + ("ethernetLink",)
MAPPING_KINDS = ("can", "tt", "rc", "avb", "be")


class Parser:
    def __init__(self, text: str):
        self.lex = Lexer(text)
        self.tok: Token = self.lex.next()

    # -- token helpers ----------------------------------------------------

    def error(self, message: str, tok: Optional[Token] = None) -> AndlSyntaxError:
        tok = tok or self.tok
        return AndlSyntaxError([Diagnostic(tok.line, tok.col, message)])

    def advance(self) -> Token:
        tok = self.tok
        self.tok = self.lex.next()
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind in ("punct", "ident") and self.tok.text == text

    def accept(self, text: str) -> Optional[Token]:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected '{text}', found '{found}'")
        return self.advance()

    def name(self, what: str = "identifier") -> Token:
        if self.tok.kind != "ident":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {what}, found '{found}'")
        return self.advance()

    def qualified(self) -> str:
        parts = [self.name("type name").text]
        while self.accept("."):
            parts.append(self.name("type name").text)
        return ".".join(parts)

    # -- grammar ----------------------------------------------------------

    def parse(self) -> ast.Ast:
        types: list[ast.TypesBlock] = []
        network = None
        while self.tok.kind != "eof":
            if self.at("types"):
                types.append(self.types_block())
            elif self.at("network"):
                if network is not None:
                    raise self.error("only one network per file is supported")
                network = self.network()
            else:
                raise self.error(f"expected 'types' or 'network', found '{self.tok.text}'")
        if network is None:
            raise self.error("no network definition found")
        tree = ast.Ast(types, network)
        check_duplicates(tree)
        return tree

    def types_block(self) -> ast.TypesBlock:
        start = self.expect("types")
        name = self.name("types block name").text
        self.expect("{")
        defs = []
        while not self.at("}"):
            kind_tok = self.name("type kind")
            if kind_tok.text not in TYPE_KINDS:
                raise self.error(f"unsupported type kind '{kind_tok.text}'", kind_tok)
            type_name = self.name("type name").text
            base = self.qualified() if self.accept("extends") else None
            self.expect("{")
            new_base, params = self.body()
            self.expect("}")
            self.accept(";")
            defs.append(ast.TypeDef(kind_tok.text, type_name, base or new_base, params, kind_tok.pos))
        self.expect("}")
        self.accept(";")
        return ast.TypesBlock(name, defs, start.pos)

    def body(self) -> tuple[Optional[str], list[ast.Param]]:
        base = None
        if self.accept("new"):
            base = self.qualified()
            self.accept(";")
        params = []
        while not self.at("}"):
            params.append(self.param())
        return base, params

    def param(self) -> ast.Param:
        tok = self.name("parameter name")
        values = [self.value()]
        while self.accept(","):
            values.append(self.value())
        self.expect(";")
        return ast.Param(tok.text, values, tok.pos)

    def value(self) -> ast.Value:
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            dim, base = quantity(tok.value, tok.unit)
            return ast.Quantity(tok.value, tok.unit, dim, base, tok.pos)
        if tok.kind == "ident":
            self.advance()
            text = tok.text
            while self.at("."):
                self.advance()
                text += "." + self.name().text
            return ast.Name(text, tok.pos)
        if tok.kind == "string":
            self.advance()
            return ast.Text(tok.text, tok.pos)
        raise self.error(f"expected a value, found '{tok.text or 'end of input'}'")

    def network(self) -> ast.Network:
        start = self.expect("network")
        net = ast.Network(self.name("network name").text, pos=start.pos)
        self.expect("{")
        while not self.at("}"):
            if self.at("inline"):
                self.inline(net)
            elif self.at("devices"):
                self.devices(net)
            elif self.at("connections"):
                self.connections(net)
            elif self.at("communication"):
                self.communication(net)
            else:
                raise self.error(f"unsupported network section '{self.tok.text or 'end of input'}'")
        self.expect("}")
        self.accept(";")
        return net

    def inline(self, net: ast.Network) -> None:
        self.expect("inline")
        kind = self.name("inline kind")
        if kind.text != "ini":
            raise self.error(f"unsupported inline kind '{kind.text}'", kind)
        if not self.at("{"):
            raise self.error("expected '{'")
        raw, line = self.lex.raw_block()
        self.tok = self.lex.next()
        self.expect("}")
        self.accept(";")
        for i, text in enumerate(raw.split("\n")):
            stripped = text.split("#", 1)[0].strip()
            if "//" in stripped:
                stripped = stripped.split("//", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise AndlSyntaxError([Diagnostic(line + i, 1, f"inline ini line without '=': {stripped!r}")])
            key, value = stripped.split("=", 1)
            net.inline.append(ast.InlineEntry(key.strip(), value.strip(), (line + i, 1)))

    def devices(self, net: ast.Network) -> None:
        self.expect("devices")
        self.expect("{")
        while not self.at("}"):
            kind = self.name("device kind")
            if kind.text not in DEVICE_KINDS:
                raise self.error(f"unsupported device kind '{kind.text}'", kind)
            name = self.name("device name")
            decl = ast.DeviceDecl(kind.text, name.text, pos=name.pos)
            if self.accept("{"):
                decl.base, decl.params = self.body()
                self.expect("}")
                self.accept(";")
            else:
                self.expect(";")
            net.devices.append(decl)
        self.expect("}")
        self.accept(";")

    def connections(self, net: ast.Network) -> None:
        self.expect("connections")
        self.expect("{")
        while not self.at("}"):
            start = self.expect("segment")
            seg = ast.Segment(self.name("segment name").text, [], start.pos)
            self.expect("{")
            while not self.at("}"):
                a = self.name("device name")
                self.expect("<-->")
                link = None
                if self.at("{"):
                    brace = self.advance()
                    base, params = self.body()
                    self.expect("}")
                    self.expect("<-->")
                    link = ast.LinkSpec(base, params, brace.pos)
                b = self.name("device name")
                self.expect(";")
                seg.connections.append(ast.Connection(a.text, b.text, link, a.pos, a.pos, b.pos))
            self.expect("}")
            self.accept(";")
            net.segments.append(seg)
        self.expect("}")
        self.accept(";")

    def communication(self, net: ast.Network) -> None:
        self.expect("communication")
        self.expect("{")
        while not self.at("}"):
            start = self.expect("message")
            msg = ast.Message(self.name("message name").text, [], [], start.pos)
            self.expect("{")
            while not self.at("}"):
                if self.at("mapping"):
                    self.advance()
                    self.expect("{")
                    while not self.at("}"):
                        msg.mappings.append(self.mapping_entry())
                    self.expect("}")
                    self.accept(";")
                else:
                    msg.params.append(self.param())
            self.expect("}")
            self.accept(";")
            net.messages.append(msg)
        self.expect("}")
        self.accept(";")

    def mapping_entry(self) -> ast.MappingEntry:
        target = self.name("segment or gateway name")
        self.expect(":")
        kind = self.name("traffic class")
        pool = None
        if kind.text == "pool":
            pool = self.name("pool name").text
        elif kind.text not in MAPPING_KINDS:
            raise self.error(f"unsupported traffic class '{kind.text}'", kind)
        self.expect("{")
        params = []
        while not self.at("}"):
            params.append(self.param())
        self.expect("}")
        self.accept(";")
        return ast.MappingEntry(target.text, kind.text, params, pool, target.pos)


def _dup(seen: dict, name: str, pos, what: str, diags: list) -> None:
    if name in seen:
        first = seen[name]
        diags.append(Diagnostic(pos[0], pos[1],
                                f"duplicate {what} '{name}' (first defined at line {first[0]})"))
    else:
        seen[name] = pos


def check_duplicates(tree: ast.Ast) -> None:
    diags: list[Diagnostic] = []
    blocks: dict = {}
    for block in tree.types:
        _dup(blocks, block.name, block.pos, "types block", diags)
        defs: dict = {}
        for td in block.defs:
            _dup(defs, td.name, td.pos, "type", diags)
    net = tree.network
    devices: dict = {}
    for d in net.devices:
        _dup(devices, d.name, d.pos, "device", diags)
    segments: dict = {}
    for s in net.segments:
        _dup(segments, s.name, s.pos, "segment", diags)
    messages: dict = {}
    for m in net.messages:
        _dup(messages, m.name, m.pos, "message", diags)
        targets: dict = {}
        for entry in m.mappings:
            _dup(targets, entry.target, entry.pos, f"mapping target in message {m.name}", diags)
    bodies = [td.params for b in tree.types for td in b.defs]
    bodies += [d.params for d in net.devices]
    bodies += [c.link.params for s in net.segments for c in s.connections if c.link]
    bodies += [m.params for m in net.messages]
    bodies += [e.params for m in net.messages for e in m.mappings]
    for params in bodies:
        seen: dict = {}
        for p in params:
            _dup(seen, p.name, p.pos, "parameter", diags)
    if diags:
        raise AndlSyntaxError(diags)


def parse(text: str) -> ast.Ast:
    """Parse description text; raises :class:`AndlSyntaxError` on failure."""
    return Parser(text).parse()
