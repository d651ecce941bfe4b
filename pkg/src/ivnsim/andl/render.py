"""Pretty printer: NetworkModel back to description text.

Every value is written explicitly in base units, so parsing and validating
the output reproduces the model.
"""

from __future__ import annotations

from fractions import Fraction

from .model import Mapping, MessageModel, NetworkModel


def _number(x) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    d = x.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    if d != 1:
        raise ValueError(f"{x} has no finite decimal form")
    sign = "-" if x < 0 else ""
    x = abs(x)
    whole = x.numerator // x.denominator
    frac = x - whole
    digits = ""
    while frac:
        frac *= 10
        digits += str(frac.numerator // frac.denominator)
        frac -= frac.numerator // frac.denominator
    return f"{sign}{whole}.{digits}"


def _ps(t: int) -> str:
    return f"{t}ps"


def _mapping(m: Mapping) -> str:
    if m.kind == "can":
        body = f"id {m.ident};"
    elif m.kind == "tt":
        body = f"ctID {m.ident};"
    elif m.kind == "rc":
        body = f"vlID {m.ident}; bag {_ps(m.bag)}; priority {m.priority};"
        if m.max_frame is not None:
            body += f" maxFrameSize {m.max_frame}B;"
        if m.jitter_allowance is not None:
            body += f" jitterAllowance {_ps(m.jitter_allowance)};"
    elif m.kind == "avb":
        body = f"streamID {m.ident}; class {m.sr_class};"
        if m.idle_slope is not None:
            body += f" idleSlope {m.idle_slope}b/s;"
    else:
        body = f"priority {m.priority};"
    return f"{m.segment}: {m.kind}{{{body}}};"


def _message(msg: MessageModel) -> list[str]:
    lines = [f"    message {msg.name} {{",
             f"      sender {msg.sender};",
             f"      receivers {', '.join(msg.receivers)};",
             f"      payload {msg.payload}B;"]
    if msg.period is not None:
        lines.append(f"      period {_ps(msg.period)};")
    if msg.offset:
        lines.append(f"      offset {_ps(msg.offset)};")
    if msg.jitter:
        lines.append(f"      jitter {_ps(msg.jitter)};")
    if msg.burst is not None:
        lines.append(f"      burst {msg.burst}B;")
    if not msg.record:
        lines.append("      record false;")
    if msg.mappings or msg.pools:
        lines.append("      mapping {")
        for m in msg.mappings:
            lines.append(f"        {_mapping(m)}")
        for p in msg.pools:
            lines.append(f"        {p.gateway}: pool {p.pool}{{holdUp {_ps(p.holdup)};}};")
        lines.append("      }")
    lines.append("    }")
    return lines


def render(model: NetworkModel) -> str:
    out = [f"network {model.name} {{"]
    if model.metadata:
        out.append("  inline ini {")
        for k, v in model.metadata:
            out.append(f"    {k} = {v}")
        out.append("  }")
    out.append("  devices {")
    for d in model.devices:
        if d.kind == "canLink":
            out.append(f"    canLink {d.name} {{ bitrate {d.bitrate}b/s; }}")
            continue
        c = d.clock
        params = [f"processingDelay {_ps(d.processing_delay)};"]
        if d.queue_capacity is not None:
            params.append(f"queueCapacity {d.queue_capacity};")
        params += [
            f"driftPpm {_number(c.drift_ppm)};",
            f"randomDrift {'true' if c.random_drift else 'false'};",
            f"tickLength {_ps(c.tick_length)};",
            f"syncInterval {_ps(c.sync_interval)};",
            f"syncPrecision {_ps(c.sync_precision)};",
        ]
        out.append(f"    {d.kind} {d.name} {{ {' '.join(params)} }}")
    out.append("  }")
    out.append("  connections {")
    for seg in model.segments:
        out.append(f"    segment {seg.name} {{")
        for l in seg.links:
            out.append(f"      {l.a} <--> {{bandwidth {l.rate}b/s; delay {_ps(l.delay)};}} <--> {l.b};")
        for dev, bus in seg.attachments:
            out.append(f"      {dev} <--> {bus};")
        out.append("    }")
    out.append("  }")
    out.append("  communication {")
    for msg in model.messages:
        out += _message(msg)
    out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"
