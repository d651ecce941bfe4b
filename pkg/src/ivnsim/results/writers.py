"""CSV, JSON and classic pcap output.

Nothing written here depends on wall-clock time, so equal runs give
byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import struct
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

from .stats import Collector

CSV_COLUMNS = ["stream", "class", "count", "min_ps", "max_ps", "mean_ps", "jitter_ps", "drops"]

PCAP_MAGIC = 0xA1B2C3D4
PCAP_HEADER = struct.Struct("<IHHiIII")
PCAP_RECORD = struct.Struct("<IIII")
PCAP_SNAPLEN = 65535
LINKTYPE_ETHERNET = 1


def _round(x: Optional[Fraction]):
    return "" if x is None else int(round(x))


def stream_rows(collector: Collector) -> list[list]:
    rows = []
    for key in sorted(collector.streams):
        s = collector.streams[key]
        rows.append([key, s.cls, s.count,
                     "" if s.min is None else s.min,
                     "" if s.max is None else s.max,
                     _round(s.mean), s.jitter, s.drops])
    return rows


def buffer_rows(collector: Collector) -> list[list]:
    return [[key, "buffer", wm.max_frames, "", "", "", "", ""]
            for key, wm in sorted(collector.watermarks.items())]


def csv_text(collector: Collector) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(stream_rows(collector))
    w.writerows(buffer_rows(collector))
    return buf.getvalue()


def json_document(collector: Collector, config_digest: str, metadata: Optional[dict] = None,
                  violations: Iterable = ()) -> dict:
    streams = []
    for key in sorted(collector.streams):
        s = collector.streams[key]
        streams.append({
            "stream": key, "class": s.cls, "count": s.count,
            "min_ps": s.min, "max_ps": s.max, "mean_ps": _round(s.mean) if s.count else None,
            "jitter_ps": s.jitter, "drops": s.drops, "sum_ps": s.sum, "hop_sums_ps": list(s.hop_sums),
        })
    buffers = [{
        "key": key, "node": wm.node, "port": wm.port, "class": wm.cls, "stream": wm.stream,
        "max_frames": wm.max_frames, "max_bytes": wm.max_bytes,
    } for key, wm in sorted(collector.watermarks.items())]
    bursts = [{
        "key": key, "count": b.count, "min_ps": b.min, "max_ps": b.max, "sum_ps": b.sum,
    } for key, b in sorted(collector.bursts.items())]
    return {
        "streams": streams,
        "buffers": buffers,
        "bursts": bursts,
        "drops": dict(sorted(collector.drops.items())),
        "violations": [v.describe() for v in violations],
        "config_digest": config_digest,
        "metadata": metadata or {},
    }


def json_text(collector: Collector, config_digest: str, metadata: Optional[dict] = None,
              violations: Iterable = ()) -> str:
    doc = json_document(collector, config_digest, metadata, violations)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_stats(collector: Collector, fmt: str, path, config_digest: str = "",
                metadata: Optional[dict] = None, violations: Iterable = ()) -> Path:
    path = Path(path)
    if fmt == "csv":
        text = csv_text(collector)
    elif fmt == "json":
        text = json_text(collector, config_digest, metadata, violations)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    path.write_text(text, encoding="utf-8")
    return path


def digest(obj) -> str:
    return hashlib.sha256(repr(obj).encode()).hexdigest()


# -- pcap ------------------------------------------------------------------


def pcap_bytes(records: Iterable[tuple[int, bytes]]) -> bytes:
    """Classic pcap: ``records`` are (SimTime in ps, frame bytes)."""
    out = bytearray(PCAP_HEADER.pack(PCAP_MAGIC, 2, 4, 0, 0, PCAP_SNAPLEN, LINKTYPE_ETHERNET))
    for t, data in records:
        usec = t // 1_000_000
        sec, usec = divmod(usec, 1_000_000)
        cap = data[:PCAP_SNAPLEN]
        out += PCAP_RECORD.pack(sec, usec, len(cap), len(data))
        out += cap
    return bytes(out)


def write_pcap(records: Iterable[tuple[int, bytes]], path) -> Path:
    path = Path(path)
    path.write_bytes(pcap_bytes(records))
    return path


def read_pcap(path_or_bytes) -> tuple[dict, list[tuple[int, int, bytes, int]]]:
    """Return (global header fields, [(ts_sec, ts_usec, data, orig_len)])."""
    if isinstance(path_or_bytes, (bytes, bytearray)):
        raw = bytes(path_or_bytes)
    else:
        raw = Path(path_or_bytes).read_bytes()
    if len(raw) < PCAP_HEADER.size:
        raise ValueError("truncated pcap header")
    magic, major, minor, zone, sigfigs, snaplen, linktype = PCAP_HEADER.unpack_from(raw)
    if magic != PCAP_MAGIC:
        raise ValueError(f"bad magic 0x{magic:08x}")
    header = {"magic": magic, "version": (major, minor), "thiszone": zone,
              "sigfigs": sigfigs, "snaplen": snaplen, "linktype": linktype}
    pos = PCAP_HEADER.size
    records = []
    while pos < len(raw):
        if pos + PCAP_RECORD.size > len(raw):
            raise ValueError("truncated record header")
        sec, usec, incl, orig = PCAP_RECORD.unpack_from(raw, pos)
        pos += PCAP_RECORD.size
        if pos + incl > len(raw):
            raise ValueError("truncated record data")
        records.append((sec, usec, raw[pos:pos + incl], orig))
        pos += incl
    return header, records
