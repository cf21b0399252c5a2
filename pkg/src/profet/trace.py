"""Profiler trace ingestion.

Traces arrive either as JSON-lines (``{"op": ..., "latency_us": ..., "detail": ...}``)
or as CSV with the header ``op,latency_us,detail``. Records are parsed into
:class:`RawTraceRecord`, optionally scrubbed of their ``detail`` field, and
summed per operation name into an :class:`OpLatencyMap`.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from .exceptions import TraceParseError, ValidationError

CSV_HEADER = ["op", "latency_us", "detail"]
FORMATS = ("jsonl", "csv")


@dataclass(frozen=True)
class RawTraceRecord:
    op_name: str
    latency: float
    op_detail: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.op_name, str) or not self.op_name:
            raise ValidationError("op_name must be a non-empty string")
        lat = self.latency
        if isinstance(lat, bool) or not isinstance(lat, (int, float)):
            raise ValidationError(f"latency must be a number, got {lat!r}")
        if not math.isfinite(lat) or lat < 0:
            raise ValidationError(f"latency must be finite and >= 0, got {lat!r}")
        object.__setattr__(self, "latency", float(lat))


@dataclass(frozen=True)
class TraceDocument:
    records: tuple = ()
    meta: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def __len__(self):
        return len(self.records)


def _record(line_no, op, latency, detail):
    try:
        return RawTraceRecord(op_name=op, latency=latency, op_detail=detail)
    except ValidationError as exc:
        raise TraceParseError(line_no, str(exc)) from None


def _parse_jsonl(text):
    records = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceParseError(line_no, f"invalid JSON: {exc.msg}") from None
        if not isinstance(obj, dict):
            raise TraceParseError(line_no, "expected a JSON object")
        if "op" not in obj or "latency_us" not in obj:
            raise TraceParseError(line_no, "missing 'op' or 'latency_us'")
        detail = obj.get("detail")
        if detail is not None and not isinstance(detail, str):
            raise TraceParseError(line_no, "'detail' must be a string")
        records.append(_record(line_no, obj["op"], obj["latency_us"], detail))
    return records


def _parse_csv(text):
    rows = csv.reader(io.StringIO(text, newline=""))
    records = []
    header = None
    for row in rows:
        line_no = rows.line_num
        if header is None:
            if not row:
                continue
            header = [h.strip() for h in row]
            if header[:2] != CSV_HEADER[:2] or len(header) not in (2, 3) or (
                len(header) == 3 and header[2] != "detail"
            ):
                raise TraceParseError(line_no, f"bad header {row!r}")
            continue
        if not row:
            continue
        if len(row) != len(header):
            raise TraceParseError(
                line_no, f"expected {len(header)} columns, got {len(row)}"
            )
        try:
            latency = float(row[1])
        except ValueError:
            raise TraceParseError(line_no, f"bad latency {row[1]!r}") from None
        detail = row[2] if len(row) == 3 and row[2] != "" else None
        records.append(_record(line_no, row[0], latency, detail))
    return records


def parse_trace(raw, format="jsonl", meta=None):
    """Parse a complete trace file body into a :class:`TraceDocument`.

    Parameters
    ----------
    raw : bytes or str
        File contents, UTF-8.
    format : {"jsonl", "csv"}

    Raises
    ------
    TraceParseError
        On a malformed row, an invalid latency or a bad header; the error
        carries the 1-based line number.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown trace format {format!r}")
    text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
    if format == "jsonl":
        records = _parse_jsonl(text)
    else:
        records = _parse_csv(text)
    return TraceDocument(records=records, meta=dict(meta or {}))


def serialize_trace(doc, format="jsonl"):
    """Inverse of :func:`parse_trace`; returns UTF-8 bytes."""
    if format == "jsonl":
        lines = []
        for r in doc.records:
            obj = {"op": r.op_name, "latency_us": r.latency}
            if r.op_detail is not None:
                obj["detail"] = r.op_detail
            lines.append(json.dumps(obj))
        return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    if format == "csv":
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(CSV_HEADER)
        for r in doc.records:
            writer.writerow([r.op_name, repr(r.latency), r.op_detail or ""])
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown trace format {format!r}")


def scrub(doc):
    """Drop every ``op_detail`` so no layer names or tensor shapes survive."""
    records = [
        r if r.op_detail is None else replace(r, op_detail=None) for r in doc.records
    ]
    return TraceDocument(records=records, meta=doc.meta)


def aggregate(doc):
    """Sum latencies per operation name.

    Summation is done per key in sorted key order, record order preserved
    within a key, so the result does not depend on how names interleave.
    """
    groups = {}
    for r in doc.records:
        groups.setdefault(r.op_name, []).append(r.latency)
    return {name: math.fsum(groups[name]) for name in sorted(groups)}


def check_op_map(op_map):
    """Validate an op-name -> latency mapping, returning a plain float dict."""
    out = {}
    for name, value in op_map.items():
        if not isinstance(name, str) or not name:
            raise ValidationError(f"op name must be a non-empty string, got {name!r}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"latency for {name!r} must be a number")
        value = float(value)
        if not math.isfinite(value) or value < 0:
            raise ValidationError(f"latency for {name!r} must be finite and >= 0")
        out[name] = value
    return out


def load_op_map(raw, format="jsonl"):
    """Parse, scrub and aggregate a trace body in one step."""
    return aggregate(scrub(parse_trace(raw, format)))
