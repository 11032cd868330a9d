"""CSV/JSON output of sweep results, with a metadata block, and the reverse parse."""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import io
import json
import os
from pathlib import Path

from .sweep import SweepResult

NULL = "null"
_INT_COLUMNS = {"resampled"}
_TEXT_COLUMNS = {"engine_path"}


def build_id() -> str:
    """SHA-1 over the package sources, so identical code gives an identical id."""
    h = hashlib.sha1()
    root = Path(__file__).parent
    for path in sorted(root.rglob("*.py")):
        h.update(path.relative_to(root).as_posix().encode())
        h.update(b"\0")
        h.update(path.read_bytes())
    return h.hexdigest()


def timestamp() -> str:
    """UTC ISO-8601 time; SOURCE_DATE_EPOCH pins it for reproducible output."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = (dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch
            else dt.datetime.now(dt.timezone.utc))
    return when.replace(microsecond=0).isoformat().replace("+00:00", "Z")


def make_metadata(config: dict, seed: int | None, **extra) -> dict:
    meta = {"config": dict(config), "seed": seed, "build": build_id(), "created": timestamp()}
    meta.update(extra)
    return meta


def format_value(v) -> str:
    if v is None:
        return NULL
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def parse_value(text: str, column: str):
    if text == NULL:
        return None
    if column in _TEXT_COLUMNS:
        return text
    if column in _INT_COLUMNS:
        return int(text)
    return float(text)


def to_csv(result: SweepResult) -> str:
    buf = io.StringIO()
    for key in sorted(result.metadata):
        buf.write(f"# {key}: {json.dumps(result.metadata[key], sort_keys=True)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result.columns)
    for row in result.rows:
        w.writerow([format_value(row.get(c)) for c in result.columns])
    return buf.getvalue()


def to_json(result: SweepResult) -> str:
    doc = {"metadata": result.metadata, "columns": result.columns, "rows": result.rows}
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=True) + "\n"


def from_csv(text: str) -> SweepResult:
    meta, body = {}, []
    for line in text.splitlines(keepends=True):
        if line.startswith("# ") and not body:
            key, _, value = line[2:].rstrip("\n").partition(": ")
            meta[key] = json.loads(value)
        else:
            body.append(line)
    reader = csv.reader(io.StringIO("".join(body)))
    header = next(reader, None)
    if header is None:
        raise ValueError("CSV has no header row")
    rows = [{c: parse_value(v, c) for c, v in zip(header, rec)} for rec in reader if rec]
    return SweepResult(columns=header, rows=rows, metadata=meta)


def from_json(text: str) -> SweepResult:
    doc = json.loads(text)
    return SweepResult(columns=doc["columns"], rows=doc["rows"], metadata=doc["metadata"])


def emit(result: SweepResult, path, fmt: str = "csv") -> Path:
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown output format {fmt!r}")
    text = to_csv(result) if fmt == "csv" else to_json(result)
    path = Path(path)
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path
