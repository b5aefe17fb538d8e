"""File formats: record streams with schema headers, flat key=value configs,
anomaly reports, and reference anomaly label files. All files are UTF-8 with
LF line endings and deterministic for a given input."""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

from .detect import AnomalyEvent
from .domain import CategoryPath, HierarchySchema, Record, UnknownSegment


class StreamFormatError(ValueError):
    """A stream, report, labels, or config file is malformed."""


def format_ts(ts: int) -> str:
    return datetime.fromtimestamp(int(ts), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_ts(text: str) -> int:
    try:
        dt = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise StreamFormatError(f"bad timestamp {text!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


# ------------------------------------------------------------------- streams


def write_stream(
    path: str | Path,
    leaf_paths: Sequence[str],
    records: Iterable[tuple[int, str]],
) -> None:
    """Write a stream file: one ``#path`` header line per leaf, then records."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in leaf_paths:
            fh.write(f"#path\t{p}\n")
        for ts, p in records:
            fh.write(f"{format_ts(ts)}\t{p}\n")


def read_stream(path: str | Path) -> tuple[HierarchySchema, list[Record]]:
    """Parse a stream file into its declared schema and record list.

    Every body record must name a declared leaf; unknown or interior
    categories are format errors.
    """
    leaf_paths: list[CategoryPath] = []
    body: list[tuple[int, str]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition("\t")
                if key != "path" or not value:
                    raise StreamFormatError(f"{path}:{lineno}: bad header line")
                leaf_paths.append(CategoryPath.parse(value))
                continue
            ts_text, _, cat = line.partition("\t")
            if not cat:
                raise StreamFormatError(f"{path}:{lineno}: expected timestamp<TAB>path")
            body.append((parse_ts(ts_text), cat))
    if not leaf_paths:
        raise StreamFormatError(f"{path}: no #path header lines")
    try:
        schema = HierarchySchema(leaf_paths)
    except ValueError as exc:
        raise StreamFormatError(f"{path}: {exc}") from exc
    records = []
    for ts, cat in body:
        category = CategoryPath.parse(cat)
        try:
            node = schema.resolve(category)
        except UnknownSegment as exc:
            raise StreamFormatError(f"{path}: record category {cat!r}: {exc}") from exc
        if not schema.is_leaf(node):
            raise StreamFormatError(f"{path}: record category {cat!r} is not a leaf")
        records.append(Record(category, ts))
    return schema, records


# -------------------------------------------------------------------- config


def read_kv_file(path: str | Path) -> list[tuple[str, str]]:
    """Parse ``key = value`` lines, preserving order and repeated keys."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise StreamFormatError(f"{path}:{lineno}: expected key = value")
            pairs.append((key.strip(), value.strip()))
    return pairs


def read_config_mapping(path: str | Path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for key, value in read_kv_file(path):
        if key in mapping:
            raise StreamFormatError(f"{path}: duplicate config key {key!r}")
        mapping[key] = value
    return mapping


# ------------------------------------------------------------------- reports

_REPORT_FIELDS = ("unit_start", "path", "actual", "forecast", "ratio", "diff")


def write_report(path: str | Path, events: Sequence[AnomalyEvent]) -> None:
    """Write one TAB-separated key:value record per event, sorted by (unit, path)."""
    ordered = sorted(events, key=lambda e: e.key)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for e in ordered:
            fh.write(
                "unit_start:{}\tpath:{}\tactual:{:.6f}\tforecast:{:.6f}"
                "\tratio:{:.6f}\tdiff:{:.6f}\n".format(
                    format_ts(e.unit_start), e.path, e.actual, e.forecast, e.ratio, e.diff
                )
            )


def read_report(path: str | Path) -> list[AnomalyEvent]:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = {}
            for part in line.split("\t"):
                key, colon, value = part.partition(":")
                if not colon:
                    raise StreamFormatError(f"{path}:{lineno}: bad field {part!r}")
                fields[key] = value
            missing = [k for k in _REPORT_FIELDS if k not in fields]
            if missing:
                raise StreamFormatError(f"{path}:{lineno}: missing fields {missing}")
            events.append(
                AnomalyEvent(
                    path=fields["path"],
                    unit_start=parse_ts(fields["unit_start"]),
                    actual=float(fields["actual"]),
                    forecast=float(fields["forecast"]),
                    ratio=float(fields["ratio"]),
                    diff=float(fields["diff"]),
                )
            )
    return events


# -------------------------------------------- reference anomalies / labels


def write_labels(path: str | Path, labels: Iterable[tuple[int, str]]) -> None:
    """One ``unit_start<TAB>category_path`` line per labeled anomaly."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ts, p in sorted(set(labels)):
            fh.write(f"{format_ts(ts)}\t{p}\n")


def read_labels(path: str | Path) -> list[tuple[int, str]]:
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            ts_text, _, p = line.partition("\t")
            if not p:
                raise StreamFormatError(f"{path}:{lineno}: expected timestamp<TAB>path")
            labels.append((parse_ts(ts_text), p))
    return labels
