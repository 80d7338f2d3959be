"""CSV report writing and parsing."""

from __future__ import annotations

import csv
from dataclasses import fields

from .errors import IoError, ParseError
from .runner import STATUS_OK, ReportRow

REPORT_HEADER = [
    "dataset", "algorithm", "params", "precision", "precision_std", "precision_ci95",
    "accuracy", "recall", "specificity", "iterations", "time_ms", "mem_mb", "status",
]
FIGURE_HEADER = ["x", "algorithm", "precision"]
UNDEFINED = "undefined"
_METRICS = REPORT_HEADER[3:12]


def fmt(x) -> str:
    return format(float(x), ".6g")


def _cell(row: ReportRow, name: str) -> str:
    v = getattr(row, name)
    if name in _METRICS:
        if row.status != STATUS_OK:
            return ""
        return UNDEFINED if v is None else fmt(v)
    return str(v)


def emit_report(rows, path) -> None:
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to report")
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(REPORT_HEADER)
            for r in rows:
                w.writerow([_cell(r, h) for h in REPORT_HEADER])
    except OSError as exc:
        raise IoError(f"cannot write report {path}: {exc}") from exc


def parse_report(path) -> list[ReportRow]:
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != REPORT_HEADER:
            raise ParseError("unexpected report header", 1)
        out = []
        for row in reader:
            if len(row) != len(REPORT_HEADER):
                raise ParseError("wrong field count", reader.line_num)
            kw = {}
            for name, val in zip(REPORT_HEADER, row):
                if name in _METRICS:
                    kw[name] = None if val in ("", UNDEFINED) else float(val)
                else:
                    kw[name] = val
            out.append(ReportRow(**kw))
        return out


def rounded(row: ReportRow) -> ReportRow:
    """The row as it reads back after a round trip through the CSV."""
    kw = {}
    for f in fields(ReportRow):
        v = getattr(row, f.name)
        if f.name in _METRICS:
            kw[f.name] = None if (v is None or row.status != STATUS_OK) else float(fmt(v))
        else:
            kw[f.name] = v
    return ReportRow(**kw)


def emit_figure_long(points, path) -> None:
    """``points`` are (x, algorithm, precision) triples, one output row each."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(FIGURE_HEADER)
            for x, alg, p in points:
                w.writerow([x, alg, UNDEFINED if p is None else fmt(p)])
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
