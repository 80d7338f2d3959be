"""File formats: claim CSV, ground-truth CSV, scenario config, scenario metadata."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import fields
from pathlib import Path

from .core import Claim, canonical_value
from .errors import EmptyDataset, EmptyGoldStandard, IoError, ParseError
from .generator import GeneratedScenario, ScenarioConfig

logger = logging.getLogger(__name__)

CLAIM_HEADER = ["claim_id", "source_id", "data_item_id", "value"]
TRUTH_HEADER = ["data_item_id", "true_value"]


def _open(path, mode="r"):
    try:
        return open(path, mode, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def _rows(path, header):
    """Yield (line_number, fields) after checking an optional header row."""
    with _open(path) as fh:
        reader = csv.reader(fh)
        try:
            for row in reader:
                if not row or all(not f.strip() for f in row):
                    continue
                if reader.line_num == 1 and [f.strip().lower() for f in row] == header:
                    continue
                yield reader.line_num, row
        except csv.Error as exc:
            raise ParseError(str(exc), reader.line_num) from exc


def load_claims(path) -> list[Claim]:
    """Read ``claim_id,source_id,data_item_id,value`` rows in file order.

    Values are canonicalized (trimmed and case-folded). Duplicate claim ids
    are rejected when the list is indexed.
    """
    claims = []
    for line, row in _rows(path, CLAIM_HEADER):
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line)
        cid, sid, did, value = (f.strip() for f in row)
        if not cid or not sid or not did:
            raise ParseError("empty identifier", line)
        claims.append(Claim(cid, sid, did, canonical_value(value)))
    if not claims:
        raise EmptyDataset(f"{path}: no claims")
    return claims


def load_ground_truth(path, dataset=None) -> dict[str, set[str]]:
    """Read ``data_item_id,true_value`` rows; repeated items give multi-valued truth."""
    truth: dict[str, set[str]] = {}
    for line, row in _rows(path, TRUTH_HEADER):
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, got {len(row)}", line)
        item, value = row[0].strip(), canonical_value(row[1])
        truth.setdefault(item, set()).add(value)
    if not truth:
        raise EmptyGoldStandard(f"{path}: no ground-truth rows")
    if dataset is not None:
        missing = [d for d in truth if d not in dataset.item_index]
        if missing:
            logger.warning("%d ground-truth items do not occur in the dataset", len(missing))
    return truth


def write_claims(path, claims):
    with _open(path, "w") as fh:
        w = csv.writer(fh)
        w.writerow(CLAIM_HEADER)
        for c in claims:
            w.writerow([c.claim_id, c.source_id, c.data_item_id, c.value])


def write_ground_truth(path, truth):
    """``truth`` maps item -> value or item -> iterable of values."""
    with _open(path, "w") as fh:
        w = csv.writer(fh)
        w.writerow(TRUTH_HEADER)
        for item, vals in truth.items():
            for v in ([vals] if isinstance(vals, str) else sorted(vals)):
                w.writerow([item, v])


def _coerce(value: str, typ):
    if typ is int or typ == "int":
        return int(value)
    return value


def load_scenario_config(path, overrides: dict | None = None) -> ScenarioConfig:
    """Flat ``key=value`` file (``#`` comments allowed) mapped onto ScenarioConfig."""
    known = {f.name: f.type for f in fields(ScenarioConfig)}
    values: dict = {}
    with _open(path) as fh:
        for n, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError("expected key=value", n)
            key, val = (p.strip() for p in line.split("=", 1))
            if key not in known:
                raise ParseError(f"unknown key {key!r}", n)
            try:
                values[key] = _coerce(val, known[key])
            except ValueError as exc:
                raise ParseError(f"bad value for {key}: {val!r}", n) from exc
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ScenarioConfig(**values)


def write_scenario(scenario: GeneratedScenario, out_dir, stem: str | None = None) -> dict[str, Path]:
    """Write ``<stem>_claims.csv``, ``<stem>_truth.csv`` and ``<stem>_meta.json``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(str(exc)) from exc
    stem = stem or scenario.config.name
    paths = {
        "claims": out / f"{stem}_claims.csv",
        "truth": out / f"{stem}_truth.csv",
        "meta": out / f"{stem}_meta.json",
    }
    write_claims(paths["claims"], scenario.claims)
    write_ground_truth(paths["truth"], scenario.ground_truth)
    with _open(paths["meta"], "w") as fh:
        json.dump(scenario.metadata, fh, indent=1)
    return paths
