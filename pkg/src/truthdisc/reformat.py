"""Input reshaping for LTM (atomic values) and MLE (Boolean observations)."""

from __future__ import annotations

import logging

from .core import Claim, canonical_value
from .probabilistic import BOOLEAN_TRUE, LIST_DELIMITER

logger = logging.getLogger(__name__)

COMPOSITE_SEP = ":"


def reformat_for_ltm(claims, delimiter: str = LIST_DELIMITER) -> list[Claim]:
    """Split list-valued claims into one claim per element.

    Split claims get ids ``<id>#<k>`` (k from 1); empty elements are dropped,
    and a claim whose list is empty is dropped with a warning. Repeated
    elements within one list collapse to one claim.
    """
    out = []
    for c in claims:
        if delimiter not in c.value:
            if c.value.strip():
                out.append(c)
            else:
                logger.warning("claim %s has an empty value; dropped", c.claim_id)
            continue
        parts = []
        for p in c.value.split(delimiter):
            p = canonical_value(p)
            if p and p not in parts:
                parts.append(p)
        if not parts:
            logger.warning("claim %s has an empty list value; dropped", c.claim_id)
            continue
        for k, p in enumerate(parts, 1):
            out.append(Claim(f"{c.claim_id}#{k}", c.source_id, c.data_item_id, p))
    return out


def is_boolean_claim(c: Claim) -> bool:
    return canonical_value(c.value) == BOOLEAN_TRUE


def composite_item(item: str, value: str) -> str:
    return f"{item}{COMPOSITE_SEP}{value}"


def reformat_for_mle(claims) -> list[Claim]:
    """Turn each (item, value) claim into ``(item:value, True)``.

    Data that is already Boolean (every value ``True``) is returned unchanged.
    """
    claims = list(claims)
    if claims and all(is_boolean_claim(c) for c in claims):
        return claims
    return [Claim(c.claim_id, c.source_id, composite_item(c.data_item_id, c.value), "True")
            for c in claims]


def composite_map(claims) -> dict[str, tuple[str, str]]:
    """composite item id -> (original item, value), built from the original claims."""
    return {composite_item(c.data_item_id, c.value): (c.data_item_id, c.value) for c in claims}


def boolean_groups(claims) -> dict[str, str]:
    """composite item id -> original item, for grouping observations in MLE."""
    return {k: d for k, (d, _) in composite_map(claims).items()}


def selection_from_boolean(selection, cmap) -> dict[str, frozenset[str]]:
    """Map a selection over composite items back to original items and values."""
    out: dict[str, set[str]] = {}
    for d, _ in cmap.values():
        out.setdefault(d, set())
    for comp, vals in selection.items():
        if vals and comp in cmap:
            d, v = cmap[comp]
            out[d].add(v)
    return {d: frozenset(v) for d, v in out.items()}
