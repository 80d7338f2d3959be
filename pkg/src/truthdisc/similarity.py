"""Value-similarity kernels used by TruthFinder and AccuSim."""

from __future__ import annotations

import math
from typing import Callable

from rapidfuzz.distance import Levenshtein

Similarity = Callable[[str, str], float]


def exact_match(a: str, b: str) -> float:
    return 1.0 if a == b else 0.0


def levenshtein(a: str, b: str) -> float:
    """1 - normalized edit distance."""
    return Levenshtein.normalized_similarity(a, b)


def numeric(scale: float = 1.0) -> Similarity:
    """exp(-|a-b|/scale) for numeric strings; non-numeric pairs fall back to exact match."""

    def sim(a: str, b: str) -> float:
        try:
            return math.exp(-abs(float(a) - float(b)) / scale)
        except ValueError:
            return exact_match(a, b)

    return sim


SIMILARITIES: dict[str, Similarity] = {
    "exact": exact_match,
    "levenshtein": levenshtein,
    "numeric": numeric(),
}


def resolve(sim) -> Similarity:
    if sim is None:
        return exact_match
    if isinstance(sim, str):
        try:
            return SIMILARITIES[sim]
        except KeyError:
            raise ValueError(f"unknown similarity {sim!r}") from None
    return sim


def similarity_matrix_blocks(dataset, sim):
    """Per item, the |V_d| x |V_d| similarity matrix with a zero diagonal.

    Returns ``None`` when ``sim`` is exact match, where every off-diagonal
    entry is zero by construction (values within an item are distinct).
    """
    import numpy as np

    sim = resolve(sim)
    if sim is exact_match:
        return None
    blocks = []
    for d in range(dataset.n_items):
        a, b = dataset.item_start[d], dataset.item_stop[d]
        vals = dataset.value_strs[a:b]
        m = np.array([[0.0 if i == j else sim(vi, vj) for j, vj in enumerate(vals)]
                      for i, vi in enumerate(vals)])
        blocks.append(m)
    return blocks


def add_similarity_support(dataset, base, blocks, weight):
    """``base[v] + weight * sum_{v' != v in V_d} base[v'] * sim(v, v')``."""
    if blocks is None or weight == 0.0:
        return base
    out = base.copy()
    for d, m in enumerate(blocks):
        a, b = dataset.item_start[d], dataset.item_stop[d]
        out[a:b] = base[a:b] + weight * (m @ base[a:b])
    return out
