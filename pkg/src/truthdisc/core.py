"""Claim model, dataset indexing, truth selection, metrics and the shared
convergence test.

Every algorithm works on an :class:`IndexedDataset`, which lays the claims out
as integer arrays:

* sources are sorted lexically, so source index order is the lexical order;
* items keep their first-appearance order;
* candidate values are numbered item by item, so the values of one item occupy
  a contiguous slice ``item_start[d]:item_stop[d]``.

Aggregations over supporter sets, disputer sets and covered values are
expressed with ``np.bincount`` over the (source, value) and (source, item)
incidence lists, which keeps every iteration linear in the number of claims.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DuplicateClaim, EmptyDataset, EmptyGoldStandard, ZeroNorm

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 0.001
MAX_ITERATIONS = 500
MIN_ITERATIONS = 2


def canonical_value(value) -> str:
    """Trim and case-fold a claimed value."""
    return str(value).strip().casefold()


@dataclass(frozen=True)
class Claim:
    claim_id: str
    source_id: str
    data_item_id: str
    value: str


class IndexedDataset:
    """Immutable claim collection with precomputed notation views.

    Build it with :func:`index_dataset`.
    """

    def __init__(self, claims: tuple[Claim, ...]):
        self.claims = claims

        sources = sorted({c.source_id for c in claims})
        self.source_ids: tuple[str, ...] = tuple(sources)
        self.source_index = {s: i for i, s in enumerate(sources)}

        item_order: dict[str, int] = {}
        item_values: list[dict[str, None]] = []
        for c in claims:
            d = item_order.get(c.data_item_id)
            if d is None:
                d = item_order[c.data_item_id] = len(item_values)
                item_values.append({})
            item_values[d].setdefault(c.value, None)
        self.item_ids: tuple[str, ...] = tuple(item_order)
        self.item_index = item_order

        value_strs: list[str] = []
        value_item: list[int] = []
        start = np.zeros(len(item_values), dtype=np.int64)
        stop = np.zeros(len(item_values), dtype=np.int64)
        value_index: dict[tuple[int, str], int] = {}
        for d, vals in enumerate(item_values):
            start[d] = len(value_strs)
            for v in vals:
                value_index[(d, v)] = len(value_strs)
                value_strs.append(v)
                value_item.append(d)
            stop[d] = len(value_strs)
        self.value_strs: tuple[str, ...] = tuple(value_strs)
        self.value_index = value_index
        self.value_item = np.asarray(value_item, dtype=np.int64)
        self.item_start = start
        self.item_stop = stop

        sv = set()
        cov = set()
        for c in claims:
            s = self.source_index[c.source_id]
            d = item_order[c.data_item_id]
            sv.add((value_index[(d, c.value)], s))
            cov.add((d, s))
        # sorted by value then source: supporters of one value are contiguous
        # and lexically ordered
        sv_sorted = np.array(sorted(sv), dtype=np.int64).reshape(-1, 2)
        cov_sorted = np.array(sorted(cov), dtype=np.int64).reshape(-1, 2)
        self.sv_value = np.ascontiguousarray(sv_sorted[:, 0])
        self.sv_source = np.ascontiguousarray(sv_sorted[:, 1])
        self.cov_item = np.ascontiguousarray(cov_sorted[:, 0])
        self.cov_source = np.ascontiguousarray(cov_sorted[:, 1])

        n_s, n_d, n_v = self.n_sources, self.n_items, self.n_values
        self.value_support = np.bincount(self.sv_value, minlength=n_v)  # |S_v|
        self.sv_start = np.concatenate(([0], np.cumsum(self.value_support)))
        self.item_cover = np.bincount(self.cov_item, minlength=n_d)  # |S_d|
        self.item_nvalues = stop - start  # |V_d|
        self.source_nvalues = np.bincount(self.sv_source, minlength=n_s)  # |V_s|
        self.source_nitems = np.bincount(self.cov_source, minlength=n_s)  # |D_s|
        self.source_ncovered = np.bincount(  # |V_{D_s}|
            self.cov_source, weights=self.item_nvalues[self.cov_item], minlength=n_s
        ).astype(np.int64)
        self.value_dispute = self.item_cover[self.value_item] - self.value_support

        for arr in (
            self.value_item, self.item_start, self.item_stop, self.sv_value,
            self.sv_source, self.cov_item, self.cov_source, self.value_support,
            self.sv_start, self.item_cover, self.item_nvalues, self.source_nvalues,
            self.source_nitems, self.source_ncovered, self.value_dispute,
        ):
            arr.flags.writeable = False

    # sizes -----------------------------------------------------------------
    @property
    def n_sources(self) -> int:
        return len(self.source_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def n_values(self) -> int:
        return len(self.value_strs)

    def __len__(self):
        return len(self.claims)

    def __eq__(self, other):
        if not isinstance(other, IndexedDataset):
            return NotImplemented
        return self.claims == other.claims

    def __hash__(self):
        return hash(self.claims)

    def __repr__(self):
        return (
            f"IndexedDataset(claims={len(self.claims)}, sources={self.n_sources}, "
            f"items={self.n_items}, values={self.n_values})"
        )

    # vectorised aggregations -----------------------------------------------
    def sum_over_supporters(self, x_source: np.ndarray) -> np.ndarray:
        """Per value v: sum of ``x_source[s]`` over s in S_v."""
        return np.bincount(self.sv_value, weights=x_source[self.sv_source], minlength=self.n_values)

    def sum_over_item_sources(self, x_source: np.ndarray) -> np.ndarray:
        """Per item d: sum of ``x_source[s]`` over every source claiming d."""
        return np.bincount(self.cov_item, weights=x_source[self.cov_source], minlength=self.n_items)

    def sum_over_disputers(self, x_source: np.ndarray, supporters=None) -> np.ndarray:
        """Per value v: sum over S_v-bar (sources claiming v's item but not v)."""
        if supporters is None:
            supporters = self.sum_over_supporters(x_source)
        return self.sum_over_item_sources(x_source)[self.value_item] - supporters

    def sum_over_item_values(self, y_value: np.ndarray) -> np.ndarray:
        """Per item d: sum of ``y_value`` over V_d."""
        return np.bincount(self.value_item, weights=y_value, minlength=self.n_items)

    def sum_over_source_values(self, y_value: np.ndarray) -> np.ndarray:
        """Per source s: sum of ``y_value`` over V_s."""
        return np.bincount(self.sv_source, weights=y_value[self.sv_value], minlength=self.n_sources)

    def sum_over_covered_values(self, y_value: np.ndarray) -> np.ndarray:
        """Per source s: sum of ``y_value`` over V_{D_s}."""
        per_item = self.sum_over_item_values(y_value)
        return np.bincount(self.cov_source, weights=per_item[self.cov_item], minlength=self.n_sources)

    # readable views of the notation ---------------------------------------
    def _value(self, item, value) -> int:
        return self.value_index[(self.item_index[item], canonical_value(value))]

    def values_of_item(self, item) -> list[str]:
        d = self.item_index[item]
        return list(self.value_strs[self.item_start[d]:self.item_stop[d]])

    def supporters(self, item, value) -> frozenset[str]:
        v = self._value(item, value)
        idx = self.sv_source[self.sv_start[v]:self.sv_start[v + 1]]
        return frozenset(self.source_ids[i] for i in idx)

    def item_sources(self, item) -> frozenset[str]:
        d = self.item_index[item]
        return frozenset(self.source_ids[i] for i in self.cov_source[self.cov_item == d])

    def disputers(self, item, value) -> frozenset[str]:
        return self.item_sources(item) - self.supporters(item, value)

    def items_of_source(self, source) -> frozenset[str]:
        s = self.source_index[source]
        return frozenset(self.item_ids[d] for d in self.cov_item[self.cov_source == s])

    def values_of_source(self, source) -> frozenset[tuple[str, str]]:
        s = self.source_index[source]
        return frozenset(
            (self.item_ids[self.value_item[v]], self.value_strs[v])
            for v in self.sv_value[self.sv_source == s]
        )

    def covered_values_of_source(self, source) -> frozenset[tuple[str, str]]:
        return frozenset(
            (item, v) for item in self.items_of_source(source) for v in self.values_of_item(item)
        )

    def value_key(self, v: int) -> tuple[str, str]:
        return self.item_ids[self.value_item[v]], self.value_strs[v]


def index_dataset(claims: Iterable[Claim]) -> IndexedDataset:
    """Canonicalise values and build the indexed views of a claim list."""
    out = []
    seen = set()
    for c in claims:
        if c.claim_id in seen:
            raise DuplicateClaim(f"duplicate claim id {c.claim_id!r}")
        seen.add(c.claim_id)
        value = canonical_value(c.value)
        out.append(c if value == c.value else Claim(c.claim_id, c.source_id, c.data_item_id, value))
    if not out:
        raise EmptyDataset("no claims")
    return IndexedDataset(tuple(out))


@dataclass
class TrustState:
    """Source trust and value confidence arrays, aligned with a dataset."""

    source_trust: np.ndarray
    value_confidence: np.ndarray
    iteration: int = 0

    def trust_map(self, dataset: IndexedDataset) -> dict[str, float]:
        return dict(zip(dataset.source_ids, self.source_trust.tolist()))

    def confidence_map(self, dataset: IndexedDataset) -> dict[tuple[str, str], float]:
        return {dataset.value_key(v): c for v, c in enumerate(self.value_confidence.tolist())}

    def identical(self, other: "TrustState") -> bool:
        """Bitwise equality of both arrays and the iteration count."""
        return (
            self.iteration == other.iteration
            and np.array_equal(self.source_trust, other.source_trust)
            and np.array_equal(self.value_confidence, other.value_confidence)
        )


@dataclass
class TruthResult:
    """What every algorithm returns."""

    state: TrustState
    selection: dict[str, frozenset[str]]
    converged: bool = True
    extra: dict = field(default_factory=dict)

    @property
    def iterations(self) -> int:
        return self.state.iteration


def argmax_mask(dataset: IndexedDataset, scores: np.ndarray) -> np.ndarray:
    """Boolean mask of the best value per item; ties go to the smallest string."""
    scores = np.asarray(scores, dtype=float)
    best = np.maximum.reduceat(scores, dataset.item_start)
    mask = scores == best[dataset.value_item]
    n_best = np.bincount(dataset.value_item, weights=mask, minlength=dataset.n_items)
    strs = dataset.value_strs
    for d in np.flatnonzero(n_best > 1):
        a, b = dataset.item_start[d], dataset.item_stop[d]
        cands = a + np.flatnonzero(mask[a:b])
        keep = min(cands, key=lambda k: strs[k])
        mask[a:b] = False
        mask[keep] = True
    return mask


def threshold_mask(scores: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return scores > threshold


def mask_to_selection(dataset: IndexedDataset, mask: np.ndarray) -> dict[str, frozenset[str]]:
    picked: dict[str, set[str]] = {d: set() for d in dataset.item_ids}
    for v in np.flatnonzero(mask):
        picked[dataset.item_ids[dataset.value_item[v]]].add(dataset.value_strs[v])
    return {d: frozenset(vals) for d, vals in picked.items()}


def select_true_values(
    state: TrustState, dataset: IndexedDataset, mode: str = "argmax", threshold: float = 0.5
) -> dict[str, frozenset[str]]:
    """Pick true values per item.

    ``mode="argmax"`` returns exactly one value per item; ``mode="threshold"``
    returns every value whose confidence exceeds ``threshold`` (possibly none).
    """
    conf = np.asarray(state.value_confidence, dtype=float)
    if mode == "argmax":
        mask = argmax_mask(dataset, conf)
    elif mode == "threshold":
        mask = threshold_mask(conf, threshold)
    else:
        raise ValueError(f"unknown selection mode {mode!r}")
    return mask_to_selection(dataset, mask)


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


@dataclass
class MetricsReport:
    """Confusion counts and the four ratios; ``None`` marks an undefined ratio."""

    tp: int
    fp: int
    fn: int
    tn: int
    iterations: int = 0
    wall_time_ms: float = 0.0

    @property
    def precision(self):
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def accuracy(self):
        return _ratio(self.tp + self.tn, self.tp + self.fp + self.fn + self.tn)

    @property
    def recall(self):
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def specificity(self):
        return _ratio(self.tn, self.fp + self.tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def compute_metrics(
    selected: Mapping[str, Iterable[str]],
    ground_truth: Mapping[str, Iterable[str]],
    dataset: IndexedDataset,
    scope: str = "gold",
    iterations: int = 0,
    wall_time_ms: float = 0.0,
) -> MetricsReport:
    """Confusion counts over (item, value) labels.

    The labelled pairs of an item are its candidate values plus any ground
    truth value no source claimed (such a value can only be a false negative).
    ``scope="gold"`` evaluates the items listed in ``ground_truth``;
    ``scope="full"`` evaluates every dataset item, treating items absent from
    the ground truth as having no true value.
    """
    if not ground_truth:
        raise EmptyGoldStandard("ground truth is empty")
    gt = {d: {canonical_value(v) for v in vals} for d, vals in ground_truth.items()}
    if scope == "gold":
        items = [d for d in gt if d in dataset.item_index]
        missing = len(gt) - len(items)
        if missing:
            logger.warning("%d ground-truth items are not in the dataset; skipped", missing)
    elif scope == "full":
        items = list(dataset.item_ids)
    else:
        raise ValueError(f"unknown scope {scope!r}")

    tp = fp = fn = tn = 0
    for d in items:
        truth = gt.get(d, set())
        picked = {canonical_value(v) for v in selected.get(d, ())}
        candidates = set(dataset.values_of_item(d)) | truth
        for v in candidates:
            if v in picked:
                if v in truth:
                    tp += 1
                else:
                    fp += 1
            elif v in truth:
                fn += 1
            else:
                tn += 1
    return MetricsReport(tp, fp, fn, tn, iterations=iterations, wall_time_ms=wall_time_ms)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    na, nb = math.sqrt(float(a @ a)), math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise ZeroNorm("cosine similarity of a zero vector")
    return float(a @ b) / (na * nb)


def converged(prev, curr, delta: float = DEFAULT_DELTA) -> bool:
    """True iff ``1 - cos(prev, curr) <= delta``."""
    if np.shape(prev) != np.shape(curr):
        raise ValueError("trust vectors differ in dimension")
    return 1.0 - cosine_similarity(prev, curr) <= delta


def converged_or_false(prev, curr, delta: float, iteration: int = MIN_ITERATIONS) -> bool:
    """Convergence test for iteration loops.

    A zero-norm vector is not converged, and neither is anything before
    ``MIN_ITERATIONS``: the first update is compared against the
    initialization, which says nothing about whether the estimates settled.
    """
    if iteration < MIN_ITERATIONS:
        return False
    try:
        return converged(prev, curr, delta)
    except ZeroNorm:
        return False


def clamp_trust(t: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    return np.clip(t, eps, 1.0 - eps)
