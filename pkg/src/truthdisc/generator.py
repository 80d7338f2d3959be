"""Synthetic truth-discovery scenarios with complete ground truth.

A scenario fixes how many items each source covers (``cov``), how many
distinct values are claimed per item (``conf``) and how often each source
tells the truth (``gt``). Values are opaque tokens ``v<item>_<k>``; which
token is true is drawn at random per item.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import Claim

COVERAGE_MODES = ("U25", "U75", "E")
CONFLICT_MODES = ("U", "E")
TRUTH_MODES = ("R", "U25", "U75", "FP", "FO", "80P", "80O", "E")
RANDOM_TRUTH_MODES = ("per_claim", "per_source")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ScenarioConfig:
    n_sources: int = 50
    n_items: int = 1000
    cov: str = "U25"
    conf: str = "U"
    gt: str = "R"
    max_distinct: int = 2
    seed: int = 0
    random_truth: str = "per_claim"  # how GT=R draws truth

    def __post_init__(self):
        if self.n_sources < 1 or self.n_items < 1:
            raise ValueError("n_sources and n_items must be positive")
        if self.cov not in COVERAGE_MODES:
            raise ValueError(f"cov must be one of {COVERAGE_MODES}")
        if self.conf not in CONFLICT_MODES:
            raise ValueError(f"conf must be one of {CONFLICT_MODES}")
        if self.gt not in TRUTH_MODES:
            raise ValueError(f"gt must be one of {TRUTH_MODES}")
        if self.max_distinct < 1:
            raise ValueError("max_distinct must be >= 1")
        if self.random_truth not in RANDOM_TRUTH_MODES:
            raise ValueError(f"random_truth must be one of {RANDOM_TRUTH_MODES}")
        if self.cov == "E" and self.n_sources < 2:
            raise ValueError("exponential coverage needs at least 2 sources")

    @property
    def name(self) -> str:
        return (f"Cov={self.cov}-Conf={self.conf}-GT={self.gt}-k={self.max_distinct}"
                f"-S={self.n_sources}-D={self.n_items}-seed={self.seed}")


@dataclass
class GeneratedScenario:
    config: ScenarioConfig
    claims: list[Claim]
    ground_truth: dict[str, str]
    metadata: dict = field(default_factory=dict)

    def ground_truth_sets(self) -> dict[str, set[str]]:
        return {d: {v} for d, v in self.ground_truth.items()}


def source_ids(n: int) -> list[str]:
    width = len(str(max(n - 1, 0)))
    return [f"s{i:0{width}d}" for i in range(n)]


def item_ids(n: int) -> list[str]:
    width = max(4, len(str(max(n - 1, 0))))
    return [f"d{i:0{width}d}" for i in range(n)]


def value_token(item: int, k: int, width: int = 4) -> str:
    return f"v{item:0{width}d}_{k}"


def coverage_counts(cov: str, n_sources: int, n_items: int) -> np.ndarray:
    """Number of items each source covers."""
    if cov == "U25":
        return np.full(n_sources, n_items // 4, dtype=np.int64)
    if cov == "U75":
        return np.full(n_sources, (3 * n_items) // 4, dtype=np.int64)
    if cov == "E":
        if n_sources < 2:
            raise ValueError("exponential coverage needs at least 2 sources")
        out = []
        for i in range(n_sources):
            x = 1.0 + (n_items - 1) * (math.exp(4.0 * i / (n_sources - 1)) - 1.0) / (math.exp(4.0) - 1.0)
            out.append(min(max(round_half_up(x), 1), n_items))
        return np.array(out, dtype=np.int64)
    raise ValueError(f"unknown coverage mode {cov!r}")


def conflict_counts(conf: str, n_items: int, max_distinct: int) -> np.ndarray:
    """Requested number of distinct claimed values per item."""
    if conf == "U":
        return np.full(n_items, max_distinct, dtype=np.int64)
    if conf == "E":
        den = math.exp(2.0 * (n_items - 1) / n_items - 1.0)
        out = []
        for i in range(1, n_items + 1):
            x = (max_distinct - 1) * math.exp(2.0 * i / n_items - 1.0) / den + 1.0
            out.append(min(max(round_half_up(x), 1), max_distinct))
        return np.array(out, dtype=np.int64)
    raise ValueError(f"unknown conflict mode {conf!r}")


def _split_sources(n_sources: int, rng) -> np.ndarray:
    """Boolean mask of the 80% group, chosen by seeded shuffle."""
    n_major = round_half_up(0.8 * n_sources)
    mask = np.zeros(n_sources, dtype=bool)
    mask[rng.permutation(n_sources)[:n_major]] = True
    return mask


def exponential_truth_fraction(i: int, n_sources: int) -> float:
    """Share of true claims for source i (1-based): 0 for the first source, 1 for the last.

    The denominator is held at ``e - e^{1/|S|}`` so the last source is finite.
    """
    if n_sources == 1:
        return 1.0
    e1 = math.exp(1.0 / n_sources)
    return (math.exp(i / n_sources) - e1) / (math.e - e1)


def truth_quota(gt: str, coverage: np.ndarray, rng=None) -> np.ndarray | None:
    """True-claim count per source; ``None`` for GT=R, which has no fixed quota.

    ``rng`` picks the 80% group for FP, FO, 80P and 80O. Per-source draws
    for GT=R come from :func:`random_truth_quota`.
    """
    cov = np.asarray(coverage, dtype=np.int64)
    n = len(cov)
    if gt == "U25":
        return cov // 4
    if gt == "U75":
        return (3 * cov) // 4
    if gt in ("FP", "FO", "80P", "80O"):
        if rng is None:
            raise ValueError(f"GT={gt} needs a random generator")
        major = _split_sources(n, rng)
        if gt == "FP":
            return np.where(major, 0, cov)
        if gt == "FO":
            return np.where(major, cov, 0)
        low, high = (cov * 2) // 10, (cov * 8) // 10
        if gt == "80P":
            return np.where(major, low, high)
        return np.where(major, high, low)
    if gt == "E":
        frac = [exponential_truth_fraction(i, n) for i in range(1, n + 1)]
        return np.array([min(max(round_half_up(c * f), 0), c) for c, f in zip(cov.tolist(), frac)],
                        dtype=np.int64)
    if gt == "R":
        return None
    raise ValueError(f"unknown ground-truth mode {gt!r}")


def random_truth_quota(coverage: np.ndarray, rng) -> np.ndarray:
    """GT=R drawn per source: uniform count in [0, |D_s|]."""
    cov = np.asarray(coverage, dtype=np.int64)
    return rng.integers(0, cov + 1)


def generate_scenario(config: ScenarioConfig) -> GeneratedScenario:
    rng = np.random.default_rng(config.seed)
    n_s, n_d = config.n_sources, config.n_items
    sids = source_ids(n_s)
    dids = item_ids(n_d)
    width = max(4, len(str(n_d - 1)))

    cover_n = coverage_counts(config.cov, n_s, n_d)
    distinct = conflict_counts(config.conf, n_d, config.max_distinct)
    true_pos = rng.integers(0, distinct)

    covered = [np.sort(rng.choice(n_d, size=int(c), replace=False)) for c in cover_n]

    per_claim = config.gt == "R" and config.random_truth == "per_claim"
    if config.gt == "R" and not per_claim:
        quota = random_truth_quota(cover_n, rng)
    else:
        quota = truth_quota(config.gt, cover_n, rng)

    # tells[s] = set of covered items where s claims the true value
    item_sources: list[list[int]] = [[] for _ in range(n_d)]
    for s in range(n_s):
        for d in covered[s].tolist():
            item_sources[d].append(s)
    tells = np.zeros((n_s, n_d), dtype=bool)
    if not per_claim:
        for s in range(n_s):
            items = covered[s]
            q = int(quota[s])
            single = items[distinct[items] <= 1]
            multi = items[distinct[items] > 1]
            # lie where a false value exists; single-value items take truth first
            if q >= len(single):
                chosen = np.concatenate([single, rng.choice(multi, size=q - len(single), replace=False)])
            else:
                chosen = rng.choice(single, size=q, replace=False)
            tells[s, chosen] = True

    claims: list[Claim] = []
    achieved_distinct = np.zeros(n_d, dtype=np.int64)
    excess_items = 0
    shortfall_items = 0
    true_count = np.zeros(n_s, dtype=np.int64)
    cid = 0
    for d in range(n_d):
        srcs = np.array(item_sources[d], dtype=np.int64)
        k = int(distinct[d])
        t = int(true_pos[d])
        values = np.empty(len(srcs), dtype=np.int64)
        if per_claim:
            order = rng.permutation(len(srcs))
            head = order[:k]
            values[head] = rng.permutation(k)[:len(head)]
            rest = order[k:]
            values[rest] = rng.integers(0, k, size=len(rest))
        else:
            honest = tells[srcs, d]
            values[honest] = t
            liars = np.flatnonzero(~honest)
            false_pool = np.array([j for j in range(k) if j != t], dtype=np.int64)
            if len(false_pool) == 0 and len(liars):
                # a source must lie on a single-value item: open one extra token
                false_pool = np.array([k], dtype=np.int64)
                excess_items += 1
            if len(liars):
                order = rng.permutation(liars)
                pool = rng.permutation(false_pool)
                head = order[:len(pool)]
                values[head] = pool[:len(head)]
                rest = order[len(pool):]
                values[rest] = pool[rng.integers(0, len(pool), size=len(rest))]
        achieved_distinct[d] = len(np.unique(values))
        if achieved_distinct[d] < k:
            shortfall_items += 1
        for s, v in zip(srcs.tolist(), values.tolist()):
            cid += 1
            claims.append(Claim(f"c{cid}", sids[s], dids[d], value_token(d, v, width)))
            if v == t:
                true_count[s] += 1

    ground_truth = {dids[d]: value_token(d, int(true_pos[d]), width) for d in range(n_d)}
    cov_arr = cover_n.astype(float)
    rate = np.divide(true_count, cov_arr, out=np.zeros(n_s), where=cov_arr > 0)
    metadata = {
        "config": asdict(config),
        "coverage": dict(zip(sids, cover_n.tolist())),
        "true_claims": dict(zip(sids, true_count.tolist())),
        "true_rate": dict(zip(sids, rate.tolist())),
        "quota": None if quota is None else dict(zip(sids, np.asarray(quota).tolist())),
        "requested_distinct": distinct.tolist(),
        "achieved_distinct": achieved_distinct.tolist(),
        "shortfall_items": shortfall_items,
        "excess_items": excess_items,
        "mean_true_rate": float(rate.mean()),
        "n_claims": len(claims),
    }
    return GeneratedScenario(config, claims, ground_truth, metadata)
