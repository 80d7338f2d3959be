"""Copy-aware voting: Depen and its variants Accu, AccuSim and AccuNoDep.

Each iteration estimates, for every pair of sources, the posterior
probability that one copies the other from how often they agree on the
currently-true values, agree on false values, or disagree. A supporter's
vote is then discounted by its dependence on the supporters counted before
it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import kernels, similarity
from .core import (
    DEFAULT_DELTA,
    MAX_ITERATIONS,
    IndexedDataset,
    TrustState,
    TruthResult,
    argmax_mask,
    clamp_trust,
    converged_or_false,
    mask_to_selection,
)
from .errors import IoError, NumericFailure

VARIANTS = ("Depen", "Accu", "AccuSim", "AccuNoDep")
DEFAULT_COPY_PROB = {"Depen": 0.8, "Accu": 0.1, "AccuSim": 0.05, "AccuNoDep": 0.8}
# error rate of an independent source assumed by the copy model
COPY_ERROR_RATE = 0.2


@dataclass(frozen=True)
class DepenParams:
    variant: str = "Depen"
    alpha_dep: float = 0.2
    c: float | None = None  # per-variant default when None
    n: float = 100.0
    t0: float = 0.8
    rho: float = 0.5
    sim: object = "exact"
    delta: float = DEFAULT_DELTA
    max_iter: int = MAX_ITERATIONS
    ordering: str = "lexical"
    compute_once: bool = False
    error_rate: float = COPY_ERROR_RATE
    fixed_dependence: np.ndarray | None = None  # bypasses the copy model when given

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not 0.0 < self.alpha_dep < 1.0:
            raise ValueError("alpha_dep must lie in (0, 1)")
        if not 0.0 <= self.copy_prob <= 1.0:
            raise ValueError("c must lie in [0, 1]")
        if self.n <= 0:
            raise ValueError("n must be positive")
        if self.ordering not in ("lexical", "by_dependence"):
            raise ValueError("ordering must be 'lexical' or 'by_dependence'")
        if not 0.0 < self.error_rate < 1.0:
            raise ValueError("error_rate must lie in (0, 1)")

    @property
    def copy_prob(self) -> float:
        return DEFAULT_COPY_PROB[self.variant] if self.c is None else self.c

    @property
    def uses_accuracy(self) -> bool:
        return self.variant != "Depen"


def comp_depen(k_t, k_f, k_d, alpha, c, n, error_rate=COPY_ERROR_RATE):
    """Posterior probability that two sources are dependent.

    Independent sources with accuracy ``1 - e`` agree on a true value with
    probability ``(1-e)^2``, on a particular false value with ``e^2/n``, and
    disagree otherwise; a copier reproduces the other source with probability
    ``c``. The likelihood ratio per shared item is therefore
    ``c/(1-e) + 1 - c`` (same true), ``n*c/e + 1 - c`` (same false) and
    ``1 - c`` (different), and the posterior is ``alpha*R / (alpha*R + 1 - alpha)``.
    Works elementwise on arrays; no shared items returns ``alpha``.
    """
    k_t = np.asarray(k_t, dtype=float)
    k_f = np.asarray(k_f, dtype=float)
    k_d = np.asarray(k_d, dtype=float)
    log_rt = np.log(c / (1.0 - error_rate) + 1.0 - c)
    log_rf = np.log(n * c / error_rate + 1.0 - c)
    with np.errstate(divide="ignore"):
        log_rd = np.log(1.0 - c)
    # 0 * log(0) counts as 0: no differing items means no penalty
    diff = np.where(k_d > 0, k_d * log_rd, 0.0)
    log_r = k_t * log_rt + k_f * log_rf + diff
    return expit(log_r + np.log(alpha) - np.log1p(-alpha))


def dependence_matrix(dataset: IndexedDataset, true_mask: np.ndarray, params: DepenParams,
                      backend=None) -> np.ndarray:
    """Symmetric |S| x |S| dependence probabilities with a zero diagonal."""
    impl = kernels if backend is None else kernels.load_backend(backend)
    item_ptr = np.concatenate(([0], np.cumsum(dataset.item_cover))).astype(np.int64)
    overlap, same, same_true = impl.pair_counts(
        dataset.n_sources, item_ptr, np.ascontiguousarray(dataset.cov_source),
        np.ascontiguousarray(dataset.sv_start, dtype=np.int64),
        np.ascontiguousarray(dataset.sv_source), np.ascontiguousarray(true_mask, dtype=np.uint8),
    )
    k_t = same_true
    k_f = same - same_true
    k_d = overlap - same
    dep = comp_depen(k_t, k_f, k_d, params.alpha_dep, params.copy_prob, params.n, params.error_rate)
    np.fill_diagonal(dep, 0.0)
    return np.ascontiguousarray(dep)


def order_sources(sources, mode: str = "lexical", dependence=None):
    """Order supporters for vote counting.

    ``lexical`` sorts by id. ``by_dependence`` sorts by decreasing dependence
    score (a mapping source -> score), ties broken lexically.
    """
    if mode == "lexical":
        return sorted(sources)
    if mode == "by_dependence":
        dependence = dependence or {}
        return sorted(sources, key=lambda s: (-dependence.get(s, 0.0), s))
    raise ValueError(f"unknown ordering {mode!r}")


def vote_count(source, pre, c: float, dependence) -> float:
    """prod_{s_j in pre} (1 - c * dep(source, s_j)); 1 when ``pre`` is empty.

    ``dependence`` is a callable ``(a, b) -> probability``.
    """
    w = 1.0
    for other in pre:
        w *= 1.0 - c * dependence(source, other)
    return w


def _supporter_order(dataset: IndexedDataset, dep: np.ndarray, mode: str) -> np.ndarray:
    if mode == "lexical":
        return np.ascontiguousarray(dataset.sv_source)
    out = np.empty_like(dataset.sv_source)
    starts = dataset.sv_start
    for v in range(dataset.n_values):
        src = dataset.sv_source[starts[v]:starts[v + 1]]
        score = dep[np.ix_(src, src)].sum(axis=1)
        # src is lexically ordered, so a stable sort keeps the lexical tie-break
        out[starts[v]:starts[v + 1]] = src[np.argsort(-score, kind="stable")]
    return out


def trust_score(trust: np.ndarray, params: DepenParams) -> np.ndarray:
    if not params.uses_accuracy:
        return np.ones_like(trust)
    t = clamp_trust(trust)
    return np.log(params.n * t / (1.0 - t))


def softmax_within_items(dataset: IndexedDataset, conf: np.ndarray) -> np.ndarray:
    m = np.maximum.reduceat(conf, dataset.item_start)
    e = np.exp(conf - m[dataset.value_item])
    return e / dataset.sum_over_item_values(e)[dataset.value_item]


def run_depen_family(dataset: IndexedDataset, params: DepenParams = DepenParams(),
                     backend=None) -> TruthResult:
    impl = kernels if backend is None else kernels.load_backend(backend)
    blocks = similarity.similarity_matrix_blocks(dataset, params.sim) if params.variant == "AccuSim" else None
    n_s = dataset.n_sources
    c = params.copy_prob
    trust = np.full(n_s, float(params.t0))
    true_mask = argmax_mask(dataset, dataset.value_support.astype(float))

    if params.fixed_dependence is not None:
        dep = np.ascontiguousarray(params.fixed_dependence, dtype=float)
        if dep.shape != (n_s, n_s):
            raise ValueError("fixed_dependence must be |S| x |S|")
    else:
        dep = None
    independent = params.variant == "AccuNoDep" and dep is None
    sv_start = np.ascontiguousarray(dataset.sv_start, dtype=np.int64)

    conf = np.zeros(dataset.n_values)
    done = False
    it = 0
    while it < params.max_iter and not done:
        it += 1
        tscore = trust_score(trust, params)
        if independent:
            conf = np.bincount(dataset.sv_value, weights=tscore[dataset.sv_source],
                               minlength=dataset.n_values)
        else:
            if params.fixed_dependence is None and (dep is None or not params.compute_once):
                dep = dependence_matrix(dataset, true_mask, params, backend)
            order = _supporter_order(dataset, dep, params.ordering)
            conf = impl.depen_confidence(sv_start, order, tscore, dep, c)
        if blocks is not None:
            conf = similarity.add_similarity_support(dataset, conf, blocks, params.rho)
        if not np.all(np.isfinite(conf)):
            raise NumericFailure(f"{params.variant} confidence is not finite")
        p = softmax_within_items(dataset, conf)
        new = dataset.sum_over_source_values(p) / dataset.source_nvalues
        true_mask = argmax_mask(dataset, conf)
        done = converged_or_false(trust, new, params.delta, it)
        trust = new
    state = TrustState(trust, conf, it)
    extra = {"variant": params.variant}
    if dep is not None:
        extra["dependence"] = dep
    return TruthResult(state, mask_to_selection(dataset, true_mask), done, extra)


def run_depen(dataset, **kw):
    return run_depen_family(dataset, DepenParams(variant="Depen", **kw))


def run_accu(dataset, **kw):
    return run_depen_family(dataset, DepenParams(variant="Accu", **kw))


def run_accusim(dataset, **kw):
    return run_depen_family(dataset, DepenParams(variant="AccuSim", **kw))


def run_accunodep(dataset, **kw):
    return run_depen_family(dataset, DepenParams(variant="AccuNoDep", **kw))


def write_dependence_csv(path, dataset: IndexedDataset, dep: np.ndarray, min_prob: float = 0.0):
    """Dump ``source_i,source_j,probability`` for i < j."""
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["source_i", "source_j", "probability"])
            ids = dataset.source_ids
            for i in range(len(ids)):
                for j in range(i + 1, len(ids)):
                    if dep[i, j] >= min_prob:
                        w.writerow([ids[i], ids[j], repr(float(dep[i, j]))])
    except OSError as exc:
        raise IoError(str(exc)) from exc
