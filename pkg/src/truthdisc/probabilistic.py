"""Generative-model algorithms: LTM (collapsed Gibbs sampling), MLE (EM over
Boolean observations), SimpleLCA and GuessLCA."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from . import kernels
from .core import (
    DEFAULT_DELTA,
    MAX_ITERATIONS,
    IndexedDataset,
    TrustState,
    TruthResult,
    argmax_mask,
    converged_or_false,
    mask_to_selection,
    threshold_mask,
)
from .errors import NumericFailure, RequiresReformat, SourceCountExceeded

LIST_DELIMITER = "|"
MLE_MAX_SOURCES = 5000


# ---------------------------------------------------------------------------
# shared (value, source-observing-the-item) incidence


@dataclass(frozen=True)
class ObservationPairs:
    """For each value v, every source observing v's item group.

    ``obs`` is 1 for supporters (S_v) and 0 for disputers (S_v-bar); the pairs
    of value v are ``ptr[v]:ptr[v+1]``, sources in lexical order.
    """

    ptr: np.ndarray
    value: np.ndarray
    src: np.ndarray
    obs: np.ndarray


def observation_pairs(dataset: IndexedDataset, value_group=None) -> ObservationPairs:
    """Build the pairs; ``value_group`` maps values to item groups (default: own item)."""
    n_s = dataset.n_sources
    if value_group is None:
        value_group = dataset.value_item
        g_item, g_src = dataset.cov_item, dataset.cov_source
    else:
        value_group = np.asarray(value_group, dtype=np.int64)
        keys = np.unique(value_group[dataset.sv_value] * n_s + dataset.sv_source)
        g_item, g_src = keys // n_s, keys % n_s
    n_groups = int(value_group.max()) + 1 if len(value_group) else 0
    g_count = np.bincount(g_item, minlength=n_groups)
    g_ptr = np.concatenate(([0], np.cumsum(g_count)))

    cnt = g_count[value_group]
    ptr = np.concatenate(([0], np.cumsum(cnt))).astype(np.int64)
    total = int(ptr[-1])
    pair_value = np.repeat(np.arange(dataset.n_values, dtype=np.int64), cnt)
    offset = np.arange(total, dtype=np.int64) - ptr[:-1][pair_value] + g_ptr[value_group][pair_value]
    src = np.ascontiguousarray(g_src[offset].astype(np.int64))
    sv_keys = dataset.sv_value * n_s + dataset.sv_source
    obs = np.isin(pair_value * n_s + src, sv_keys).astype(np.int8)
    return ObservationPairs(ptr, pair_value, src, obs)


# ---------------------------------------------------------------------------
# LTM


@dataclass(frozen=True)
class LtmParams:
    k: int = 500
    burnin: int = 100
    thin: int = 9
    alpha: tuple = (0.9, 0.1, 0.9, 0.1)  # (a11, a10, a01, a00)
    beta: tuple = (0.1, 0.1)  # (b1, b0)
    seed: int = 0
    runs: int = 100
    # With alpha_{1,o} = alpha_{0,o} the posterior is invariant under flipping
    # every label; orient each kept sample so claimed values are the true ones
    # more often than not (see ``labels_inverted``). False keeps raw samples.
    orient_labels: bool = True

    def __post_init__(self):
        if not self.k > self.burnin >= 0:
            raise ValueError("need k > burnin >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if len(self.alpha) != 4 or len(self.beta) != 2:
            raise ValueError("alpha needs 4 entries and beta 2")
        if min(self.alpha) <= 0 or min(self.beta) <= 0:
            raise ValueError("prior counts must be positive")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")


def ltm_sample_count(params: LtmParams) -> int:
    """Number of sweeps i in 1..K with i > burnin and i % thin == 0."""
    return params.k // params.thin - params.burnin // params.thin


def _ltm_prior_arrays(params: LtmParams):
    a11, a10, a01, a00 = params.alpha
    # indexed [2*t + o]
    alpha = np.array([a00, a01, a10, a11], dtype=float)
    b1, b0 = params.beta
    beta = np.array([b0, b1], dtype=float)
    return alpha, beta


def labels_inverted(counts: np.ndarray) -> bool:
    """True when, pooled over sources, values labelled true are claimed less
    often than values labelled false: the sampler sits in the mirrored mode."""
    c = counts.reshape(-1, 2, 2).sum(axis=0)
    n_true, n_false = c[1].sum(), c[0].sum()
    if n_true == 0 or n_false == 0:
        return False
    return c[1, 1] / n_true < c[0, 1] / n_false


def check_atomic(dataset: IndexedDataset):
    for v in dataset.value_strs:
        if LIST_DELIMITER in v:
            raise RequiresReformat(f"value {v!r} is a list; split it into atomic claims first")


def run_ltm(dataset: IndexedDataset, params: LtmParams = LtmParams(), backend=None) -> TruthResult:
    """One sampler run seeded with ``params.seed``.

    ``C_v`` is the thinned posterior mean of the truth label; values with
    ``C_v > 0.5`` are selected, so an item may get several or no values.
    """
    check_atomic(dataset)
    impl = kernels if backend is None else kernels.load_backend(backend)
    pairs = observation_pairs(dataset)
    alpha, beta = _ltm_prior_arrays(params)
    rng = np.random.default_rng(params.seed)
    n_v = dataset.n_values

    labels = np.where(rng.random(n_v) < 0.5, 0, 1).astype(np.int8)
    counts = np.bincount(
        4 * pairs.src + 2 * labels[pairs.value].astype(np.int64) + pairs.obs,
        minlength=4 * dataset.n_sources,
    ).astype(np.int64)

    conf = np.zeros(n_v)
    flipped = 0
    weight = 1.0 / max(ltm_sample_count(params), 1)
    for i in range(1, params.k + 1):
        impl.ltm_sweep(pairs.ptr, pairs.src, pairs.obs, labels, counts, alpha, beta, rng.random(n_v))
        if i > params.burnin and i % params.thin == 0:
            if params.orient_labels and labels_inverted(counts):
                conf += (1 - labels) * weight
                flipped += 1
            else:
                conf += labels * weight

    # share of each source's claims that the final labelling marks true
    c = counts.reshape(-1, 2, 2)
    hit = c[:, 0, 1] if params.orient_labels and labels_inverted(counts) else c[:, 1, 1]
    claimed = c[:, 1, 1] + c[:, 0, 1]
    trust = np.divide(hit, claimed, out=np.zeros(dataset.n_sources), where=claimed > 0)
    state = TrustState(trust, conf, params.k)
    return TruthResult(state, mask_to_selection(dataset, threshold_mask(conf)), True,
                       {"seed": params.seed, "counts": counts, "oriented_samples": flipped})


def run_ltm_repeated(dataset: IndexedDataset, params: LtmParams = LtmParams(), backend=None):
    """``params.runs`` independent runs with seeds ``seed + r``."""
    return [run_ltm(dataset, replace(params, seed=params.seed + r), backend) for r in range(params.runs)]


# ---------------------------------------------------------------------------
# MLE


@dataclass(frozen=True)
class MleParams:
    beta1: float = 0.5
    r: float = 0.8
    delta: float = DEFAULT_DELTA
    max_iter: int = MAX_ITERATIONS
    log_space: bool = False
    max_sources: int = MLE_MAX_SOURCES
    observers: str = "all"  # "all": every source observes every value; "item": only sources covering its item

    def __post_init__(self):
        if not 0.0 < self.beta1 < 1.0:
            raise ValueError("beta1 must lie in (0, 1)")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError("r must lie in [0, 1]")
        if self.observers not in ("item", "all"):
            raise ValueError("observers must be 'item' or 'all'")


BOOLEAN_TRUE = "true"


def is_boolean_form(dataset: IndexedDataset) -> bool:
    return all(v == BOOLEAN_TRUE for v in dataset.value_strs)


def _mle_value_groups(dataset: IndexedDataset, groups: Mapping[str, str] | None):
    if groups is None:
        if not is_boolean_form(dataset):
            return None
        groups = {d: d.rsplit(":", 1)[0] for d in dataset.item_ids}
    ids: dict[str, int] = {}
    item_group = np.array([ids.setdefault(groups.get(d, d), len(ids)) for d in dataset.item_ids],
                          dtype=np.int64)
    return item_group[dataset.value_item]


def mle_initial_params(dataset: IndexedDataset, r: float, beta1: float):
    """a = r f / beta1 and b = (1 - r) f / (1 - beta1), f = |V_s| / |V|.

    Both are capped at 1: a source claiming most values would otherwise start
    with a probability above 1 and push C_v outside [0, 1].
    """
    f = dataset.source_nvalues / float(dataset.n_values)
    return np.minimum(r * f / beta1, 1.0), np.minimum((1.0 - r) * f / (1.0 - beta1), 1.0)


def mle_estep(pairs: ObservationPairs, a, b, beta1, log_space=False):
    """C_v = a_v*beta1 / (a_v*beta1 + b_v*(1-beta1))."""
    fa = np.where(pairs.obs == 1, a[pairs.src], 1.0 - a[pairs.src])
    fb = np.where(pairs.obs == 1, b[pairs.src], 1.0 - b[pairs.src])
    starts = pairs.ptr[:-1]
    if log_space:
        with np.errstate(divide="ignore"):
            la = np.add.reduceat(np.log(fa), starts) + np.log(beta1)
            lb = np.add.reduceat(np.log(fb), starts) + np.log(1.0 - beta1)
        m = np.maximum(la, lb)
        with np.errstate(invalid="ignore"):
            ea, eb = np.exp(la - m), np.exp(lb - m)
        return ea / (ea + eb)
    av = np.multiply.reduceat(fa, starts) * beta1
    bv = np.multiply.reduceat(fb, starts) * (1.0 - beta1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return av / (av + bv)


def run_mle(dataset: IndexedDataset, params: MleParams = MleParams(),
            groups: Mapping[str, str] | None = None) -> TruthResult:
    """EM over positive observations.

    Each value is one assertion. The sources observing an assertion are those
    that claim something about the same group; on Boolean-form data (every
    value ``True``, items named ``<item>:<value>``) the group is the original
    item, taken from ``groups`` or from the item id prefix.
    """
    if dataset.n_sources > params.max_sources and not params.log_space:
        raise SourceCountExceeded(
            f"{dataset.n_sources} sources exceed {params.max_sources}; products underflow to 0/0"
        )
    if params.observers == "all":
        pairs = observation_pairs(dataset, np.zeros(dataset.n_values, dtype=np.int64))
    else:
        pairs = observation_pairs(dataset, _mle_value_groups(dataset, groups))
    n_v = float(dataset.n_values)
    nvals = dataset.source_nvalues.astype(float)
    a, b = mle_initial_params(dataset, params.r, params.beta1)
    conf = np.zeros(dataset.n_values)
    done = False
    it = 0
    while it < params.max_iter and not done:
        it += 1
        conf = mle_estep(pairs, a, b, params.beta1, params.log_space)
        if not np.all(np.isfinite(conf)):
            raise NumericFailure("MLE value confidence is NaN (0/0)")
        c_sum = conf.sum()
        c_s = dataset.sum_over_source_values(conf)
        new_a = c_s / c_sum
        new_b = (nvals - c_s) / (n_v - c_sum)
        if not (np.all(np.isfinite(new_a)) and np.all(np.isfinite(new_b))):
            raise NumericFailure("MLE source parameters are NaN")
        done = converged_or_false(np.concatenate([a, b]), np.concatenate([new_a, new_b]), params.delta, it)
        a, b = new_a, new_b
    state = TrustState(a, conf, it)
    return TruthResult(state, mask_to_selection(dataset, threshold_mask(conf)), done, {"a": a, "b": b})


# ---------------------------------------------------------------------------
# LCA


@dataclass(frozen=True)
class LcaParams:
    beta1: float = 0.5
    t0: float = 0.8
    delta: float = DEFAULT_DELTA
    max_iter: int = MAX_ITERATIONS
    weights: Mapping | None = None  # {(source_id, item_id): w_sd}, default 1 per claimed item
    guess_update: str = "em"  # GuessLCA trust update: "em" or "literal"

    def __post_init__(self):
        if not 0.0 < self.beta1 <= 1.0:
            raise ValueError("beta1 must lie in (0, 1]")
        if self.weights is not None and any(not 0.0 <= w <= 1.0 for w in self.weights.values()):
            raise ValueError("certainty weights must lie in [0, 1]")
        if self.guess_update not in ("em", "literal"):
            raise ValueError("guess_update must be 'em' or 'literal'")


def certainty_weights(dataset: IndexedDataset, weights=None) -> np.ndarray:
    """w_{s,d} aligned with the (item, source) coverage pairs."""
    w = np.ones(len(dataset.cov_item))
    if weights:
        n_s = dataset.n_sources
        keys = dataset.cov_item * n_s + dataset.cov_source
        for (src, item), val in weights.items():
            if src in dataset.source_index and item in dataset.item_index:
                k = dataset.item_index[item] * n_s + dataset.source_index[src]
                w[np.searchsorted(keys, k)] = val
    return w


def _pair_weights(dataset, pairs, w_cov):
    n_s = dataset.n_sources
    keys = dataset.cov_item * n_s + dataset.cov_source
    pk = dataset.value_item[pairs.value] * n_s + pairs.src
    return w_cov[np.searchsorted(keys, pk)]


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def _weighted(w, logf):
    # x**0 == 1 even when x == 0
    return np.where(w > 0, w * np.where(w > 0, logf, 0.0), 0.0)


def normalize_log_within_items(dataset: IndexedDataset, logc: np.ndarray) -> np.ndarray:
    """Per-item softmax of log scores; an item whose scores are all zero becomes uniform."""
    m = np.maximum.reduceat(logc, dataset.item_start)
    dead = np.isneginf(m)
    shift = np.where(dead, 0.0, m)[dataset.value_item]
    with np.errstate(invalid="ignore"):
        e = np.exp(logc - shift)
    e[dead[dataset.value_item]] = 1.0
    return e / dataset.sum_over_item_values(e)[dataset.value_item]


def simple_lca_estep(dataset, pairs, pair_w, trust, beta1):
    n_vd = dataset.item_nvalues[dataset.value_item[pairs.value]].astype(float)
    log_sup = _log(trust[pairs.src])
    with np.errstate(divide="ignore", invalid="ignore"):
        log_dis = _log(1.0 - trust[pairs.src]) - np.log(np.maximum(n_vd - 1.0, 1.0))
    terms = _weighted(pair_w, np.where(pairs.obs == 1, log_sup, log_dis))
    logc = np.log(beta1) + np.bincount(pairs.value, weights=terms, minlength=dataset.n_values)
    return normalize_log_within_items(dataset, logc)


def guess_probability(dataset: IndexedDataset) -> np.ndarray:
    """p_g = |S_v| / (|S_v| + |S_v-bar|)."""
    return dataset.value_support / dataset.item_cover[dataset.value_item]


def guess_lca_estep(dataset, pairs, pair_w, trust, beta1, p_guess):
    t = trust[pairs.src]
    pg = p_guess[pairs.value]
    log_sup = _log(t + (1.0 - t) * pg)
    log_dis = _log(1.0 - t) + _log(pg)
    terms = _weighted(pair_w, np.where(pairs.obs == 1, log_sup, log_dis))
    logc = np.log(beta1) + np.bincount(pairs.value, weights=terms, minlength=dataset.n_values)
    return normalize_log_within_items(dataset, logc)


def _sv_weights(dataset, w_cov):
    n_s = dataset.n_sources
    keys = dataset.cov_item * n_s + dataset.cov_source
    return w_cov[np.searchsorted(keys, dataset.value_item[dataset.sv_value] * n_s + dataset.sv_source)]


def run_simple_lca(dataset: IndexedDataset, params: LcaParams = LcaParams()) -> TruthResult:
    pairs = observation_pairs(dataset)
    w_cov = certainty_weights(dataset, params.weights)
    pair_w = _pair_weights(dataset, pairs, w_cov)
    sv_w = _sv_weights(dataset, w_cov)
    w_den = np.bincount(dataset.cov_source, weights=w_cov, minlength=dataset.n_sources)
    trust = np.full(dataset.n_sources, float(params.t0))
    conf = np.zeros(dataset.n_values)
    done = False
    it = 0
    while it < params.max_iter and not done:
        it += 1
        conf = simple_lca_estep(dataset, pairs, pair_w, trust, params.beta1)
        num = np.bincount(dataset.sv_source, weights=conf[dataset.sv_value] * sv_w,
                          minlength=dataset.n_sources)
        new = np.where(w_den > 0, np.divide(num, w_den, out=np.zeros_like(num), where=w_den > 0), trust)
        if not np.all(np.isfinite(new)):
            raise NumericFailure("SimpleLCA trust is NaN")
        done = converged_or_false(trust, new, params.delta, it)
        trust = new
    state = TrustState(trust, conf, it)
    return TruthResult(state, mask_to_selection(dataset, argmax_mask(dataset, conf)), done)


def guess_lca_mstep(dataset, conf, p_guess, sv_w, w_cov):
    """Trust update read literally from the published pseudocode:

    T_s = (sum_{V_s} C_v + sum_{V_{D_s}} p_g/(1-p_g) C_v) / sum_{V_{D_s}} C_v w_sd

    Unanimous values (p_g = 1) carry no guessing odds and are left out of the
    odds sum. The result is clipped to [0, 1].
    """
    odds = np.divide(p_guess, 1.0 - p_guess, out=np.zeros_like(p_guess), where=p_guess < 1.0)
    own = np.bincount(dataset.sv_source, weights=conf[dataset.sv_value], minlength=dataset.n_sources)
    odds_sum = dataset.sum_over_covered_values(odds * conf)
    per_item_c = dataset.sum_over_item_values(conf)
    den = np.bincount(dataset.cov_source, weights=per_item_c[dataset.cov_item] * w_cov,
                      minlength=dataset.n_sources)
    return np.clip(np.divide(own + odds_sum, den, out=np.full_like(own, np.nan), where=den > 0), 0.0, 1.0)


def guess_lca_mstep_em(dataset, conf, trust, p_guess, sv_w, w_cov):
    """Trust update as the EM step of the guessing model.

    A source claiming v was honest with posterior T/(T + (1-T) p_g) when v
    is true and 0 otherwise, so

    T_s = sum_{V_s} w_sd C_v T_s / (T_s + (1-T_s) p_g) / sum_{D_s} w_sd
    """
    t = trust[dataset.sv_source]
    pg = p_guess[dataset.sv_value]
    denom = t + (1.0 - t) * pg
    honest = np.divide(t, denom, out=np.zeros_like(t), where=denom > 0)
    num = np.bincount(dataset.sv_source, weights=sv_w * conf[dataset.sv_value] * honest,
                      minlength=dataset.n_sources)
    den = np.bincount(dataset.cov_source, weights=w_cov, minlength=dataset.n_sources)
    return np.divide(num, den, out=np.full_like(num, np.nan), where=den > 0)


def run_guess_lca(dataset: IndexedDataset, params: LcaParams = LcaParams()) -> TruthResult:
    pairs = observation_pairs(dataset)
    w_cov = certainty_weights(dataset, params.weights)
    pair_w = _pair_weights(dataset, pairs, w_cov)
    sv_w = _sv_weights(dataset, w_cov)
    p_guess = guess_probability(dataset)
    trust = np.full(dataset.n_sources, float(params.t0))
    conf = None
    done = False
    it = 0
    while it < params.max_iter and not done:
        it += 1
        new_conf = guess_lca_estep(dataset, pairs, pair_w, trust, params.beta1, p_guess)
        if not np.all(np.isfinite(new_conf)):
            raise NumericFailure("GuessLCA confidence is NaN")
        if params.guess_update == "literal":
            new = guess_lca_mstep(dataset, new_conf, p_guess, sv_w, w_cov)
        else:
            new = guess_lca_mstep_em(dataset, new_conf, trust, p_guess, sv_w, w_cov)
        new = np.where(np.isnan(new), trust, new)
        done = (conf is not None and converged_or_false(trust, new, params.delta, it)
                and converged_or_false(conf, new_conf, params.delta, it))
        trust, conf = new, new_conf
    state = TrustState(trust, conf, it)
    return TruthResult(state, mask_to_selection(dataset, argmax_mask(dataset, conf)), done,
                       {"guess_update": params.guess_update})
