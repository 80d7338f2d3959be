"""Majority voting and the agreement-based fixpoint algorithms:
TruthFinder, Cosine, 2-Estimates and 3-Estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import similarity
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
from .errors import NumericFailure

def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NumericFailure(f"{name} produced a non-finite score")


@dataclass(frozen=True)
class TruthFinderParams:
    rho: float = 0.5
    gamma: float = 0.1
    t0: float = 0.8
    delta: float = DEFAULT_DELTA
    sim: object = "exact"
    max_iter: int = MAX_ITERATIONS

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if not 0.0 <= self.t0 <= 1.0:
            raise ValueError("t0 must lie in [0, 1]")


@dataclass(frozen=True)
class CosineParams:
    eta: float = 0.2
    delta: float = DEFAULT_DELTA
    max_iter: int = MAX_ITERATIONS

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must lie in (0, 1]")


@dataclass(frozen=True)
class EstimatesParams:
    lam: float = 0.5
    t0: float = 0.8
    eps0: float = 0.4
    delta: float = DEFAULT_DELTA
    max_iter: int = MAX_ITERATIONS
    polarity: str = "auto"  # "auto", "argmax" or "argmin"

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        if self.polarity not in ("auto", "argmax", "argmin"):
            raise ValueError("polarity must be 'auto', 'argmax' or 'argmin'")


def run_voting(dataset: IndexedDataset) -> TruthResult:
    """C_v = |S_v| / |S_d|, one pass."""
    conf = dataset.value_support / dataset.item_cover[dataset.value_item]
    state = TrustState(np.ones(dataset.n_sources), conf.astype(float), iteration=1)
    return TruthResult(state, mask_to_selection(dataset, argmax_mask(dataset, conf)))


def truthfinder_confidence(dataset, trust, rho, gamma, blocks=None) -> np.ndarray:
    """Logistic of the similarity-adjusted sum of -ln(1 - T_s) over supporters."""
    sigma = dataset.sum_over_supporters(-np.log1p(-clamp_trust(trust)))
    sigma_star = similarity.add_similarity_support(dataset, sigma, blocks, rho)
    return 1.0 / (1.0 + np.exp(-gamma * sigma_star))


def run_truthfinder(dataset: IndexedDataset, params: TruthFinderParams = TruthFinderParams()) -> TruthResult:
    blocks = similarity.similarity_matrix_blocks(dataset, params.sim)
    trust = np.full(dataset.n_sources, float(params.t0))
    nvals = dataset.source_nvalues
    conf = np.zeros(dataset.n_values)
    done = False
    it = 0
    while it < params.max_iter and not done:
        it += 1
        conf = truthfinder_confidence(dataset, trust, params.rho, params.gamma, blocks)
        _check_finite("TruthFinder", conf)
        new = dataset.sum_over_source_values(conf) / nvals
        done = converged_or_false(trust, new, params.delta, it)
        trust = new
    state = TrustState(trust, conf, it)
    return TruthResult(state, mask_to_selection(dataset, argmax_mask(dataset, conf)), done)


def cosine_initial_trust(dataset: IndexedDataset) -> np.ndarray:
    """(2|V_s| - |V_{D_s}|) / |V_{D_s}|: +1 when a source claims every candidate."""
    ncov = dataset.source_ncovered.astype(float)
    return (2.0 * dataset.source_nvalues - ncov) / ncov


def run_cosine(dataset: IndexedDataset, params: CosineParams = CosineParams()) -> TruthResult:
    ncov = dataset.source_ncovered.astype(float)
    trust = cosine_initial_trust(dataset)
    # every candidate value is claimed by someone, so all start at 1
    conf = np.ones(dataset.n_values)
    eta = params.eta
    done = False
    it = 0
    while it < params.max_iter and not done:
        it += 1
        pos = dataset.sum_over_source_values(conf)
        neg = dataset.sum_over_covered_values(conf) - pos
        norm = np.sqrt(ncov * dataset.sum_over_covered_values(conf * conf))
        ok = norm > 0
        new = trust.copy()
        new[ok] = (1.0 - eta) * trust[ok] + eta * (pos[ok] - neg[ok]) / norm[ok]

        t3 = new ** 3
        sup = dataset.sum_over_supporters(t3)
        dis = dataset.sum_over_disputers(t3, sup)
        denom = dataset.sum_over_item_sources(t3)[dataset.value_item]
        conf = np.divide(sup - dis, denom, out=np.zeros_like(sup), where=denom != 0)
        _check_finite("Cosine", conf)
        done = converged_or_false(trust, new, params.delta, it)
        trust = new
    state = TrustState(trust, conf, it)
    return TruthResult(state, mask_to_selection(dataset, argmax_mask(dataset, conf)), done)


def normalize(values, lam: float) -> np.ndarray:
    """Blend of min-max scaling and its half-up rounding.

    >>> normalize([0, 5, 10], 0.5).tolist()
    [0.0, 0.75, 1.0]
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise ValueError("normalize needs a non-empty list")
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.zeros_like(x)
    x1 = (x - lo) / (hi - lo)
    x2 = np.floor(x1 + 0.5)
    return lam * x1 + (1.0 - lam) * x2


def estimates_polarity(dataset: IndexedDataset, conf: np.ndarray) -> str:
    """Which end of the Estimates score marks true values.

    Both Estimates fixpoints are nearly invariant under T -> 1-T, C -> 1-C
    once min-max normalization is applied, and when sources are about equally
    reliable the normalization turns noise into 0/1 trust, so a run can settle
    in either orientation. Orient it the way that makes the values with the
    most supporters look true: compare the mean score of each contested
    item's most supported value against the rest.
    """
    contested = (dataset.item_nvalues > 1)[dataset.value_item]
    if not contested.any():
        return "argmax"
    top = argmax_mask(dataset, dataset.value_support.astype(float))
    a, b = conf[top & contested], conf[~top & contested]
    return "argmin" if a.mean() < b.mean() else "argmax"


def _estimates_selection(dataset, conf, polarity):
    if polarity == "auto":
        polarity = estimates_polarity(dataset, conf)
    scores = -conf if polarity == "argmin" else conf
    return polarity, mask_to_selection(dataset, argmax_mask(dataset, scores))


def estimates2_raw_confidence(dataset, trust) -> np.ndarray:
    """(sum of 1 - T over supporters + sum of T over disputers) / |S_d|."""
    cover = dataset.item_cover[dataset.value_item]
    sup = dataset.sum_over_supporters(1.0 - trust)
    dis = dataset.sum_over_disputers(trust)
    return (sup + dis) / cover


def estimates3_raw_confidence(dataset, trust, err) -> np.ndarray:
    """(sum of 1 - T*eps over supporters + sum of T*eps over disputers) / |S_d|."""
    cover = dataset.item_cover[dataset.value_item]
    sup_t = dataset.sum_over_supporters(trust)
    dis_t = dataset.sum_over_disputers(trust, sup_t)
    return (dataset.value_support - err * sup_t + err * dis_t) / cover


def run_2estimates(dataset: IndexedDataset, params: EstimatesParams = EstimatesParams()) -> TruthResult:
    lam = params.lam
    ncov = dataset.source_ncovered.astype(float)
    trust = np.full(dataset.n_sources, float(params.t0))
    conf = np.zeros(dataset.n_values)
    done = False
    it = 0
    while it < params.max_iter and not done:
        it += 1
        conf = normalize(estimates2_raw_confidence(dataset, trust), lam)

        own = dataset.sum_over_source_values(1.0 - conf)
        other = dataset.sum_over_covered_values(conf) - dataset.sum_over_source_values(conf)
        new = normalize((own + other) / ncov, lam)
        _check_finite("2-Estimates", new)
        done = converged_or_false(trust, new, params.delta, it)
        trust = new
    state = TrustState(trust, conf, it)
    polarity, selection = _estimates_selection(dataset, conf, params.polarity)
    return TruthResult(state, selection, done, {"polarity": polarity})


def run_3estimates(dataset: IndexedDataset, params: EstimatesParams = EstimatesParams()) -> TruthResult:
    lam = params.lam
    trust = np.full(dataset.n_sources, float(params.t0))
    err = np.full(dataset.n_values, float(params.eps0))
    conf = np.zeros(dataset.n_values)
    done = False
    it = 0
    while it < params.max_iter and not done:
        it += 1
        conf = normalize(estimates3_raw_confidence(dataset, trust, err), lam)

        # value error factor, sources with zero trust excluded
        nz = trust != 0
        inv_t = np.divide(1.0, trust, out=np.zeros_like(trust), where=nz)
        norm = dataset.sum_over_item_sources(nz.astype(float))[dataset.value_item]
        sup_inv = dataset.sum_over_supporters(inv_t)
        dis_inv = dataset.sum_over_disputers(inv_t, sup_inv)
        raw = (1.0 - conf) * sup_inv + conf * dis_inv
        err = np.where(norm > 0, np.divide(raw, norm, out=np.zeros_like(raw), where=norm > 0), err)
        err = normalize(err, lam)

        # source trust, values with zero error factor excluded
        nze = err != 0
        inv_e = np.divide(1.0, err, out=np.zeros_like(err), where=nze)
        pos = dataset.sum_over_source_values((1.0 - conf) * inv_e)
        ce = conf * inv_e
        neg = dataset.sum_over_covered_values(ce) - dataset.sum_over_source_values(ce)
        cnt = dataset.sum_over_covered_values(nze.astype(float))
        new = np.where(cnt > 0, np.divide(pos + neg, cnt, out=np.zeros_like(pos), where=cnt > 0), trust)
        new = normalize(new, lam)
        _check_finite("3-Estimates", new)
        done = converged_or_false(trust, new, params.delta, it)
        trust = new
    state = TrustState(trust, conf, it)
    polarity, selection = _estimates_selection(dataset, conf, params.polarity)
    return TruthResult(state, selection, done, {"polarity": polarity, "error_factor": err})
