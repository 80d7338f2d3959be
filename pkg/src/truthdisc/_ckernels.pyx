# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled inner loops. ``_pykernels`` mirrors every function here."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def ltm_sweep(const cnp.int64_t[::1] pair_ptr,
              const cnp.int64_t[::1] pair_src,
              const cnp.int8_t[::1] pair_obs,
              cnp.int8_t[::1] labels,
              cnp.int64_t[::1] counts,
              const double[::1] alpha,
              const double[::1] beta,
              const double[::1] uniform):
    """One collapsed Gibbs sweep over every value, in index order.

    ``counts[4*s + 2*t + o]`` is the number of values labelled ``t`` that
    source ``s`` observed with outcome ``o`` (1 = claimed it).
    Returns the number of flipped labels.
    """
    cdef Py_ssize_t n_values = labels.shape[0]
    cdef Py_ssize_t v, k, base
    cdef int t, tb, o, flips = 0
    cdef double ratio, f_t, f_b, prob
    for v in range(n_values):
        t = labels[v]
        tb = 1 - t
        ratio = beta[tb] / beta[t]
        for k in range(pair_ptr[v], pair_ptr[v + 1]):
            base = 4 * pair_src[k]
            o = pair_obs[k]
            f_t = (<double>counts[base + 2 * t + o] + alpha[2 * t + o] - 1.0) / (
                <double>counts[base + 2 * t + 1] + <double>counts[base + 2 * t]
                + alpha[2 * t + 1] + alpha[2 * t] - 1.0)
            f_b = (<double>counts[base + 2 * tb + o] + alpha[2 * tb + o]) / (
                <double>counts[base + 2 * tb + 1] + <double>counts[base + 2 * tb]
                + alpha[2 * tb + 1] + alpha[2 * tb])
            ratio = ratio * (f_b / f_t)
        if ratio == INFINITY:
            prob = 1.0
        else:
            prob = ratio / (1.0 + ratio)
        if uniform[v] < prob:
            labels[v] = tb
            flips += 1
            for k in range(pair_ptr[v], pair_ptr[v + 1]):
                base = 4 * pair_src[k]
                o = pair_obs[k]
                counts[base + 2 * t + o] -= 1
                counts[base + 2 * tb + o] += 1
    return flips


def depen_confidence(const cnp.int64_t[::1] sv_start,
                     const cnp.int64_t[::1] ordered_src,
                     const double[::1] tscore,
                     const double[:, ::1] dep,
                     double c):
    """Per value: sum over ordered supporters of tscore * prod_{earlier}(1 - c*dep)."""
    cdef Py_ssize_t n_values = sv_start.shape[0] - 1
    out = np.zeros(n_values, dtype=np.float64)
    cdef double[::1] conf = out
    cdef Py_ssize_t v, k, j, s
    cdef double acc, vote
    for v in range(n_values):
        acc = 0.0
        for k in range(sv_start[v], sv_start[v + 1]):
            s = ordered_src[k]
            vote = 1.0
            for j in range(sv_start[v], k):
                vote = vote * (1.0 - c * dep[s, ordered_src[j]])
            acc = acc + tscore[s] * vote
        conf[v] = acc
    return out


cdef void _accumulate_pairs(const cnp.int64_t[::1] ptr, const cnp.int64_t[::1] src,
                            const cnp.uint8_t[::1] keep, cnp.int32_t[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t g, a, b, si, sj
    for g in range(ptr.shape[0] - 1):
        if not keep[g]:
            continue
        for a in range(ptr[g], ptr[g + 1]):
            si = src[a]
            for b in range(a + 1, ptr[g + 1]):
                sj = src[b]
                out[si, sj] += 1
                out[sj, si] += 1


def pair_counts(Py_ssize_t n_sources,
                const cnp.int64_t[::1] item_ptr,
                const cnp.int64_t[::1] item_src,
                const cnp.int64_t[::1] sv_start,
                const cnp.int64_t[::1] sv_src,
                const cnp.uint8_t[::1] true_mask):
    """Pairwise overlap statistics between sources.

    Returns ``(overlap, same, same_true)``: items both cover, values both
    claim, and currently-true values both claim.
    """
    overlap = np.zeros((n_sources, n_sources), dtype=np.int32)
    same = np.zeros((n_sources, n_sources), dtype=np.int32)
    same_true = np.zeros((n_sources, n_sources), dtype=np.int32)
    cdef cnp.uint8_t[::1] all_items = np.ones(item_ptr.shape[0] - 1, dtype=np.uint8)
    cdef cnp.uint8_t[::1] all_values = np.ones(sv_start.shape[0] - 1, dtype=np.uint8)
    _accumulate_pairs(item_ptr, item_src, all_items, overlap)
    _accumulate_pairs(sv_start, sv_src, all_values, same)
    _accumulate_pairs(sv_start, sv_src, true_mask, same_true)
    return overlap, same, same_true
