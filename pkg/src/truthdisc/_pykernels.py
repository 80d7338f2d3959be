"""Pure-Python/NumPy versions of the compiled kernels in ``_ckernels.pyx``.

Each function reproduces its compiled counterpart bit for bit: sums and
products are accumulated in the same order.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp


def ltm_sweep(pair_ptr, pair_src, pair_obs, labels, counts, alpha, beta, uniform):
    ptr = pair_ptr.tolist()
    src = pair_src.tolist()
    obs = pair_obs.tolist()
    a = [float(x) for x in alpha]
    b = [float(x) for x in beta]
    u = uniform.tolist()
    n = counts.tolist()
    lab = labels.tolist()
    flips = 0
    for v in range(len(lab)):
        t = lab[v]
        tb = 1 - t
        ratio = b[tb] / b[t]
        lo, hi = ptr[v], ptr[v + 1]
        for k in range(lo, hi):
            base = 4 * src[k]
            o = obs[k]
            f_t = (float(n[base + 2 * t + o]) + a[2 * t + o] - 1.0) / (
                float(n[base + 2 * t + 1]) + float(n[base + 2 * t]) + a[2 * t + 1] + a[2 * t] - 1.0)
            f_b = (float(n[base + 2 * tb + o]) + a[2 * tb + o]) / (
                float(n[base + 2 * tb + 1]) + float(n[base + 2 * tb]) + a[2 * tb + 1] + a[2 * tb])
            ratio = ratio * (f_b / f_t)
        prob = 1.0 if ratio == math.inf else ratio / (1.0 + ratio)
        if u[v] < prob:
            lab[v] = tb
            flips += 1
            for k in range(lo, hi):
                base = 4 * src[k]
                o = obs[k]
                n[base + 2 * t + o] -= 1
                n[base + 2 * tb + o] += 1
    labels[:] = lab
    counts[:] = n
    return flips


def depen_confidence(sv_start, ordered_src, tscore, dep, c):
    # cumprod and cumsum accumulate left to right, like the compiled loops
    out = np.zeros(len(sv_start) - 1)
    for v in range(len(sv_start) - 1):
        src = ordered_src[sv_start[v]:sv_start[v + 1]]
        m = len(src)
        if m == 0:
            continue
        factors = 1.0 - c * dep[np.ix_(src, src)]
        factors[np.triu_indices(m)] = 1.0
        votes = np.cumprod(factors, axis=1)[:, -1]
        out[v] = np.cumsum(tscore[src] * votes)[-1]
    return out


def _incidence(ptr, src, n_sources, keep=None):
    groups = np.repeat(np.arange(len(ptr) - 1), np.diff(ptr))
    data = np.ones(len(src), dtype=np.int32)
    if keep is not None:
        data = data * keep[groups].astype(np.int32)
    return sp.csr_matrix((data, (src, groups)), shape=(n_sources, len(ptr) - 1))


def _pairs(m):
    out = (m @ m.T).toarray().astype(np.int32)
    np.fill_diagonal(out, 0)
    return out


def pair_counts(n_sources, item_ptr, item_src, sv_start, sv_src, true_mask):
    overlap = _pairs(_incidence(item_ptr, item_src, n_sources))
    values = _incidence(sv_start, sv_src, n_sources)
    same = _pairs(values)
    same_true = _pairs(_incidence(sv_start, sv_src, n_sources, keep=true_mask))
    return overlap, same, same_true
