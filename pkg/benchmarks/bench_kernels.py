"""Compare the compiled kernels with the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--sources 200] [--items 500] [--repeat 3]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from truthdisc import kernels
from truthdisc.core import argmax_mask, index_dataset
from truthdisc.dependence import DepenParams, dependence_matrix
from truthdisc.generator import ScenarioConfig, generate_scenario
from truthdisc.probabilistic import LtmParams, _ltm_prior_arrays, observation_pairs


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def kernel_cases(ds):
    pairs = observation_pairs(ds)
    alpha, beta = _ltm_prior_arrays(LtmParams())
    rng = np.random.default_rng(0)
    labels0 = rng.integers(0, 2, ds.n_values).astype(np.int8)
    counts0 = np.bincount(4 * pairs.src + 2 * labels0[pairs.value].astype(np.int64) + pairs.obs,
                          minlength=4 * ds.n_sources).astype(np.int64)
    uniform = rng.random(ds.n_values)

    mask = argmax_mask(ds, ds.value_support.astype(float))
    item_ptr = np.concatenate(([0], np.cumsum(ds.item_cover))).astype(np.int64)
    dep = dependence_matrix(ds, mask, DepenParams())
    tscore = np.ones(ds.n_sources)
    sv_start = np.ascontiguousarray(ds.sv_start)
    sv_src = np.ascontiguousarray(ds.sv_source)
    cov_src = np.ascontiguousarray(ds.cov_source)
    mask8 = mask.astype(np.uint8)

    def ltm(impl):
        return lambda: impl.ltm_sweep(pairs.ptr, pairs.src, pairs.obs, labels0.copy(), counts0.copy(),
                                      alpha, beta, uniform)

    def depen(impl):
        return lambda: impl.depen_confidence(sv_start, sv_src, tscore, dep, 0.8)

    def pairs_fn(impl):
        return lambda: impl.pair_counts(ds.n_sources, item_ptr, cov_src, sv_start, sv_src, mask8)

    return {"ltm_sweep": ltm, "depen_confidence": depen, "pair_counts": pairs_fn}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sources", type=int, default=200)
    ap.add_argument("--items", type=int, default=500)
    ap.add_argument("--distinct", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    sc = generate_scenario(ScenarioConfig(n_sources=args.sources, n_items=args.items, cov="U25",
                                          conf="U", gt="U75", max_distinct=args.distinct, seed=0))
    ds = index_dataset(sc.claims)
    backends = kernels.available_backends()
    print(f"{len(ds)} claims, {ds.n_sources} sources, {ds.n_values} values; backends: {', '.join(backends)}")
    print(f"{'kernel':18s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, make in kernel_cases(ds).items():
        secs = {b: best_of(make(kernels.load_backend(b)), args.repeat) for b in backends}
        line = f"{name:18s}" + "".join(f"{secs[b] * 1000:10.2f}ms" for b in backends)
        if len(backends) > 1:
            line += f"{secs['python'] / secs['cython']:11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
