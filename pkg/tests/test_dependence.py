import math

import numpy as np
import pytest

from truthdisc.core import Claim, argmax_mask, index_dataset
from truthdisc.dependence import (
    DepenParams,
    comp_depen,
    dependence_matrix,
    order_sources,
    run_accu,
    run_accunodep,
    run_depen,
    run_depen_family,
    vote_count,
    write_dependence_csv,
)
from truthdisc.kernels import available_backends

from .conftest import random_rows


def _ds(rows):
    return index_dataset([Claim(f"c{i}", s, d, v) for i, (s, d, v) in enumerate(rows)])


def _posterior_oracle(k_t, k_f, k_d, alpha, c, n, e):
    """Direct-space posterior: per-item likelihoods under both hypotheses."""
    indep = {"t": (1 - e) ** 2, "f": e * e / n, "d": 1 - (1 - e) ** 2 - e * e / n}
    # a copier repeats the other source's value, whichever false value it is
    dep = {
        "t": c * (1 - e) + (1 - c) * indep["t"],
        "f": c * e + (1 - c) * indep["f"],
        "d": (1 - c) * indep["d"],
    }
    like_dep = dep["t"] ** k_t * dep["f"] ** k_f * dep["d"] ** k_d
    like_ind = indep["t"] ** k_t * indep["f"] ** k_f * indep["d"] ** k_d
    return alpha * like_dep / (alpha * like_dep + (1 - alpha) * like_ind)


def test_comp_depen_no_overlap_is_prior():
    assert comp_depen(0, 0, 0, 0.2, 0.8, 100) == pytest.approx(0.2)


def test_comp_depen_monotone_in_shared_false():
    vals = [float(comp_depen(5, kf, 3, 0.2, 0.8, 100)) for kf in range(0, 8)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("k_t, k_f", [(1, 0), (4, 1), (10, 0), (0, 2)])
def test_comp_depen_against_direct_posterior(k_t, k_f):
    got = float(comp_depen(k_t, k_f, 0, 0.2, 0.8, 100))
    assert got == pytest.approx(_posterior_oracle(k_t, k_f, 0, 0.2, 0.8, 100, 0.2), rel=1e-9)


def test_comp_depen_identical_sources():
    # identical on 100 items, 20 of them false
    assert float(comp_depen(80, 20, 0, 0.2, 0.8, 100)) > 0.99


def test_comp_depen_disagreement_lowers():
    assert float(comp_depen(2, 0, 10, 0.2, 0.8, 100)) < 0.2


def test_order_sources():
    assert order_sources(["S3", "S1", "S2"]) == ["S1", "S2", "S3"]
    assert order_sources(["b", "a"], "by_dependence", {"a": 0.5, "b": 0.5}) == ["a", "b"]
    assert order_sources(["b", "a"], "by_dependence", {"a": 0.1, "b": 0.5}) == ["b", "a"]
    assert order_sources(["x"]) == ["x"]
    with pytest.raises(ValueError):
        order_sources(["x"], "random")


def test_vote_count():
    dep = lambda a, b: 0.5  # noqa: E731
    assert vote_count("s", [], 0.8, dep) == 1.0
    assert vote_count("s", ["t"], 0.8, dep) == pytest.approx(0.6)
    assert vote_count("s", ["t", "u"], 0.8, lambda a, b: 0.0) == 1.0


def test_single_claim_depen():
    r = run_depen(_ds([("s", "d", "x")]))
    assert r.state.value_confidence.tolist() == [1.0]
    assert r.state.source_trust.tolist() == [1.0]


def test_two_independent_supporters_count_twice():
    ds = _ds([("a", "d", "x"), ("b", "d", "x")])
    r = run_depen(ds, fixed_dependence=np.zeros((2, 2)))
    assert r.state.value_confidence.tolist() == [2.0]


def test_dependence_matrix_symmetric(affiliation):
    ds = affiliation
    mask = argmax_mask(ds, ds.value_support.astype(float))
    dep = dependence_matrix(ds, mask, DepenParams())
    assert np.array_equal(dep, dep.T)
    assert np.all(np.diag(dep) == 0)
    assert np.all((dep >= 0) & (dep <= 1))


@pytest.mark.parametrize("backend", available_backends())
@pytest.mark.parametrize("seed", range(10))
def test_accunodep_is_accu_without_dependence(seed, backend):
    rng = np.random.default_rng(seed)
    ds = _ds(random_rows(rng, n_sources=6, n_items=12, n_values=3))
    zero = np.zeros((ds.n_sources, ds.n_sources))
    a = run_depen_family(ds, DepenParams(variant="AccuNoDep"), backend=backend)
    b = run_depen_family(ds, DepenParams(variant="Accu", fixed_dependence=zero), backend=backend)
    assert a.state.identical(b.state)
    assert a.selection == b.selection


def test_copier_is_discounted():
    # c1 and c2 copy s1 wholesale, including its false values; s2..s4 agree on the truth
    rows = []
    for d in range(30):
        truth, lie = f"t{d}", f"f{d}"
        rows += [("s1", f"d{d}", lie if d % 3 == 0 else truth),
                 ("c1", f"d{d}", lie if d % 3 == 0 else truth),
                 ("c2", f"d{d}", lie if d % 3 == 0 else truth)]
        rows += [(s, f"d{d}", truth) for j, s in enumerate(("s2", "s3", "s4")) if (d + j) % 2 == 0 or d % 3 == 0]
    ds = _ds(rows)
    r = run_depen(ds)
    dep = r.extra["dependence"]
    i = ds.source_index
    assert dep[i["s1"], i["c1"]] > 0.9
    assert dep[i["s1"], i["s2"]] < 0.2 < dep[i["c1"], i["c2"]]


def test_orderings_and_compute_once(affiliation):
    for kw in ({"ordering": "by_dependence"}, {"compute_once": True}):
        a = run_accu(affiliation, **kw)
        b = run_accu(affiliation, **kw)
        assert a.state.identical(b.state)


def test_depen_affiliation_beats_truthfinder(affiliation, affiliation_truth):
    from truthdisc.agreement import run_truthfinder
    from truthdisc.core import compute_metrics

    p_dep = compute_metrics(run_depen(affiliation).selection, affiliation_truth, affiliation).precision
    p_tf = compute_metrics(run_truthfinder(affiliation).selection, affiliation_truth, affiliation).precision
    assert p_dep >= p_tf


def test_params_validation():
    with pytest.raises(ValueError):
        DepenParams(variant="Copy")
    with pytest.raises(ValueError):
        DepenParams(alpha_dep=1.0)
    assert DepenParams(variant="AccuSim").copy_prob == 0.05
    assert DepenParams(variant="Accu", c=0.3).copy_prob == 0.3


def test_write_dependence_csv(tmp_path, affiliation):
    dep = run_depen(affiliation).extra["dependence"]
    path = tmp_path / "dep.csv"
    write_dependence_csv(path, affiliation, dep)
    lines = path.read_text().splitlines()
    assert lines[0] == "source_i,source_j,probability"
    assert len(lines) == 1 + math.comb(affiliation.n_sources, 2)
