import numpy as np
import pytest

from truthdisc.agreement import (
    CosineParams,
    EstimatesParams,
    TruthFinderParams,
    cosine_initial_trust,
    estimates2_raw_confidence,
    estimates3_raw_confidence,
    estimates_polarity,
    normalize,
    run_2estimates,
    run_3estimates,
    run_cosine,
    run_truthfinder,
    run_voting,
    truthfinder_confidence,
)
from truthdisc.core import Claim, compute_metrics, index_dataset
from truthdisc.generator import ScenarioConfig, generate_scenario


def _ds(rows):
    return index_dataset([Claim(f"c{i}", s, d, v) for i, (s, d, v) in enumerate(rows)])


# voting -------------------------------------------------------------------

def test_voting_affiliation(affiliation):
    sel = run_voting(affiliation).selection
    assert sel["d1"] == {"mit"}
    assert sel["d3"] == {"bea"}


def test_voting_unanimity():
    r = run_voting(_ds([("s", "d", "x")]))
    assert r.selection == {"d": frozenset({"x"})}
    assert r.state.value_confidence.tolist() == [1.0]


# TruthFinder --------------------------------------------------------------

def test_truthfinder_single_source_confidence():
    ds = _ds([("s", "d", "x")])
    conf = truthfinder_confidence(ds, np.array([0.8]), rho=0.0, gamma=0.1)
    # sigma = -ln(.2) = 1.6094, C = 1 / (1 + e^{-.16094})
    assert conf[0] == pytest.approx(1.0 / (1.0 + np.exp(-0.1 * -np.log(0.2))), abs=1e-12)
    assert conf[0] == pytest.approx(0.5402, abs=1e-4)


def test_truthfinder_zero_trust_gives_half():
    ds = _ds([("a", "d", "x"), ("b", "d", "y"), ("c", "e", "z")])
    conf = truthfinder_confidence(ds, np.zeros(3), rho=0.5, gamma=0.1)
    assert np.allclose(conf, 0.5, atol=1e-8)


def test_truthfinder_affiliation_selection(affiliation, affiliation_truth):
    r = run_truthfinder(affiliation)
    expect = {"d1": {"mit"}, "d2": {"at&t"}, "d3": {"bea"}, "d4": {"msr"}}
    assert {d: set(v) for d, v in r.selection.items()} == expect
    assert compute_metrics(r.selection, affiliation_truth, affiliation).precision == pytest.approx(0.25)


def test_truthfinder_rejects_bad_params():
    with pytest.raises(ValueError):
        TruthFinderParams(rho=1.5)
    with pytest.raises(ValueError):
        TruthFinderParams(gamma=0)


# Cosine -------------------------------------------------------------------

def test_cosine_initial_trust():
    # source "a" claims 3 values among 6 candidates on its items
    rows = [("a", f"d{i}", "x") for i in range(3)] + [("b", f"d{i}", "y") for i in range(3)]
    ds = _ds(rows)
    assert cosine_initial_trust(ds)[ds.source_index["a"]] == pytest.approx(0.0)
    solo = _ds([("a", "d", "x"), ("a", "e", "y")])
    assert cosine_initial_trust(solo).tolist() == [1.0]


def test_cosine_symmetric_tie():
    ds = _ds([("a", "d", "y"), ("b", "d", "x")])
    r = run_cosine(ds)
    assert np.allclose(r.state.value_confidence, 0.0)
    assert r.selection == {"d": frozenset({"x"})}


def test_cosine_eta_bounds():
    with pytest.raises(ValueError):
        CosineParams(eta=0)


# normalization ------------------------------------------------------------

@pytest.mark.parametrize("lam, expect", [(1.0, [0, 0.5, 1]), (0.0, [0, 1, 1]), (0.5, [0, 0.75, 1])])
def test_normalize(lam, expect):
    assert normalize([0, 5, 10], lam) == pytest.approx(expect, abs=1e-12)


def test_normalize_fixed_point_and_flat():
    assert normalize([0, 0.4, 1], 1.0) == pytest.approx([0, 0.4, 1])
    assert normalize([3, 3, 3], 0.5).tolist() == [0, 0, 0]
    with pytest.raises(ValueError):
        normalize([], 0.5)


# Estimates ----------------------------------------------------------------

def test_2estimates_raw_confidence():
    ds = _ds([("a", "d", "v"), ("b", "d", "w")])
    trust = np.zeros(2)
    trust[ds.source_index["a"]] = 0.8
    trust[ds.source_index["b"]] = 0.6
    v = ds.value_index[(0, "v")]
    assert estimates2_raw_confidence(ds, trust)[v] == pytest.approx(0.4, abs=1e-12)


def test_2estimates_zero_trust_no_disagreement():
    ds = _ds([("a", "d", "v"), ("b", "d", "v"), ("a", "e", "w")])
    assert estimates2_raw_confidence(ds, np.zeros(2)) == pytest.approx([1.0, 1.0])


def test_3estimates_raw_confidence():
    ds = _ds([("a", "d", "v"), ("b", "d", "w")])
    trust = np.zeros(2)
    trust[ds.source_index["a"]] = 0.8
    trust[ds.source_index["b"]] = 0.6
    v = ds.value_index[(0, "v")]
    err = np.full(ds.n_values, 0.4)
    assert estimates3_raw_confidence(ds, trust, err)[v] == pytest.approx(0.46, abs=1e-12)


def test_3estimates_zero_error_is_one():
    ds = _ds([("a", "d", "v"), ("b", "d", "w"), ("c", "d", "v")])
    out = estimates3_raw_confidence(ds, np.full(3, 0.7), np.zeros(ds.n_values))
    assert out == pytest.approx([2 / 3, 1 / 3])
    # each value's score is |S_v| / |S_d|; with one value per item that is 1
    ds1 = _ds([("a", "d", "v"), ("b", "d", "v")])
    assert estimates3_raw_confidence(ds1, np.full(2, 0.7), np.zeros(1)).tolist() == [1.0]


def test_estimates_orientation_follows_support():
    ds = _ds([("a", "d", "x"), ("b", "d", "x"), ("c", "d", "y")])
    x, y = ds.value_index[(0, "x")], ds.value_index[(0, "y")]
    conf = np.zeros(2)
    conf[x], conf[y] = 0.1, 0.9
    assert estimates_polarity(ds, conf) == "argmin"
    conf[x], conf[y] = 0.9, 0.1
    assert estimates_polarity(ds, conf) == "argmax"


@pytest.mark.parametrize("run", [run_2estimates, run_3estimates])
def test_estimates_orientation_beats_either_fixed_choice(run):
    """On equally reliable sources the fixpoint lands in either mirrored mode
    depending on noise; the oriented selection is never worse than the
    better fixed polarity by more than a rounding margin."""
    for seed in range(3):
        sc = generate_scenario(ScenarioConfig(n_sources=20, n_items=200, cov="U75", conf="U",
                                              gt="U75", max_distinct=5, seed=seed))
        ds = index_dataset(sc.claims)
        gt = sc.ground_truth_sets()
        prec = {pol: compute_metrics(run(ds, EstimatesParams(polarity=pol)).selection, gt, ds).precision
                for pol in ("auto", "argmax", "argmin")}
        assert prec["auto"] >= max(prec["argmax"], prec["argmin"]) - 1e-9


def test_estimates_records_polarity(affiliation):
    r = run_3estimates(affiliation)
    assert r.extra["polarity"] in ("argmax", "argmin")
    assert "error_factor" in r.extra
    with pytest.raises(ValueError):
        EstimatesParams(polarity="sideways")
