import json
import os
import subprocess
import sys

import pytest

from truthdisc import cli, reformat
from truthdisc.core import Claim
from truthdisc.errors import EmptyDataset, EmptyGoldStandard, IoError, ParseError, SpecError
from truthdisc.generator import ScenarioConfig, generate_scenario
from truthdisc.io import (
    load_claims,
    load_ground_truth,
    load_scenario_config,
    write_claims,
    write_ground_truth,
    write_scenario,
)
from truthdisc.report import REPORT_HEADER, emit_figure_long, emit_report, parse_report, rounded
from truthdisc.runner import (
    ALGORITHMS,
    STATUS_EL,
    STATUS_NA,
    STATUS_OK,
    AlgorithmSpec,
    ExperimentSpec,
    FileDataset,
    PreparedDataset,
    ReportRow,
    build_params,
    ci95_halfwidth,
    resolve_algorithm,
    run_experiment,
)

from .conftest import AFFILIATION_ROWS, claims_from_rows

SMALL = ScenarioConfig(n_sources=10, n_items=60, cov="U75", gt="U75", max_distinct=3, seed=1)


# claim / truth files --------------------------------------------------------

def test_load_claim_row(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("c1,S1,Stonebraker:AffiliatedTo,MIT\n")
    assert load_claims(p) == [Claim("c1", "S1", "Stonebraker:AffiliatedTo", "mit")]


def test_load_claims_header_and_blank_lines(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("claim_id,source_id,data_item_id,value\n\nc1,a,d,x\n")
    assert len(load_claims(p)) == 1


def test_load_claims_errors(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("")
    with pytest.raises(EmptyDataset):
        load_claims(p)
    p.write_text("c1,a,d,x\nc2,a,d\n")
    with pytest.raises(ParseError) as exc:
        load_claims(p)
    assert exc.value.line == 2
    with pytest.raises(IoError):
        load_claims(tmp_path / "missing.csv")


def test_ground_truth(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("Stonebraker:AffiliatedTo,MIT\n")
    assert load_ground_truth(p) == {"Stonebraker:AffiliatedTo": {"mit"}}
    p.write_text("d,x\nd,y\n")
    assert load_ground_truth(p) == {"d": {"x", "y"}}
    p.write_text("")
    with pytest.raises(EmptyGoldStandard):
        load_ground_truth(p)


def test_claims_round_trip(tmp_path):
    claims = claims_from_rows([(s, d, v.lower()) for s, d, v in AFFILIATION_ROWS])
    write_claims(tmp_path / "c.csv", claims)
    assert load_claims(tmp_path / "c.csv") == claims
    write_ground_truth(tmp_path / "t.csv", {"d1": "mit", "d2": {"a", "b"}})
    assert load_ground_truth(tmp_path / "t.csv") == {"d1": {"mit"}, "d2": {"a", "b"}}


def test_scenario_config_file(tmp_path):
    p = tmp_path / "s.cfg"
    p.write_text("# scenario\nn_sources = 12\ncov=E\ngt = FP  # pessimistic\n")
    cfg = load_scenario_config(p, {"seed": 9, "gt": None})
    assert (cfg.n_sources, cfg.cov, cfg.gt, cfg.seed) == (12, "E", "FP", 9)
    p.write_text("colour=blue\n")
    with pytest.raises(ParseError):
        load_scenario_config(p)


def test_write_scenario(tmp_path):
    sc = generate_scenario(SMALL)
    paths = write_scenario(sc, tmp_path, "x")
    assert len(load_claims(paths["claims"])) == len(sc.claims)
    assert json.loads(paths["meta"].read_text())["n_claims"] == len(sc.claims)


# reformatting ---------------------------------------------------------------

def test_reformat_for_ltm():
    out = reformat.reformat_for_ltm([Claim("c1", "s", "Book:AuthorOf", "authora|authorb")])
    assert [(c.claim_id, c.value) for c in out] == [("c1#1", "authora"), ("c1#2", "authorb")]
    atomic = Claim("c2", "s", "d", "x")
    assert reformat.reformat_for_ltm([atomic]) == [atomic]


def test_reformat_drops_empty(caplog):
    assert reformat.reformat_for_ltm([Claim("c1", "s", "d", " | ")]) == []
    assert "dropped" in caplog.text


def test_reformat_for_mle():
    out = reformat.reformat_for_mle([Claim("c1", "s", "Book:AuthorOf", "AuthorA"),
                                     Claim("c2", "s", "Book:AuthorOf", "AuthorB")])
    assert out[0] == Claim("c1", "s", "Book:AuthorOf:AuthorA", "True")
    assert len(out) == 2
    assert reformat.reformat_for_mle(out) == out


def test_selection_from_boolean_round_trip():
    atoms = [Claim("c1", "s", "d", "x"), Claim("c2", "t", "d", "y")]
    cmap = reformat.composite_map(atoms)
    sel = {"d:x": frozenset({"True"}), "d:y": frozenset()}
    assert reformat.selection_from_boolean(sel, cmap) == {"d": frozenset({"x"})}


# runner ---------------------------------------------------------------------

def test_registry():
    assert len(ALGORITHMS) == 13
    assert resolve_algorithm("voting").name == "MajorityVoting"
    assert resolve_algorithm("accusim").name == "AccuSim"
    with pytest.raises(SpecError):
        resolve_algorithm("oracle")
    assert build_params(resolve_algorithm("Accu"), {}).variant == "Accu"
    with pytest.raises(SpecError):
        build_params(resolve_algorithm("TruthFinder"), {"colour": 1})


def test_empty_algorithm_list():
    with pytest.raises(SpecError):
        run_experiment(ExperimentSpec([SMALL], []))


def test_experiment_rows_and_report(tmp_path):
    out = tmp_path / "r.csv"
    algs = ["MajorityVoting", "TruthFinder", AlgorithmSpec("LTM", {"runs": 3, "k": 30, "burnin": 5, "thin": 2}),
            "MLE", "Depen"]
    rows = run_experiment(ExperimentSpec([SMALL], algs, output=str(out)))
    assert [r.algorithm for r in rows] == ["MajorityVoting", "TruthFinder", "LTM", "MLE", "Depen"]
    assert all(r.status == STATUS_OK for r in rows)
    assert all(r.precision > 0.8 for r in rows)
    ltm = rows[2]
    assert "runs=3" in ltm.params and ltm.precision_ci95 is not None
    back = parse_report(out)
    assert back == [rounded(r) for r in rows]
    assert out.read_text().splitlines()[0] == ",".join(REPORT_HEADER)


def test_file_dataset(tmp_path):
    paths = write_scenario(generate_scenario(SMALL), tmp_path, "s")
    rows = run_experiment(ExperimentSpec([FileDataset(str(paths["claims"]), str(paths["truth"]))],
                                         ["TruthFinder"]))
    direct = run_experiment(ExperimentSpec([SMALL], ["TruthFinder"]))
    assert rows[0].precision == direct[0].precision


def test_mle_source_count_becomes_na():
    claims = [Claim(f"c{i}", f"s{i:04d}", f"d{i % 50}", f"v{i % 3}") for i in range(6000)]
    prepared = PreparedDataset("wide", claims, {f"d{j}": {"v0"} for j in range(50)})
    rows = run_experiment(ExperimentSpec([prepared], ["MLE"]))
    assert rows[0].status == STATUS_NA


def test_time_limit_marks_el():
    rows = run_experiment(ExperimentSpec([SMALL], [AlgorithmSpec("LTM", {"runs": 1})], time_limit_s=1e-9))
    assert rows[0].status == STATUS_EL


def test_memory_measurement():
    rows = run_experiment(ExperimentSpec([SMALL], ["Cosine"], measure_memory=True))
    assert rows[0].mem_mb is not None and rows[0].mem_mb > 0


def test_parallel_matches_serial():
    cfgs = [SMALL, ScenarioConfig(n_sources=10, n_items=60, gt="U25", max_distinct=3, seed=2)]
    algs = ["TruthFinder", "Accu"]
    a = run_experiment(ExperimentSpec(cfgs, algs, workers=1))
    b = run_experiment(ExperimentSpec(cfgs, algs, workers=2))
    assert [(r.dataset, r.algorithm, r.precision) for r in a] == [(r.dataset, r.algorithm, r.precision) for r in b]


def test_ci95():
    assert ci95_halfwidth([0.5]) == 0.0
    assert ci95_halfwidth([0.4, 0.6]) == pytest.approx(12.706 * 0.1414214 / 1.4142136, rel=1e-3)


# report ---------------------------------------------------------------------

def test_report_single_row(tmp_path):
    p = tmp_path / "r.csv"
    emit_report([ReportRow("d", "TruthFinder", "default", precision=0.5, iterations=3)], p)
    assert len(p.read_text().splitlines()) == 2


def test_report_el_row_has_empty_metrics(tmp_path):
    p = tmp_path / "r.csv"
    emit_report([ReportRow("d", "LTM", "-", precision=0.9, status=STATUS_EL)], p)
    fields = p.read_text().splitlines()[1].split(",")
    assert fields[-1] == "EL"
    assert all(f == "" for f in fields[3:-1])


def test_report_undefined(tmp_path):
    p = tmp_path / "r.csv"
    emit_report([ReportRow("d", "MLE", "-", precision=None)], p)
    assert "undefined" in p.read_text()
    assert parse_report(p)[0].precision is None


def test_report_unwritable(tmp_path):
    with pytest.raises(IoError):
        emit_report([ReportRow("d", "a", "-")], tmp_path / "no" / "r.csv")


def test_figure_long_format(tmp_path):
    algs = [a for a in ALGORITHMS if a != "MajorityVoting"]
    points = [(k, a, 0.5) for k in range(2, 21) for a in algs]
    p = tmp_path / "f.csv"
    emit_figure_long(points, p)
    lines = p.read_text().splitlines()
    assert lines[0] == "x,algorithm,precision"
    assert len(lines) - 1 == 228


# CLI --------------------------------------------------------------------------

def test_cli_generate_run_convert(tmp_path, capsys):
    assert cli.main(["--seed", "3", "generate", "--n-sources", "8", "--n-items", "40", "--gt", "U75",
                     "--max-distinct", "3", "--out", str(tmp_path), "--stem", "s"]) == 0
    claims, truth = tmp_path / "s_claims.csv", tmp_path / "s_truth.csv"
    report = tmp_path / "r.csv"
    code = cli.main(["run", "--claims", str(claims), "--truth", str(truth), "-a", "TruthFinder", "Cosine",
                     "--out", str(report)])
    assert code == 0
    assert len(parse_report(report)) == 2
    assert cli.main(["convert", str(claims), "--to", "mle", "--out", str(tmp_path / "m.csv")]) == 0
    assert load_claims(tmp_path / "m.csv")[0].value == "true"


def test_cli_config_and_overrides(tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("n_sources=8\nn_items=40\nmax_distinct=3\ngt=U75\n")
    out = tmp_path / "f.csv"
    assert cli.main(["sweep", "--config", str(cfg), "--n-items", "30", "--seeds", "1",
                     "--max-distinct-sweep", "3", "-a", "MajorityVoting", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 3


def test_cli_nonzero_on_failed_cell(tmp_path):
    code = cli.main(["run", "--n-sources", "8", "--n-items", "40", "--gt", "U75", "-a", "LTM",
                     "--param", "LTM.runs=1", "--time-limit", "0.000000001"])
    assert code == 1


def test_cli_error_exit(tmp_path, capsys):
    p = tmp_path / "c.csv"
    p.write_text("c1,a\n")
    assert cli.main(["convert", str(p), "--to", "ltm", "--out", str(tmp_path / "o.csv")]) == 2
    assert "error" in capsys.readouterr().err


def test_pure_python_backend_env():
    env = dict(os.environ, TRUTHDISC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import truthdisc.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
