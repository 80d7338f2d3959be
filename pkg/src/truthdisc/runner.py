"""Algorithm registry and the experiment runner (dataset x algorithm matrix)."""

from __future__ import annotations

import dataclasses
import logging
import math
import os
import time
import tracemalloc
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from . import agreement, dependence, probabilistic, reformat
from .core import DEFAULT_DELTA, MAX_ITERATIONS, IndexedDataset, compute_metrics, index_dataset
from .errors import NumericFailure, SpecError
from .generator import ScenarioConfig, generate_scenario
from .io import load_claims, load_ground_truth

logger = logging.getLogger(__name__)

WORKERS_ENV = "TRUTHDISC_WORKERS"

STATUS_OK, STATUS_EL, STATUS_NA = "OK", "EL", "NA"


@dataclass(frozen=True)
class AlgorithmInfo:
    name: str
    run: Callable  # (dataset, params) -> TruthResult
    params_cls: type | None
    input_format: str = "plain"  # plain | ltm | mle
    stochastic: bool = False


def _run_mle(dataset, params, groups=None):
    return probabilistic.run_mle(dataset, params, groups=groups)


def _run_depen(dataset, params):
    return dependence.run_depen_family(dataset, params)


ALGORITHMS: dict[str, AlgorithmInfo] = {
    a.name: a
    for a in [
        AlgorithmInfo("MajorityVoting", lambda ds, p: agreement.run_voting(ds), None),
        AlgorithmInfo("TruthFinder", agreement.run_truthfinder, agreement.TruthFinderParams),
        AlgorithmInfo("Cosine", agreement.run_cosine, agreement.CosineParams),
        AlgorithmInfo("2-Estimates", agreement.run_2estimates, agreement.EstimatesParams),
        AlgorithmInfo("3-Estimates", agreement.run_3estimates, agreement.EstimatesParams),
        AlgorithmInfo("LTM", probabilistic.run_ltm, probabilistic.LtmParams, "ltm", True),
        AlgorithmInfo("MLE", _run_mle, probabilistic.MleParams, "mle"),
        AlgorithmInfo("SimpleLCA", probabilistic.run_simple_lca, probabilistic.LcaParams),
        AlgorithmInfo("GuessLCA", probabilistic.run_guess_lca, probabilistic.LcaParams),
        AlgorithmInfo("Depen", _run_depen, dependence.DepenParams),
        AlgorithmInfo("Accu", _run_depen, dependence.DepenParams),
        AlgorithmInfo("AccuSim", _run_depen, dependence.DepenParams),
        AlgorithmInfo("AccuNoDep", _run_depen, dependence.DepenParams),
    ]
}
ALIASES = {"voting": "MajorityVoting", "2estimates": "2-Estimates", "3estimates": "3-Estimates"}
ALL_ALGORITHMS = list(ALGORITHMS)


def resolve_algorithm(name: str) -> AlgorithmInfo:
    if name in ALGORITHMS:
        return ALGORITHMS[name]
    lowered = {k.lower(): k for k in ALGORITHMS}
    key = ALIASES.get(name.lower(), lowered.get(name.lower()))
    if key is None:
        raise SpecError(f"unknown algorithm {name!r}; known: {', '.join(ALGORITHMS)}")
    return ALGORITHMS[key]


def build_params(info: AlgorithmInfo, overrides: dict | None, delta=None, max_iter=None, seed=None):
    """Instantiate the algorithm's parameter dataclass with overrides applied."""
    if info.params_cls is None:
        if overrides:
            raise SpecError(f"{info.name} takes no parameters")
        return None
    names = {f.name for f in dataclasses.fields(info.params_cls)}
    kw = dict(overrides or {})
    unknown = set(kw) - names
    if unknown:
        raise SpecError(f"unknown parameter(s) for {info.name}: {', '.join(sorted(unknown))}")
    if info.params_cls is dependence.DepenParams:
        kw.setdefault("variant", info.name)
    if delta is not None and "delta" in names:
        kw.setdefault("delta", delta)
    if max_iter is not None and "max_iter" in names:
        kw.setdefault("max_iter", max_iter)
    if seed is not None and "seed" in names:
        kw.setdefault("seed", seed)
    return info.params_cls(**kw)


def params_digest(params) -> str:
    """Compact ``k=v;...`` rendering of the non-default parameters."""
    if params is None:
        return "-"
    default = type(params)()
    parts = []
    for f in dataclasses.fields(params):
        v = getattr(params, f.name)
        if f.name in ("seed", "weights", "fixed_dependence") or isinstance(v, np.ndarray):
            continue
        if v != getattr(default, f.name):
            parts.append(f"{f.name}={v}")
    return ";".join(parts) or "default"


# --------------------------------------------------------------------------- datasets


@dataclass(frozen=True)
class FileDataset:
    claims_path: str
    truth_path: str
    name: str | None = None

    @property
    def label(self) -> str:
        return self.name or os.path.splitext(os.path.basename(self.claims_path))[0]


@dataclass
class PreparedDataset:
    """Claims and ground truth plus lazily built algorithm-specific views."""

    name: str
    claims: list
    truth: dict[str, set[str]]
    _views: dict = field(default_factory=dict)

    def view(self, fmt: str) -> tuple[IndexedDataset, dict]:
        if fmt not in self._views:
            if fmt == "plain":
                self._views[fmt] = (index_dataset(self.claims), {})
            elif fmt == "ltm":
                self._views[fmt] = (index_dataset(reformat.reformat_for_ltm(self.claims)), {})
            elif fmt == "mle":
                base = self.claims
                if all(reformat.is_boolean_claim(c) for c in base):
                    self._views[fmt] = (index_dataset(base), {"cmap": None, "groups": None})
                else:
                    atoms = reformat.reformat_for_ltm(base)
                    cmap = reformat.composite_map(atoms)
                    groups = {k: d for k, (d, _) in cmap.items()}
                    self._views[fmt] = (index_dataset(reformat.reformat_for_mle(atoms)),
                                        {"cmap": cmap, "groups": groups})
            else:
                raise ValueError(fmt)
        return self._views[fmt]


def prepare_dataset(source) -> PreparedDataset:
    if isinstance(source, ScenarioConfig):
        sc = generate_scenario(source)
        return PreparedDataset(source.name, sc.claims, sc.ground_truth_sets())
    if isinstance(source, FileDataset):
        claims = load_claims(source.claims_path)
        return PreparedDataset(source.label, claims, load_ground_truth(source.truth_path))
    if isinstance(source, PreparedDataset):
        return source
    raise SpecError(f"cannot interpret dataset {source!r}")


# --------------------------------------------------------------------------- single runs


@dataclass
class RunOutcome:
    status: str
    metrics: object = None  # MetricsReport
    result: object = None  # TruthResult
    time_ms: float = 0.0
    mem_mb: float | None = None
    error: str = ""


def run_algorithm(prepared: PreparedDataset, info: AlgorithmInfo, params, scope="gold",
                  measure_memory=False, time_limit_s=None) -> RunOutcome:
    """Run one algorithm once and score it; failures become NA / EL outcomes."""
    ds, ctx = prepared.view(info.input_format)
    if measure_memory:
        tracemalloc.start()
    t0 = time.perf_counter()
    try:
        if info.input_format == "mle":
            res = info.run(ds, params, ctx.get("groups"))
        else:
            res = info.run(ds, params)
    except NumericFailure as exc:
        return RunOutcome(STATUS_NA, error=f"{type(exc).__name__}: {exc}")
    except MemoryError as exc:
        return RunOutcome(STATUS_EL, error=f"MemoryError: {exc}")
    finally:
        elapsed = (time.perf_counter() - t0) * 1000.0
        mem = None
        if measure_memory:
            mem = tracemalloc.get_traced_memory()[1] / 2**20
            tracemalloc.stop()
    if time_limit_s is not None and elapsed > time_limit_s * 1000.0:
        return RunOutcome(STATUS_EL, time_ms=elapsed, mem_mb=mem, error="time limit exceeded")
    selection, ds_eval = res.selection, ds
    if info.input_format == "mle" and ctx.get("cmap"):
        # score on the atomic claims the Boolean items were built from
        selection = reformat.selection_from_boolean(selection, ctx["cmap"])
        ds_eval, _ = prepared.view("ltm")
    m = compute_metrics(selection, prepared.truth, ds_eval, scope=scope,
                        iterations=res.iterations, wall_time_ms=elapsed)
    return RunOutcome(STATUS_OK, m, res, elapsed, mem)


# --------------------------------------------------------------------------- aggregation


def ci95_halfwidth(values) -> float:
    x = np.asarray(values, dtype=float)
    if len(x) < 2:
        return 0.0
    return float(stats.t.ppf(0.975, len(x) - 1) * x.std(ddof=1) / math.sqrt(len(x)))


def _mean(vals):
    vals = [v for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


@dataclass
class ReportRow:
    dataset: str
    algorithm: str
    params: str
    precision: float | None = None
    precision_std: float | None = None
    precision_ci95: float | None = None
    accuracy: float | None = None
    recall: float | None = None
    specificity: float | None = None
    iterations: float | None = None
    time_ms: float | None = None
    mem_mb: float | None = None
    status: str = STATUS_OK


def aggregate(dataset: str, algorithm: str, params: str, outcomes: list[RunOutcome]) -> ReportRow:
    """Mean metrics over repetitions; any failed repetition marks the whole cell."""
    failed = [o for o in outcomes if o.status != STATUS_OK]
    if failed:
        return ReportRow(dataset, algorithm, params, status=failed[0].status)
    ms = [o.metrics for o in outcomes]
    prec = [m.precision for m in ms if m.precision is not None]
    mems = [o.mem_mb for o in outcomes if o.mem_mb is not None]
    return ReportRow(
        dataset, algorithm, params,
        precision=_mean(prec),
        precision_std=float(np.std(prec, ddof=1)) if len(prec) > 1 else (0.0 if prec else None),
        precision_ci95=ci95_halfwidth(prec) if prec else None,
        accuracy=_mean(m.accuracy for m in ms),
        recall=_mean(m.recall for m in ms),
        specificity=_mean(m.specificity for m in ms),
        iterations=_mean(m.iterations for m in ms),
        time_ms=_mean(o.time_ms for o in outcomes),
        mem_mb=max(mems) if mems else None,
    )


# --------------------------------------------------------------------------- experiments


@dataclass
class AlgorithmSpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentSpec:
    datasets: list
    algorithms: list  # names or AlgorithmSpec
    repetitions: int = 1
    output: str | None = None
    iteration_cap: int = MAX_ITERATIONS
    delta: float = DEFAULT_DELTA
    seed: int = 0
    scope: str = "gold"
    measure_memory: bool = False
    time_limit_s: float | None = None
    workers: int | None = None

    def normalized_algorithms(self) -> list[AlgorithmSpec]:
        out = []
        for a in self.algorithms:
            out.append(a if isinstance(a, AlgorithmSpec) else AlgorithmSpec(str(a)))
        return out

    def validate(self):
        if not self.datasets:
            raise SpecError("experiment has no datasets")
        if not self.algorithms:
            raise SpecError("experiment has no algorithms")
        if self.repetitions < 1:
            raise SpecError("repetitions must be >= 1")
        for a in self.normalized_algorithms():
            resolve_algorithm(a.name)


def run_cell(prepared: PreparedDataset, alg: AlgorithmSpec, spec: ExperimentSpec) -> ReportRow:
    info = resolve_algorithm(alg.name)
    overrides = dict(alg.params)
    reps = spec.repetitions
    if info.name == "LTM":
        # LTM repeats over its own ``runs`` count unless the experiment asks for more
        runs = overrides.pop("runs", None)
        base = build_params(info, overrides, spec.delta, spec.iteration_cap, spec.seed)
        reps = max(reps, runs if runs is not None else base.runs)
    else:
        base = build_params(info, overrides, spec.delta, spec.iteration_cap, spec.seed)
    outcomes = []
    for r in range(reps):
        params = base
        if info.stochastic:
            params = dataclasses.replace(base, seed=base.seed + r)
        try:
            o = run_algorithm(prepared, info, params, spec.scope, spec.measure_memory, spec.time_limit_s)
        except Exception as exc:  # one broken cell must not abort the matrix
            logger.exception("%s on %s failed", info.name, prepared.name)
            o = RunOutcome(STATUS_NA, error=f"{type(exc).__name__}: {exc}")
        outcomes.append(o)
        if o.status != STATUS_OK:
            logger.warning("%s on %s: %s (%s)", info.name, prepared.name, o.status, o.error)
            break
    digest = params_digest(base)
    if info.name == "LTM":
        digest = f"{digest};runs={reps}" if digest != "default" else f"runs={reps}"
    return aggregate(prepared.name, info.name, digest, outcomes)


def _dataset_rows(args):
    source, spec = args
    prepared = prepare_dataset(source)
    return [run_cell(prepared, alg, spec) for alg in spec.normalized_algorithms()]


def worker_count(spec: ExperimentSpec) -> int:
    if spec.workers is not None:
        return max(1, int(spec.workers))
    env = os.environ.get(WORKERS_ENV)
    return max(1, int(env)) if env else 1


def run_experiment(spec: ExperimentSpec) -> list[ReportRow]:
    """One row per (dataset, algorithm), in input order regardless of worker count."""
    spec.validate()
    jobs = [(d, spec) for d in spec.datasets]
    n = worker_count(spec)
    if n == 1 or len(jobs) == 1:
        per_dataset = [_dataset_rows(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            per_dataset = list(pool.map(_dataset_rows, jobs))
    rows = [r for group in per_dataset for r in group]
    if spec.output:
        from .report import emit_report

        emit_report(rows, spec.output)
    return rows


def sweep_distinct(base: ScenarioConfig, algorithms, distinct_values=range(2, 21), seeds=range(10),
                   **spec_kw) -> list[tuple[int, str, float | None]]:
    """Mean precision per (distinct-value count, algorithm) across seeds."""
    out = []
    for k in distinct_values:
        configs = [dataclasses.replace(base, max_distinct=k, seed=s) for s in seeds]
        rows = run_experiment(ExperimentSpec(configs, list(algorithms), **spec_kw))
        by_alg: dict[str, list] = {}
        for r in rows:
            by_alg.setdefault(r.algorithm, []).append(r.precision if r.status == STATUS_OK else None)
        for alg, vals in by_alg.items():
            out.append((k, alg, _mean(vals)))
    return out
