"""Truth discovery over conflicting source claims.

Thirteen algorithms (agreement, probabilistic and dependence-aware), a
synthetic scenario generator and an experiment harness that scores them
against a ground truth.
"""

from .core import (
    Claim,
    IndexedDataset,
    MetricsReport,
    TruthResult,
    compute_metrics,
    index_dataset,
)
from .errors import TruthDiscoveryError
from .generator import GeneratedScenario, ScenarioConfig, generate_scenario
from .runner import (
    ALGORITHMS,
    AlgorithmSpec,
    ExperimentSpec,
    FileDataset,
    resolve_algorithm,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "AlgorithmSpec",
    "Claim",
    "ExperimentSpec",
    "FileDataset",
    "GeneratedScenario",
    "IndexedDataset",
    "MetricsReport",
    "ScenarioConfig",
    "TruthDiscoveryError",
    "TruthResult",
    "compute_metrics",
    "generate_scenario",
    "index_dataset",
    "resolve_algorithm",
    "run_experiment",
]
