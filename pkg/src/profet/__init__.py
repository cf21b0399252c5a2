"""Predict a training workload's batch latency on one GPU instance from a
profile collected on another."""

from .bundle import load_bundle, save_bundle
from .ensemble import EnsemblePredictor, MedianEnsembleRegressor, PredictorRegistry, train_pair
from .exceptions import (
    BundleChecksumError,
    BundleError,
    BundleVersionError,
    ProfetError,
    TraceParseError,
    ValidationError,
)
from .experiment import ScenarioGrid, cross_instance_eval, enumerate_scenarios, train_registry
from .features import (
    Measurement,
    OpVectorizer,
    OpVocabulary,
    PairedDataset,
    WorkloadScenario,
    assemble_pairs,
    build_vocabulary,
    vectorize,
)
from .metrics import MetricsReport, mape, r2, rmse
from .regressors import ForestRegressor, MLPRegressor, OLSRegressor, ScalarBaseline
from .trace import load_op_map, parse_trace, scrub

__version__ = "0.1.0"

__all__ = [
    "BundleChecksumError", "BundleError", "BundleVersionError", "EnsemblePredictor",
    "ForestRegressor", "MLPRegressor", "Measurement", "MedianEnsembleRegressor",
    "MetricsReport", "OLSRegressor", "OpVectorizer", "OpVocabulary", "PairedDataset",
    "PredictorRegistry", "ProfetError", "ScalarBaseline", "ScenarioGrid",
    "TraceParseError", "ValidationError", "WorkloadScenario", "assemble_pairs",
    "build_vocabulary", "cross_instance_eval", "enumerate_scenarios", "load_bundle",
    "load_op_map", "mape", "parse_trace", "r2", "rmse", "save_bundle", "scrub",
    "train_pair", "train_registry", "vectorize",
]
