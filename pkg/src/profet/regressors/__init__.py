"""Base learners for the median ensemble, plus the order-1 latency baseline."""

from .forest import ForestRegressor, Tree, fit_forest, predict_forest
from .linear import OLSRegressor, ScalarBaseline, fit_baseline, fit_ols, predict_linear
from .mlp import LATENCY_FLOOR_MS, MLPRegressor, fit_mlp, predict_mlp

__all__ = [
    "ForestRegressor",
    "LATENCY_FLOOR_MS",
    "MLPRegressor",
    "OLSRegressor",
    "ScalarBaseline",
    "Tree",
    "fit_baseline",
    "fit_forest",
    "fit_mlp",
    "fit_ols",
    "predict_forest",
    "predict_linear",
    "predict_mlp",
]
