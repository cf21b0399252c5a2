"""Median-of-three ensemble and the per-(anchor, target) predictor registry."""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ValidationError
from .features import vectorize
from .regressors import (
    LATENCY_FLOOR_MS,
    ForestRegressor,
    MLPRegressor,
    OLSRegressor,
)
from .validation import check_features, check_training_data

BASE_MODELS = ("linear", "forest", "mlp")
DEFAULT_MIN_ROWS = 10


def median3(a, b, c):
    """Middle value of three finite numbers; always returns one of the inputs."""
    for v in (a, b, c):
        if not math.isfinite(v):
            raise ValidationError(f"median3 needs finite inputs, got {v!r}")
    if a > b:
        a, b = b, a
    if b > c:
        b = c
    return a if a > b else b


class BaseFitError(ValidationError):
    def __init__(self, model, exc):
        self.model = model
        super().__init__(f"{model}: {exc}")


class MedianEnsembleRegressor(RegressorMixin, BaseEstimator):
    """Fit OLS, a random forest and an MLP on the same rows; predict their median.

    Parameters
    ----------
    forest_params, mlp_params : dict or None
        Forwarded to :class:`ForestRegressor` / :class:`MLPRegressor`.
    random_state : int
        Forest uses ``random_state``, the MLP ``random_state + 1``.
    min_rows : int
        Refuse to fit on fewer rows.
    """

    def __init__(self, forest_params=None, mlp_params=None, random_state=0,
                 min_rows=DEFAULT_MIN_ROWS):
        self.forest_params = forest_params
        self.mlp_params = mlp_params
        self.random_state = random_state
        self.min_rows = min_rows

    def _make_estimators(self):
        seed = int(self.random_state)
        return {
            "linear": OLSRegressor(),
            "forest": ForestRegressor(**{**(self.forest_params or {}),
                                         "random_state": seed}),
            "mlp": MLPRegressor(**{**(self.mlp_params or {}),
                                   "random_state": seed + 1}),
        }

    def fit(self, X, y):
        X, y = check_training_data(X, y)
        if X.shape[0] < self.min_rows:
            raise ValidationError(
                f"need at least {self.min_rows} rows, got {X.shape[0]}"
            )
        fitted = {}
        for name, est in self._make_estimators().items():
            try:
                fitted[name] = est.fit(X, y)
            except ValidationError as exc:
                raise BaseFitError(name, exc) from exc
        self.estimators_ = fitted
        self.n_features_in_ = X.shape[1]
        return self

    def predict_base(self, X):
        """Per-model predictions, shape ``(n_samples, 3)`` in BASE_MODELS order."""
        check_is_fitted(self, "estimators_")
        X = check_features(X, self.n_features_in_)
        return np.column_stack(
            [np.asarray(self.estimators_[name].predict(X), dtype=np.float64)
             for name in BASE_MODELS]
        )

    def predict(self, X):
        base = self.predict_base(X)
        med = np.array([median3(*row) for row in base])
        return np.maximum(med, LATENCY_FLOOR_MS)


@dataclass(frozen=True)
class EnsemblePredictor:
    """A trained ``anchor -> target`` latency model with its vocabulary."""

    anchor: str
    target: str
    model: MedianEnsembleRegressor
    vocabulary: object
    train_meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.anchor == self.target:
            raise ValidationError("anchor and target must differ")
        if self.model.n_features_in_ != len(self.vocabulary):
            raise ValidationError("model and vocabulary lengths disagree")

    @property
    def pair(self):
        return (self.anchor, self.target)

    def features(self, x):
        if isinstance(x, dict):
            return vectorize(x, self.vocabulary)
        return np.asarray(x, dtype=np.float64)

    def predict(self, x):
        """Latency in ms for one op map or feature vector."""
        return float(self.model.predict(self.features(x))[0])

    def predict_base(self, x):
        return dict(zip(BASE_MODELS, self.model.predict_base(self.features(x))[0].tolist()))


def train_pair(dataset, config=None, seed=0):
    """Fit a :class:`EnsemblePredictor` on one :class:`PairedDataset`.

    ``config`` may carry ``forest``, ``mlp`` (estimator keyword dicts) and
    ``min_rows``.
    """
    config = config or {}
    model = MedianEnsembleRegressor(
        forest_params=config.get("forest"),
        mlp_params=config.get("mlp"),
        random_state=seed,
        min_rows=config.get("min_rows", DEFAULT_MIN_ROWS),
    ).fit(dataset.X, dataset.y)
    meta = {"n_rows": len(dataset), "seed": int(seed)}
    if config.get("trained_at") is not None:
        meta["trained_at"] = config["trained_at"]
    return EnsemblePredictor(dataset.anchor, dataset.target, model,
                             dataset.vocabulary, meta)


def predict(predictor, x):
    return predictor.predict(x)


class PredictorRegistry:
    """Immutable mapping ``(anchor, target) -> EnsemblePredictor``."""

    def __init__(self, predictors=()):
        table = {}
        for p in predictors:
            if p.anchor == p.target:
                raise ValidationError("registry cannot hold self-pairs")
            if p.pair in table:
                raise ValidationError(f"duplicate pair {p.pair}")
            table[p.pair] = p
        self._table = dict(sorted(table.items()))

    def __getitem__(self, pair):
        return self._table[tuple(pair)]

    def __contains__(self, pair):
        return tuple(pair) in self._table

    def __len__(self):
        return len(self._table)

    def __iter__(self):
        return iter(self._table.values())

    def pairs(self):
        return list(self._table)

    def get(self, anchor, target):
        return self._table.get((anchor, target))
