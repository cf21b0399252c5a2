import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

# small models for tests that exercise plumbing rather than accuracy
FAST_CONFIG = {
    "forest": {"n_estimators": 5},
    "mlp": {"epochs": 5, "hidden_layer_sizes": (16, 8)},
    "min_rows": 5,
}


class StubRegressor(RegressorMixin, BaseEstimator):
    def __init__(self, value=0.0):
        self.value = value

    def predict(self, X):
        return np.full(np.atleast_2d(X).shape[0], float(self.value))
