"""Bagged CART regression forest.

Trees are grown to purity by default with squared-error (variance reduction)
splits over every feature. Equal-gain candidates resolve to the lowest feature
index and then the lowest threshold. Tree ``k`` draws its bootstrap sample
from ``default_rng(random_state ^ k)``, so each tree depends only on its own
index and the forest is reproducible regardless of build order.
"""

from dataclasses import dataclass

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ValidationError
from ..validation import check_features, check_training_data

LEAF = -1


@njit(cache=True)
def _grow(X, y, sample, min_samples_leaf, max_depth):
    n_total = sample.shape[0]
    cap = 2 * n_total + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)

    work = sample.copy()
    scratch = np.empty(n_total, dtype=np.int64)
    # stack rows: start, end, depth, node id
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n_total
    stack[0, 2] = 0
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    n_features = X.shape[1]

    while top > 0:
        top -= 1
        start = stack[top, 0]
        end = stack[top, 1]
        depth = stack[top, 2]
        node = stack[top, 3]
        n = end - start

        ys = np.empty(n, dtype=np.float64)
        for i in range(n):
            ys[i] = y[work[start + i]]
        lo = ys.min()
        hi = ys.max()
        mean = ys.sum() / n
        value[node] = min(max(mean, lo), hi)

        if n < 2 * min_samples_leaf or lo == hi:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        centered = ys - mean
        best_gain = -1.0
        best_feature = -1
        best_threshold = 0.0
        xs = np.empty(n, dtype=np.float64)
        for f in range(n_features):
            for i in range(n):
                xs[i] = X[work[start + i], f]
            order = np.argsort(xs, kind="mergesort")
            total = 0.0
            for i in range(n):
                total += centered[order[i]]
            s_left = 0.0
            for i in range(1, n):
                s_left += centered[order[i - 1]]
                if i < min_samples_leaf or n - i < min_samples_leaf:
                    continue
                a = xs[order[i - 1]]
                b = xs[order[i]]
                if not a < b:
                    continue
                s_right = total - s_left
                gain = s_left * s_left / i + s_right * s_right / (n - i)
                if gain > best_gain:
                    best_gain = gain
                    best_feature = f
                    thr = a + (b - a) / 2.0
                    if not thr < b:
                        thr = a
                    best_threshold = thr

        if best_feature < 0:
            continue

        n_left = 0
        n_right = 0
        for i in range(n):
            s = work[start + i]
            if X[s, best_feature] <= best_threshold:
                work[start + n_left] = s
                n_left += 1
            else:
                scratch[n_right] = s
                n_right += 1
        for i in range(n_right):
            work[start + n_left + i] = scratch[i]

        feature[node] = best_feature
        threshold[node] = best_threshold
        left[node] = n_nodes
        right[node] = n_nodes + 1
        # push right first so the left subtree is numbered depth-first
        stack[top, 0] = start + n_left
        stack[top, 1] = end
        stack[top, 2] = depth + 1
        stack[top, 3] = n_nodes + 1
        top += 1
        stack[top, 0] = start
        stack[top, 1] = start + n_left
        stack[top, 2] = depth + 1
        stack[top, 3] = n_nodes
        top += 1
        n_nodes += 2

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(),
            left[:n_nodes].copy(), right[:n_nodes].copy(), value[:n_nodes].copy())


@njit(cache=True)
def _apply(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0], dtype=np.float64)
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out


@dataclass(frozen=True)
class Tree:
    """Flat array form of a binary regression tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X):
        return _apply(self.feature, self.threshold, self.left, self.right,
                      self.value, X)

    @property
    def n_nodes(self):
        return self.feature.shape[0]

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in
                ("feature", "threshold", "left", "right", "value")}

    @classmethod
    def from_dict(cls, obj):
        ints = {k: np.asarray(obj[k], dtype=np.int64) for k in ("feature", "left", "right")}
        floats = {k: np.asarray(obj[k], dtype=np.float64) for k in ("threshold", "value")}
        return cls(**ints, **floats)


def grow_tree(X, y, sample=None, min_samples_leaf=1, max_depth=None):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if sample is None:
        sample = np.arange(X.shape[0], dtype=np.int64)
    depth = -1 if max_depth is None else int(max_depth)
    return Tree(*_grow(X, y, np.asarray(sample, dtype=np.int64),
                       int(min_samples_leaf), depth))


class ForestRegressor(RegressorMixin, BaseEstimator):
    """Random forest of fully grown CART trees, averaged at prediction.

    Parameters
    ----------
    n_estimators : int, default=100
    max_depth : int or None, default=None
        ``None`` grows until leaves are pure.
    min_samples_leaf : int, default=1
    bootstrap : bool, default=True
    random_state : int, default=0
    """

    def __init__(self, n_estimators=100, max_depth=None, min_samples_leaf=1,
                 bootstrap=True, random_state=0):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.bootstrap = bootstrap
        self.random_state = random_state

    def _check_params(self):
        if self.n_estimators < 1:
            raise ValidationError("n_estimators must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValidationError("min_samples_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValidationError("max_depth must be >= 0 or None")

    def fit(self, X, y):
        self._check_params()
        X, y = check_training_data(X, y)
        n = X.shape[0]
        seed = int(self.random_state)
        trees = []
        for k in range(self.n_estimators):
            if self.bootstrap:
                sample = np.random.default_rng(seed ^ k).integers(0, n, n)
            else:
                sample = np.arange(n)
            trees.append(grow_tree(X, y, sample, self.min_samples_leaf,
                                   self.max_depth))
        self.estimators_ = trees
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "estimators_")
        X = np.ascontiguousarray(check_features(X, self.n_features_in_))
        total = np.zeros(X.shape[0])
        for tree in self.estimators_:
            total += tree.predict(X)
        return total / len(self.estimators_)


def fit_forest(X, y, config=None, seed=0):
    return ForestRegressor(**(config or {}), random_state=seed).fit(X, y)


def predict_forest(model, x):
    return float(model.predict(x)[0])
