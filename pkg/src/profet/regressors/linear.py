"""Least-squares regressors: the ensemble's linear member and the order-1 baseline."""

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ValidationError
from ..validation import check_features, check_training_data

RIDGE_FALLBACK = 1e-8


class OLSRegressor(RegressorMixin, BaseEstimator):
    """Ordinary least squares with an intercept.

    Full-rank problems are solved by QR on the centered design. When the
    centered design is rank deficient (collinear op columns are common in
    profiler features) the fit falls back to ridge with ``ridge_fallback``,
    computed through the SVD, which lands next to the minimum-norm solution.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    intercept_ : float
    rank_deficient_ : bool
    """

    def __init__(self, ridge_fallback=RIDGE_FALLBACK):
        self.ridge_fallback = ridge_fallback

    def fit(self, X, y):
        X, y = check_training_data(X, y)
        x_mean = X.mean(axis=0)
        y_mean = y.mean()
        Xc = X - x_mean
        yc = y - y_mean
        n, d = Xc.shape
        rank = np.linalg.matrix_rank(Xc) if n > 1 and d else 0
        self.rank_deficient_ = rank < d
        if d == 0:
            coef = np.zeros(0)
        elif not self.rank_deficient_:
            q, r = np.linalg.qr(Xc)
            coef = solve_triangular(r, q.T @ yc)
        else:
            u, s, vt = np.linalg.svd(Xc, full_matrices=False)
            coef = vt.T @ ((s / (s**2 + self.ridge_fallback)) * (u.T @ yc))
        self.coef_ = coef
        self.intercept_ = float(y_mean - x_mean @ coef)
        if not (np.all(np.isfinite(self.coef_)) and np.isfinite(self.intercept_)):
            raise ValidationError("least-squares solution is not finite")
        self.n_features_in_ = d
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_features(X, self.n_features_in_)
        return X @ self.coef_ + self.intercept_


class ScalarBaseline(RegressorMixin, BaseEstimator):
    """``target = alpha * anchor_latency + beta``, fitted by least squares.

    The input is the anchor's measured batch latency, not the profile vector.
    With zero variance in the anchor latencies the fit degenerates to
    ``alpha = 0`` and ``beta = mean(target)``.
    """

    def fit(self, X, y):
        x = np.asarray(X, dtype=np.float64).reshape(-1)
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        if x.shape != y.shape:
            raise ValidationError("anchor and target latencies must align")
        if x.size < 2:
            raise ValidationError("baseline needs at least 2 samples")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValidationError("latencies must be finite")
        if np.any(x <= 0) or np.any(y <= 0):
            raise ValidationError("latencies must be positive")
        dx = x - x.mean()
        sxx = dx @ dx
        if sxx == 0:
            self.alpha_ = 0.0
        else:
            self.alpha_ = float(dx @ (y - y.mean()) / sxx)
        self.beta_ = float(y.mean() - self.alpha_ * x.mean())
        return self

    def predict(self, X):
        check_is_fitted(self, "alpha_")
        x = np.asarray(X, dtype=np.float64).reshape(-1)
        return self.alpha_ * x + self.beta_


def fit_ols(X, y):
    return OLSRegressor().fit(X, y)


def predict_linear(model, x):
    return float(model.predict(x)[0])


def fit_baseline(lat_anchor, lat_target):
    return ScalarBaseline().fit(lat_anchor, lat_target)
