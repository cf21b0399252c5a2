"""Dense ReLU network trained with Adam on a MAPE + RMSE objective.

Inputs are z-scored with training statistics and labels are divided by their
training mean, so both loss terms are of order one. Hidden layers use ReLU;
the head is linear and predictions are clamped to a small positive floor.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ValidationError
from ..validation import check_features, check_training_data

LATENCY_FLOOR_MS = 1e-6
HIDDEN = (128, 64, 32, 16)


def init_params(n_features, hidden, rng):
    """He-normal weights, zero hidden biases, head bias 1 (the scaled label mean)."""
    widths = [n_features, *hidden, 1]
    params = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        W = rng.normal(0.0, np.sqrt(2.0 / max(fan_in, 1)), size=(fan_in, fan_out))
        params.append([W, np.zeros(fan_out)])
    params[-1][1][:] = 1.0
    return params


def forward(params, Z):
    """Return the network output and the per-layer (input, pre-activation) cache."""
    h = Z
    cache = []
    last = len(params) - 1
    for k, (W, b) in enumerate(params):
        a = h @ W + b
        cache.append((h, a))
        h = a if k == last else np.maximum(a, 0.0)
    return h[:, 0], cache


def loss_terms(out, ys):
    e = out - ys
    mape = np.mean(np.abs(e) / ys)
    rmse = np.sqrt(np.mean(e * e))
    return mape, rmse


def loss_and_grad(params, Z, ys):
    """Combined loss ``mean(|e|/y) + sqrt(mean(e**2))`` and its gradient.

    ``Z`` are standardized features and ``ys`` mean-scaled labels.
    Gradients come back in the same nested ``[[W, b], ...]`` layout as params.
    """
    out, cache = forward(params, Z)
    n = ys.shape[0]
    e = out - ys
    mape, rmse = loss_terms(out, ys)
    d_out = np.sign(e) / (n * ys)
    if rmse > 0:
        d_out = d_out + e / (n * rmse)
    delta = d_out[:, None]
    grads = [None] * len(params)
    for k in range(len(params) - 1, -1, -1):
        h_in, _ = cache[k]
        W = params[k][0]
        grads[k] = [h_in.T @ delta, delta.sum(axis=0)]
        if k:
            delta = (delta @ W.T) * (cache[k - 1][1] > 0)
    return mape + rmse, grads


def flatten(params):
    return np.concatenate([p.ravel() for layer in params for p in layer])


def unflatten(vector, like):
    out, pos = [], 0
    for W, b in like:
        layer = []
        for p in (W, b):
            layer.append(vector[pos:pos + p.size].reshape(p.shape))
            pos += p.size
        out.append(layer)
    return out


class MLPRegressor(RegressorMixin, BaseEstimator):
    """Fully connected latency regressor.

    Parameters
    ----------
    hidden_layer_sizes : tuple of int, default=(128, 64, 32, 16)
    learning_rate : float, default=1e-3
    beta1, beta2, epsilon : float
        Adam moment decay rates and denominator guard.
    epochs : int, default=200
    batch_size : int, default=32
    random_state : int, default=0

    Attributes
    ----------
    params_ : list of [W, b]
    x_mean_, x_scale_ : ndarray
        Feature standardization; zero-variance features get scale 1.
    y_scale_ : float
        Training label mean.
    loss_curve_ : list of float
        Full-training-set loss before training and after every epoch.
    """

    def __init__(self, hidden_layer_sizes=HIDDEN, learning_rate=1e-3, beta1=0.9,
                 beta2=0.999, epsilon=1e-8, epochs=200, batch_size=32,
                 random_state=0):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.epochs = epochs
        self.batch_size = batch_size
        self.random_state = random_state

    def fit(self, X, y):
        X, y = check_training_data(X, y, min_samples=2, positive_y=True)
        if self.epochs < 0 or self.batch_size < 1:
            raise ValidationError("epochs must be >= 0 and batch_size >= 1")
        rng = np.random.default_rng(self.random_state)
        self.x_mean_ = X.mean(axis=0)
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        self.x_scale_ = scale
        self.y_scale_ = float(y.mean())
        self.n_features_in_ = X.shape[1]
        Z = (X - self.x_mean_) / self.x_scale_
        ys = y / self.y_scale_

        params = init_params(X.shape[1], tuple(self.hidden_layer_sizes), rng)
        # one flat buffer with per-layer views so Adam updates are a single op
        theta = flatten(params)
        params = unflatten(theta, params)
        m = np.zeros_like(theta)
        v = np.zeros_like(theta)
        b1, b2, lr, eps = self.beta1, self.beta2, self.learning_rate, self.epsilon
        n = X.shape[0]
        step = 0
        curve = [float(sum(loss_terms(forward(params, Z)[0], ys)))]
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                idx = order[start:start + self.batch_size]
                _, grads = loss_and_grad(params, Z[idx], ys[idx])
                g = flatten(grads)
                step += 1
                m *= b1
                m += (1.0 - b1) * g
                v *= b2
                v += (1.0 - b2) * (g * g)
                theta -= (lr / (1.0 - b1**step)) * m / (
                    np.sqrt(v / (1.0 - b2**step)) + eps
                )
            curve.append(float(sum(loss_terms(forward(params, Z)[0], ys))))
        self.params_ = params
        self.loss_curve_ = curve
        if not np.all(np.isfinite(flatten(params))):
            raise ValidationError("MLP training diverged (non-finite parameters)")
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_features(X, self.n_features_in_)
        out, _ = forward(self.params_, (X - self.x_mean_) / self.x_scale_)
        return np.maximum(out * self.y_scale_, LATENCY_FLOOR_MS)


def fit_mlp(X, y, hyper=None):
    return MLPRegressor(**(hyper or {})).fit(X, y)


def predict_mlp(model, x):
    return float(model.predict(x)[0])
