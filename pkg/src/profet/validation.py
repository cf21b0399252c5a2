"""Input checks shared by the estimators."""

import numpy as np
from sklearn.utils.validation import check_array, check_X_y

from .exceptions import ValidationError


def check_training_data(X, y, min_samples=1, positive_y=False):
    """Validate a feature matrix and label vector for fitting.

    Returns float64 copies. Raises :class:`ValidationError` on empty or
    non-finite input (instead of sklearn's bare ``ValueError``) so callers can
    distinguish data problems from programming errors.
    """
    try:
        X, y = check_X_y(X, y, dtype=np.float64, y_numeric=True,
                         ensure_min_samples=max(min_samples, 1))
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if positive_y and np.any(y <= 0):
        raise ValidationError("labels must be > 0")
    return X, y


def check_features(X, n_features):
    """Validate a prediction input; a single vector is promoted to one row."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    try:
        X = check_array(X, dtype=np.float64, ensure_min_samples=0)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if X.shape[1] != n_features:
        raise ValidationError(
            f"expected {n_features} features, got {X.shape[1]}"
        )
    return X
