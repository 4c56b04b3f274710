"""Input checks shared by the estimator API."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_binary_matrix(X, name="X", n_features=None) -> np.ndarray:
    """2-D array of 0/1 (or bool) values, returned as bool."""
    arr = check_array(X, dtype=None, ensure_2d=True, ensure_min_samples=1, input_name=name)
    if arr.dtype != bool:
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("%s must contain only 0/1 values" % name)
        arr = arr.astype(bool)
    if n_features is not None and arr.shape[1] != n_features:
        raise ValueError("%s has %d features, expected %d" % (name, arr.shape[1], n_features))
    return arr


def check_probability(x, name, closed_low=False, closed_high=False) -> float:
    x = float(x)
    lo_ok = x >= 0.0 if closed_low else x > 0.0
    hi_ok = x <= 1.0 if closed_high else x < 1.0
    if not (lo_ok and hi_ok):
        raise ValueError("%s=%r is outside its allowed range" % (name, x))
    return x


def check_positive_int(x, name, minimum=1) -> int:
    if isinstance(x, bool) or int(x) != x or x < minimum:
        raise ValueError("%s must be an integer >= %d, got %r" % (name, minimum, x))
    return int(x)
