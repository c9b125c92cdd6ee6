"""Input checks shared by the estimator wrappers."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .errors import InvalidParameterError


def check_samples(X, min_samples: int = 2) -> np.ndarray:
    """Return ``X`` as a 2D array of sample rows, one series per row.

    Real input goes through :func:`sklearn.utils.check_array`; complex input,
    which sklearn rejects, gets the same shape and finiteness checks here.
    A 1D array is read as a single series.
    """
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if np.iscomplexobj(arr):
        if arr.ndim != 2:
            raise InvalidParameterError(f"expected a 2D array, got {arr.ndim} dimensions")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("input contains NaN or infinity")
        arr = arr.astype(np.complex128)
    else:
        try:
            arr = check_array(arr, dtype=np.float64, ensure_min_samples=1)
        except ValueError as exc:
            raise InvalidParameterError(str(exc)) from None
    if arr.shape[1] < min_samples:
        raise InvalidParameterError(f"each series needs at least {min_samples} samples, got {arr.shape[1]}")
    return arr


def check_domain(domain) -> tuple:
    try:
        a, b = (float(v) for v in domain)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"domain must be a pair of numbers, got {domain!r}") from None
    if not (np.isfinite(a) and np.isfinite(b)) or b <= a:
        raise InvalidParameterError(f"invalid domain {domain!r}")
    return a, b
