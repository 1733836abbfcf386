"""Small input-validation helpers in the spirit of ``sklearn.utils.validation``."""

import numbers

import numpy as np
from sklearn.utils import check_array

from .exceptions import DomainError, InsufficientDataError, ValidationError


def as_1d_float(x, name="x", min_length=1):
    """Return ``x`` as a finite 1-d float64 array of at least ``min_length``."""
    arr = check_array(
        np.asarray(x, dtype=float).reshape(-1) if np.ndim(x) == 0 else x,
        ensure_2d=False,
        dtype=np.float64,
        ensure_all_finite=True,
        ensure_min_samples=0,
        input_name=name,
    )
    if arr.ndim != 1:
        raise ValidationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise InsufficientDataError(
            f"{name} needs at least {min_length} values, got {arr.size}"
        )
    return arr


def check_event_times(times, name="times", min_length=1):
    """Validate a strictly increasing, non-negative event-time array."""
    t = as_1d_float(times, name=name, min_length=min_length)
    if t.size and t[0] < 0:
        raise ValidationError(f"{name} must be non-negative")
    if np.any(np.diff(t) <= 0):
        raise ValidationError(f"{name} must be strictly increasing")
    return t


def check_scalar(x, name, *, lower=None, upper=None, strict_lower=False):
    """Check that ``x`` is a real number inside the given bounds and return it as float."""
    if isinstance(x, bool) or not isinstance(x, numbers.Real):
        raise ValidationError(f"{name} must be a real number, got {type(x).__name__}")
    x = float(x)
    if not np.isfinite(x):
        raise ValidationError(f"{name} must be finite")
    if lower is not None:
        if strict_lower and x <= lower:
            raise DomainError(f"{name} must be > {lower}, got {x}")
        if not strict_lower and x < lower:
            raise DomainError(f"{name} must be >= {lower}, got {x}")
    if upper is not None and x > upper:
        raise DomainError(f"{name} must be <= {upper}, got {x}")
    return x
