"""Input validation helpers shared across the package.

All helpers raise ``ValueError`` with the offending field named, so errors
surfacing through the CLI/service point at the exact input.
"""

from __future__ import annotations

import numpy as np


def check_open_unit(x, name, *, upper=1.0):
    """Require a scalar strictly inside (0, upper)."""
    x = float(x)
    if not np.isfinite(x) or not 0.0 < x < upper:
        raise ValueError(f"{name} must lie strictly in (0, {upper}); got {x!r}")
    return x


def check_probability(x, name):
    """Require a scalar in the closed interval [0, 1]."""
    x = float(x)
    if not np.isfinite(x) or not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1]; got {x!r}")
    return x


def check_probability_vector(values, name, *, strict_interior=True):
    """Coerce to a 1-D float array of probabilities."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if strict_interior:
        if np.any(arr <= 0.0) or np.any(arr >= 1.0):
            raise ValueError(f"{name} values must lie strictly in (0, 1)")
    elif np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} values must lie in [0, 1]")
    return arr


def check_increasing(values, name, *, strict=True):
    arr = np.asarray(values, dtype=float)
    diffs = np.diff(arr)
    if strict and np.any(diffs <= 0.0):
        raise ValueError(f"{name} must be strictly increasing")
    if not strict and np.any(diffs < 0.0):
        raise ValueError(f"{name} must be non-decreasing")
    return arr


def check_positive_int(x, name):
    if not isinstance(x, (int, np.integer)) or isinstance(x, bool) or x < 1:
        raise ValueError(f"{name} must be a positive integer; got {x!r}")
    return int(x)


def check_index(x, name, upper, *, lower=1):
    """1-based index in [lower, upper]."""
    x = check_positive_int(x, name)
    if not lower <= x <= upper:
        raise ValueError(f"{name} must lie in [{lower}, {upper}]; got {x}")
    return x


def check_binary_outcomes(outcomes, name="outcomes"):
    arr = np.asarray(outcomes)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError(f"{name} must contain only 0/1 values")
    return arr.astype(int)
