"""Small input-validation helpers shared across the package."""

from __future__ import annotations

import numpy as np


def as_rng(seed) -> np.random.Generator:
    """Coerce ``seed`` (None, int, SeedSequence, or Generator) to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_unit_interval(x, name: str = "x") -> np.ndarray:
    """Validate that all entries of ``x`` lie in [0, 1] and return an array."""
    arr = np.asarray(x, dtype=float)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got range "
                         f"[{arr.min()}, {arr.max()}]")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not value > 0.0:
        raise ValueError(f"{name} must be positive, got {value}")
    return value


def check_int_at_least(value, minimum: int, name: str) -> int:
    ivalue = int(value)
    if ivalue != value or ivalue < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value}")
    return ivalue
