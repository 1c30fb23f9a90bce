"""Test-function construction with certified smoothness, and data generation.

Rough targets come from truncated lacunary cosine series: with amplitudes
2^{-k a} on frequencies 2^k pi the sum is Holder-a for fractional a, and
its best spline approximation error scales like J^{-a}.  Integer
smoothness uses fixed smooth trigonometric representatives instead.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from ._validation import as_rng, check_positive
from .design import DesignSpec
from .model import FunctionPair
from .posterior import Dataset

SERIES_TERMS = 12
FLOOR_GRID = 10_000


def holder_series(alpha: float, n_terms: int = SERIES_TERMS,
                  phases: Optional[np.ndarray] = None) -> Callable:
    """The target sum_{k<=n_terms} 2^{-k alpha} cos(2^k pi x + phase_k)."""
    check_positive(alpha, "alpha")
    ks = np.arange(n_terms + 1)
    amps = 2.0 ** (-ks * alpha)
    freqs = 2.0 ** ks * np.pi
    phis = np.zeros(n_terms + 1) if phases is None \
        else np.asarray(phases, dtype=float)

    def target(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.cos(x[:, None] * freqs[None, :] + phis[None, :]) @ amps

    return target


def _smoothness_representative(exponent: float, rng) -> Callable:
    if float(exponent).is_integer():
        return lambda x: np.sin(2.0 * np.pi * np.atleast_1d(x))
    phases = None if rng is None \
        else as_rng(rng).uniform(0.0, 2.0 * np.pi, SERIES_TERMS + 1)
    return holder_series(exponent, phases=phases)


def make_truth(alpha: float, gamma: float, v_min: float = 0.25,
               seed=None) -> FunctionPair:
    """Construct a truth pair with the requested smoothness levels.

    The mean is a smoothness-``alpha`` representative; the log variance is
    built analogously at smoothness ``gamma``, scaled down, and shifted so
    that the variance never drops below ``v_min``.  A seed randomizes the
    series phases; without one the construction is the canonical series.
    """
    check_positive(alpha, "alpha")
    check_positive(gamma, "gamma")
    check_positive(v_min, "v_min")
    rng = None if seed is None else as_rng(seed)
    eta = _smoothness_representative(alpha, rng)
    f_raw = _smoothness_representative(gamma, rng)
    grid = np.linspace(0.0, 1.0, FLOOR_GRID)
    raw_min = float(np.min(0.5 * f_raw(grid)))
    shift = np.log(v_min) - raw_min

    def f(x):
        return 0.5 * f_raw(x) + shift

    return FunctionPair(eta=eta, f=f, tag="truth",
                        meta={"alpha": alpha, "gamma": gamma,
                              "v_min": v_min, "seed": seed})


def gen_data(truth: FunctionPair, n: int, design, rng) -> Dataset:
    """Generate n responses y_i = eta(x_i) + sqrt(V(x_i)) eps_i.

    ``design`` is a DesignSpec or one of the strings "fixed" (equispaced
    midpoints (i - 1/2)/n) and "uniform" (i.i.d. uniform draws).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = as_rng(rng)
    if design == "fixed":
        x = (np.arange(n) + 0.5) / n
        design = DesignSpec.fixed(x)
    elif design == "uniform":
        design = DesignSpec.uniform()
        x = design.sample(n, rng)
    elif isinstance(design, DesignSpec):
        x = design.points if design.kind == "fixed" else design.sample(n, rng)
        if design.kind == "fixed" and len(x) != n:
            raise ValueError("fixed design size does not match n")
    else:
        raise ValueError(f"unknown design {design!r}")
    noise = rng.standard_normal(n)
    y = np.asarray(truth.eta(x)) + np.sqrt(np.asarray(truth.variance(x))) * noise
    return Dataset(x=np.asarray(x, dtype=float), y=y, design=design,
                   truth=truth)
