"""Prior constructions and theoretical rate schedules.

Covers the three prior families the convergence results are stated for:

* spline-coefficient priors — i.i.d. standard normal coordinates, or a
  generalized coordinate law with everywhere-positive density and tails
  ``Pr(|b| > M) <~ exp(-M^rho)`` for some rho > 1, with either a fixed or
  a geometric basis dimension;
* the rescaled squared-exponential Gaussian field, where the d-th power of
  the rescaling variable is Gamma distributed;
* k-fold integrated Brownian motion released at zero by independent
  Gaussian polynomial terms.

The rate calculators return the theoretical contraction rates and basis
dimension schedules for each family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln
from scipy.stats import gennorm

from ._validation import as_rng, check_int_at_least, check_positive

JITTER_START = 1e-10
JITTER_MAX = 1e-6


# ---------------------------------------------------------------------------
# Configuration records.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplinePriorConfig:
    """Coefficient and dimension laws for a spline prior.

    ``coefficient_law`` is "normal" (standard normal coordinates) or
    "generalized" (density proportional to exp(-|b|^rho), rho > 1).
    ``dimension_law`` is "fixed" or "geometric" with parameter
    ``p_geometric`` in (0, 1).
    """

    coefficient_law: str = "normal"
    rho: float = 2.0
    dimension_law: str = "fixed"
    p_geometric: Optional[float] = None

    def __post_init__(self):
        if self.coefficient_law not in ("normal", "generalized"):
            raise ValueError(f"unknown coefficient law {self.coefficient_law!r}")
        if self.coefficient_law == "generalized" and not self.rho > 1.0:
            raise ValueError("generalized law requires rho > 1")
        if self.dimension_law not in ("fixed", "geometric"):
            raise ValueError(f"unknown dimension law {self.dimension_law!r}")
        if self.dimension_law == "geometric":
            if self.p_geometric is None or not 0.0 < self.p_geometric < 1.0:
                raise ValueError("geometric dimension law requires "
                                 "p_geometric in (0, 1)")


@dataclass(frozen=True, eq=False)
class GPPriorConfig:
    """A Gaussian-process prior evaluated on a grid in [0,1]^d.

    ``kind`` is "rescaled-se" (squared-exponential field with random
    length scale; the d-th power of the scale is Gamma(shape, rate)) or
    "integrated-bm" (``fold_count``-fold integrated Brownian motion plus
    polynomial release terms).
    """

    kind: str
    grid: np.ndarray
    gamma_shape: float = 1.0
    gamma_rate: float = 1.0
    fold_count: int = 0
    jitter: float = JITTER_START

    def __post_init__(self):
        if self.kind not in ("rescaled-se", "integrated-bm"):
            raise ValueError(f"unknown GP prior kind {self.kind!r}")
        grid = np.asarray(self.grid, dtype=float)
        if grid.size == 0:
            raise ValueError("grid must be nonempty")
        if grid.min() < 0.0 or grid.max() > 1.0:
            raise ValueError("grid points must lie in [0,1]^d")
        object.__setattr__(self, "grid", grid)
        check_positive(self.gamma_shape, "gamma_shape")
        check_positive(self.gamma_rate, "gamma_rate")
        if self.fold_count < 0:
            raise ValueError("fold_count must be >= 0")
        if self.jitter < 0:
            raise ValueError("jitter must be >= 0")

    @property
    def dim(self) -> int:
        grid = np.asarray(self.grid)
        return grid.shape[1] if grid.ndim == 2 else 1


@dataclass(frozen=True)
class RateSpec:
    """Smoothness and prior family indexing a contraction rate.

    ``alpha`` and ``gamma`` are the Holder exponents of the mean and of
    the log variance; both must be at least 1/2.  ``k_eta``/``k_f`` are
    the integration fold counts, required for the integrated Brownian
    motion family.
    """

    alpha: float
    gamma: float
    d: int = 1
    prior_kind: str = "spline"
    k_eta: Optional[int] = None
    k_f: Optional[int] = None

    def __post_init__(self):
        if self.alpha < 0.5 or self.gamma < 0.5:
            raise ValueError("alpha and gamma must be >= 1/2")
        check_int_at_least(self.d, 1, "d")
        if self.prior_kind not in ("spline", "rescaled-se", "integrated-bm"):
            raise ValueError(f"unknown prior kind {self.prior_kind!r}")
        if self.prior_kind == "integrated-bm":
            if self.k_eta is None or self.k_f is None:
                raise ValueError("integrated-bm rates need k_eta and k_f")
            check_int_at_least(self.k_eta, 0, "k_eta")
            check_int_at_least(self.k_f, 0, "k_f")


# ---------------------------------------------------------------------------
# Rates and dimension schedules.
# ---------------------------------------------------------------------------

def dimension_schedule(spec: RateSpec, n: int) -> int:
    """Basis dimension balancing approximation bias and prior mass:
    round of min{(n/log n)^{1/(1+2 alpha)}, n^{1/(2+2 gamma)}}, at least 1.
    Rounds half up."""
    n = check_int_at_least(n, 2, "n")
    value = min((n / math.log(n)) ** (1.0 / (1.0 + 2.0 * spec.alpha)),
                n ** (1.0 / (2.0 + 2.0 * spec.gamma)))
    return max(1, int(math.floor(value + 0.5)))


def dimension_cap(spec: RateSpec, n: int) -> int:
    """Sieve dimension cap: floor of the same min expression."""
    n = check_int_at_least(n, 2, "n")
    value = min((n / math.log(n)) ** (1.0 / (1.0 + 2.0 * spec.alpha)),
                n ** (1.0 / (2.0 + 2.0 * spec.gamma)))
    return max(1, int(math.floor(value)))


def contraction_rate(spec: RateSpec, n: int) -> float:
    """Theoretical posterior contraction rate for the given prior family.

    spline:         max{(n/log n)^{-a/(1+2a)}, n^{-g/(2+2g)}}
    rescaled-se:    max over k in {a, g} of
                    n^{-k/(d+2k)} (log n)^{(d+1)k/(2k+d)}
    integrated-bm:  max{n^{-a/(2 k_eta + 2)}, n^{-g/(2 k_f + 2)}}
    """
    n = check_int_at_least(n, 2, "n")
    a, g, d = spec.alpha, spec.gamma, spec.d
    if spec.prior_kind == "spline":
        return max((n / math.log(n)) ** (-a / (1.0 + 2.0 * a)),
                   n ** (-g / (2.0 + 2.0 * g)))
    if spec.prior_kind == "rescaled-se":
        def term(k):
            return n ** (-k / (d + 2.0 * k)) \
                * math.log(n) ** ((d + 1.0) * k / (2.0 * k + d))
        return max(term(a), term(g))
    return max(n ** (-a / (2.0 * spec.k_eta + 2.0)),
               n ** (-g / (2.0 * spec.k_f + 2.0)))


def solve_geometric_p(k_n: int, target: float, tol: float = 1e-12) -> float:
    """Solve p^{k_n - 1} (1 - p) = target for the smaller root in (0, 1).

    The smaller root is the one for which the dimension tail mass
    ``p^{k_n}`` stays below the target itself.  Raises if the target
    exceeds the maximum of the left-hand side.
    """
    k_n = check_int_at_least(k_n, 1, "k_n")
    if not 0.0 < target < 1.0:
        raise ValueError("target must be in (0, 1)")
    if k_n == 1:
        return 1.0 - target

    def lhs(p):
        return p ** (k_n - 1) * (1.0 - p)

    p_star = (k_n - 1.0) / k_n
    if target > lhs(p_star):
        raise ValueError(f"target {target} exceeds the maximum "
                         f"{lhs(p_star)} attainable with k_n={k_n}")
    lo, hi = 0.0, p_star
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lhs(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Spline-coefficient priors.
# ---------------------------------------------------------------------------

def sample_coefficients(config: SplinePriorConfig, size, rng) -> np.ndarray:
    """Draw i.i.d. coordinates from the coefficient law."""
    rng = as_rng(rng)
    if config.coefficient_law == "normal":
        return rng.standard_normal(size)
    return gennorm.rvs(config.rho, size=size, random_state=rng)


def sample_spline_prior(config: SplinePriorConfig, basis, rng) -> np.ndarray:
    """Draw a coefficient vector for the given basis from the prior."""
    return sample_coefficients(config, basis.dim, rng)


def coefficient_log_prior(config: SplinePriorConfig, coeffs: np.ndarray) -> float:
    """Log density of a coefficient vector under the i.i.d. law."""
    coeffs = np.asarray(coeffs, dtype=float)
    if config.coefficient_law == "normal":
        return float(-0.5 * coeffs @ coeffs
                     - 0.5 * coeffs.size * np.log(2.0 * np.pi))
    rho = config.rho
    log_norm = np.log(rho / 2.0) - gammaln(1.0 / rho)
    return float(coeffs.size * log_norm - np.sum(np.abs(coeffs) ** rho))


def sample_dimension_geometric(p: float, rng) -> int:
    """Draw a basis dimension J >= 1 with Pr(J = k) = p^{k-1} (1 - p)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    return int(as_rng(rng).geometric(1.0 - p))


def sup_tail_bound(dim: int, threshold: float, rho: float = 2.0) -> float:
    """Union-plus-Chernoff bound J * exp(-M^rho / 2) on the probability
    that the sup of a coefficient-sampled spline exceeds M (the sup never
    exceeds the largest coefficient magnitude)."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    return dim * math.exp(-threshold ** rho / 2.0)


# ---------------------------------------------------------------------------
# Gaussian-process priors.
# ---------------------------------------------------------------------------

def squared_exp_kernel(s, t) -> np.ndarray:
    """exp(-||s - t||^2), the squared-exponential covariance."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    diff = s - t
    if diff.ndim <= 1:
        return np.exp(-(diff * diff if diff.ndim == 0 else diff @ diff))
    return np.exp(-np.sum(diff * diff, axis=-1))


def squared_exp_cov(points: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Covariance matrix exp(-scale^2 ||x_i - x_j||^2) on a point set."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    sq = np.sum(pts * pts, axis=1)
    dist_sq = sq[:, None] + sq[None, :] - 2.0 * pts @ pts.T
    return np.exp(-scale ** 2 * np.maximum(dist_sq, 0.0))


def _chol_with_jitter(cov: np.ndarray, jitter: float) -> tuple[np.ndarray, float]:
    """Cholesky factor with diagonal jitter escalated tenfold up to the cap."""
    eye = np.eye(cov.shape[0])
    while jitter <= JITTER_MAX:
        try:
            return np.linalg.cholesky(cov + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter = JITTER_START if jitter == 0.0 else 10.0 * jitter
    raise RuntimeError(f"covariance factorization failed at jitter {jitter:g}")


@dataclass(frozen=True, eq=False)
class GPPath:
    """A Gaussian-process draw on the config grid."""

    values: np.ndarray
    scale: Optional[float] = None
    jitter: float = 0.0


def sample_rescaled_se_path(config: GPPriorConfig, rng,
                            scale: Optional[float] = None) -> GPPath:
    """Draw a rescaled squared-exponential path on the grid.

    The rescaling variable A satisfies A^d ~ Gamma(shape, rate); passing
    ``scale`` conditions on a fixed A instead.  The path is a centered
    Gaussian vector with covariance exp(-A^2 ||x_i - x_j||^2) plus the
    escalating diagonal jitter needed for factorization.
    """
    if config.kind != "rescaled-se":
        raise ValueError("config is not a rescaled-se prior")
    rng = as_rng(rng)
    if scale is None:
        g = rng.gamma(config.gamma_shape, 1.0 / config.gamma_rate)
        scale = g ** (1.0 / config.dim)
    chol, jitter = _chol_with_jitter(squared_exp_cov(config.grid, scale),
                                     config.jitter)
    values = chol @ rng.standard_normal(len(config.grid))
    return GPPath(values=values, scale=float(scale), jitter=jitter)


def _check_uniform_unit_grid(grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("integrated-bm needs a one-dimensional grid")
    steps = np.diff(grid)
    if grid[0] != 0.0 or not np.allclose(steps, steps[0]):
        raise ValueError("integrated-bm needs a uniform grid starting at 0")
    return grid


def sample_integrated_bm(config: GPPriorConfig, rng) -> GPPath:
    """Draw a k-fold integrated Brownian motion with polynomial release.

    Simulates standard Brownian motion on the grid, integrates it
    ``fold_count`` times with the cumulative trapezoid rule, and adds
    independent standard normal terms Z_i x^i / i! for i = 0..fold_count,
    so the path at zero equals Z_0.
    """
    if config.kind != "integrated-bm":
        raise ValueError("config is not an integrated-bm prior")
    from scipy.integrate import cumulative_trapezoid

    rng = as_rng(rng)
    grid = _check_uniform_unit_grid(config.grid)
    dx = grid[1] - grid[0]
    increments = np.sqrt(dx) * rng.standard_normal(len(grid) - 1)
    path = np.concatenate([[0.0], np.cumsum(increments)])
    for _ in range(config.fold_count):
        path = cumulative_trapezoid(path, grid, initial=0.0)
    release = rng.standard_normal(config.fold_count + 1)
    for i, z in enumerate(release):
        path = path + z * grid ** i / math.factorial(i)
    return GPPath(values=path)
