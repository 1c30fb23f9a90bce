"""Covariate designs: fixed point sets and sampling distributions on [0,1]^d.

A design plays the role of the averaging measure in every distance and
divergence: the empirical measure of the design points in the fixed case,
or the covariate distribution itself in the random case.  Averages against
a continuous design are computed with fixed-node quadrature (Gauss-Legendre
in one dimension, a scrambled-free Sobol tensor sample for d >= 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.stats import qmc

from ._validation import as_rng, check_unit_interval

GL_NODES_1D = 256
SOBOL_LOG2_POINTS = 14


def _gauss_legendre_unit(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights rescaled from [-1,1] to [0,1]."""
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True, eq=False)
class DesignSpec:
    """Covariate law Q: a fixed design or a distribution on [0,1]^d.

    ``kind`` is "fixed" (empirical measure of ``points``) or "random".
    Random designs default to the uniform distribution; a custom law can
    be supplied through ``density`` (for quadrature weights) and
    ``sampler`` (for data generation).
    """

    kind: str
    dim: int = 1
    points: Optional[np.ndarray] = None
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sampler: Optional[Callable[[int, np.random.Generator], np.ndarray]] = None
    n_nodes: int = GL_NODES_1D
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("fixed", "random"):
            raise ValueError(f"unknown design kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError("design dimension must be >= 1")
        if self.kind == "fixed":
            if self.points is None or len(self.points) == 0:
                raise ValueError("fixed design needs a nonempty point set")
            pts = check_unit_interval(self.points, "design points")
            object.__setattr__(self, "points", pts)

    @classmethod
    def fixed(cls, points) -> "DesignSpec":
        points = np.asarray(points, dtype=float)
        dim = points.shape[1] if points.ndim == 2 else 1
        return cls(kind="fixed", dim=dim, points=points)

    @classmethod
    def uniform(cls, dim: int = 1, n_nodes: int = GL_NODES_1D) -> "DesignSpec":
        return cls(kind="random", dim=dim, n_nodes=n_nodes)

    @property
    def n_points(self) -> int:
        return 0 if self.points is None else len(self.points)

    def nodes_and_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes and probability weights for averaging over Q.

        Fixed designs average exactly over the design points.  Weights
        always sum to one.
        """
        if "nodes" in self._cache:
            return self._cache["nodes"]
        if self.kind == "fixed":
            n = len(self.points)
            out = (self.points, np.full(n, 1.0 / n))
        elif self.dim == 1:
            x, w = _gauss_legendre_unit(self.n_nodes)
            if self.density is not None:
                w = w * self.density(x)
                w = w / w.sum()
            out = (x, w)
        else:
            m = 2 ** SOBOL_LOG2_POINTS
            x = qmc.Sobol(self.dim, scramble=False).random(m)
            w = np.full(m, 1.0 / m)
            if self.density is not None:
                w = w * self.density(x)
                w = w / w.sum()
            out = (x, w)
        self._cache["nodes"] = out
        return out

    def average(self, values: np.ndarray) -> np.ndarray:
        """Average an array of node values (last axis indexes the nodes)."""
        _, w = self.nodes_and_weights()
        return np.asarray(values) @ w

    def l2_norm(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        """L2(Q) norm of a function handle."""
        x, w = self.nodes_and_weights()
        g = np.asarray(fn(x), dtype=float)
        return float(np.sqrt(np.maximum(g * g @ w, 0.0)))

    def sample(self, n: int, rng) -> np.ndarray:
        """Draw ``n`` covariate points from Q (random designs only)."""
        if self.kind != "random":
            raise ValueError("sampling requires a random design")
        rng = as_rng(rng)
        if self.sampler is not None:
            return check_unit_interval(self.sampler(n, rng), "sampled points")
        if self.dim == 1:
            return rng.uniform(0.0, 1.0, size=n)
        return rng.uniform(0.0, 1.0, size=(n, self.dim))
