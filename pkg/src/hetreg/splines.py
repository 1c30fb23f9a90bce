"""B-spline bases on [0,1]: construction, evaluation, Gram matrices, projection.

The basis of order ``q`` over ``K`` equal subintervals has ``J = q + K - 1``
members.  Knots are clamped (q-fold repetition at 0 and 1) and the constant
knot spans are treated as right-closed intervals ((k-1)/K, k/K], with x = 0
assigned to the first span.  Under this convention the basis satisfies, at
every point of [0,1]: nonnegativity, summation to one, at most ``q`` nonzero
members, and supports of length at most q/K.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError, eigvalsh

from ._validation import check_int_at_least, check_unit_interval
from .design import DesignSpec, _gauss_legendre_unit

PROJECTION_GRID = 10_000
RIDGE_FACTOR = 1e-12


def _clamped_knots(q: int, n_intervals: int) -> np.ndarray:
    interior = np.arange(1, n_intervals) / n_intervals
    return np.concatenate([np.zeros(q), interior, np.ones(q)])


def _cox_de_boor(knots: np.ndarray, q: int, x: np.ndarray) -> np.ndarray:
    """Design matrix (len(x), J) by the Cox-de Boor recursion.

    Order-1 splines are indicators of the right-closed knot spans; zero-length
    spans never activate.  The 0/0 convention in the recursion is 0.
    """
    x = np.asarray(x, dtype=float)
    n_funcs = len(knots) - 1
    basis = ((knots[:-1][None, :] < x[:, None])
             & (x[:, None] <= knots[1:][None, :])).astype(float)
    at_left = x <= knots[0]
    if np.any(at_left):
        first_span = int(np.argmax(np.diff(knots) > 0))
        basis[at_left, :] = 0.0
        basis[at_left, first_span] = 1.0
    for order in range(2, q + 1):
        n_funcs -= 1
        left_den = knots[order - 1:order - 1 + n_funcs] - knots[:n_funcs]
        right_den = knots[order:order + n_funcs] - knots[1:1 + n_funcs]
        left = np.zeros((len(x), n_funcs))
        right = np.zeros((len(x), n_funcs))
        ok = left_den > 0
        left[:, ok] = (x[:, None] - knots[:n_funcs][None, :])[:, ok] \
            * basis[:, :n_funcs][:, ok] / left_den[ok]
        ok = right_den > 0
        right[:, ok] = (knots[order:order + n_funcs][None, :] - x[:, None])[:, ok] \
            * basis[:, 1:1 + n_funcs][:, ok] / right_den[ok]
        basis = left + right
    return basis


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """Order-q B-spline basis over K equal subintervals of [0,1]."""

    q: int
    n_intervals: int
    knots: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        """Number of basis functions, q + K - 1."""
        return self.q + self.n_intervals - 1

    def design_matrix(self, x) -> np.ndarray:
        """Evaluate all basis functions at ``x``; returns (len(x), J)."""
        x = check_unit_interval(np.atleast_1d(x), "x")
        return _cox_de_boor(self.knots, self.q, x)

    def evaluate(self, x: float) -> np.ndarray:
        """Basis weight vector (length J) at a single point."""
        return self.design_matrix([x])[0]


def build_basis(q: int, n_intervals: int) -> SplineBasis:
    """Construct the clamped order-``q`` basis with ``n_intervals`` subintervals."""
    q = check_int_at_least(q, 1, "order q")
    n_intervals = check_int_at_least(n_intervals, 1, "subinterval count")
    return SplineBasis(q=q, n_intervals=n_intervals,
                       knots=_clamped_knots(q, n_intervals))


def eval_basis(basis: SplineBasis, x: float) -> np.ndarray:
    """Basis weights at ``x``: nonnegative, sum to one, at most q nonzero."""
    return basis.evaluate(x)


def eval_spline(basis: SplineBasis, coeffs, x) -> np.ndarray:
    """Evaluate the spline with the given coefficient vector.

    The value is a convex combination of coefficients at every point, so
    ``sup |g| <= max |coeffs|``.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (basis.dim,):
        raise ValueError(f"expected {basis.dim} coefficients, got {coeffs.shape}")
    scalar = np.isscalar(x) or np.ndim(x) == 0
    values = basis.design_matrix(np.atleast_1d(x)) @ coeffs
    return float(values[0]) if scalar else values


def spline_function(basis: SplineBasis, coeffs) -> Callable[[np.ndarray], np.ndarray]:
    """Return ``x -> coeffs @ B(x)`` as a plain callable."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (basis.dim,):
        raise ValueError(f"expected {basis.dim} coefficients, got {coeffs.shape}")
    return lambda x: basis.design_matrix(np.atleast_1d(x)) @ coeffs


def _composite_quadrature(basis: SplineBasis, nodes_per_interval: int,
                          design: DesignSpec) -> tuple[np.ndarray, np.ndarray]:
    """Per-subinterval Gauss-Legendre nodes/weights for a continuous design."""
    u, w = _gauss_legendre_unit(nodes_per_interval)
    width = 1.0 / basis.n_intervals
    starts = np.arange(basis.n_intervals) * width
    x = (starts[:, None] + width * u[None, :]).ravel()
    weights = np.tile(width * w, basis.n_intervals)
    if design.density is not None:
        weights = weights * design.density(x)
        weights = weights / weights.sum()
    return x, weights


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Gram matrix of the basis under Q, with quadrature metadata."""

    sigma: np.ndarray
    design_kind: str
    quad: dict
    rank_deficient: bool = False

    @property
    def dim(self) -> int:
        return self.sigma.shape[0]


def gram_matrix(basis: SplineBasis, design: DesignSpec,
                nodes_per_interval: Optional[int] = None) -> GramMatrix:
    """Compute the matrix of pairwise basis products averaged over Q.

    Continuous designs use composite Gauss-Legendre with at least 2q nodes
    per subinterval, which integrates the polynomial products exactly for
    the uniform law.  Fixed designs average exactly over the design points;
    a design with fewer distinct points than basis functions is flagged as
    rank-deficient rather than rejected.
    """
    if design.kind == "fixed":
        pts = np.asarray(design.points, dtype=float)
        B = basis.design_matrix(pts)
        sigma = B.T @ B / len(pts)
        deficient = len(np.unique(pts)) < basis.dim
        return GramMatrix(sigma=sigma, design_kind="fixed",
                          quad={"method": "empirical", "n_points": len(pts)},
                          rank_deficient=deficient)
    if design.dim != 1:
        raise ValueError("spline Gram matrices are one-dimensional")
    m = nodes_per_interval or 2 * basis.q
    if m < 2 * basis.q:
        raise ValueError(f"need >= {2 * basis.q} quadrature nodes per "
                         f"subinterval, got {m}")
    x, w = _composite_quadrature(basis, m, design)
    B = basis.design_matrix(x)
    sigma = B.T @ (w[:, None] * B)
    sigma = 0.5 * (sigma + sigma.T)
    return GramMatrix(sigma=sigma, design_kind="random",
                      quad={"method": "gauss-legendre",
                            "nodes_per_interval": m})


def check_gram_regularity(gram: GramMatrix) -> tuple[float, float]:
    """Scaled extreme eigenvalues (J*lambda_min, J*lambda_max) of the Gram.

    The design is regularly distributed when both stay bounded away from
    zero and infinity as the basis dimension grows; judging that is left
    to the caller.
    """
    eigen = eigvalsh(gram.sigma)
    j = gram.dim
    return float(j * eigen[0]), float(j * eigen[-1])


@dataclass(frozen=True, eq=False)
class ProjectionResult:
    """L2(Q) projection of a target onto the spline space."""

    coeffs: np.ndarray
    sup_error: float
    l2_error: float
    ridge: float = 0.0


def project(basis: SplineBasis, target: Callable[[np.ndarray], np.ndarray],
            design: DesignSpec, nodes_per_interval: int = 64,
            grid_size: int = PROJECTION_GRID) -> ProjectionResult:
    """Project ``target`` onto the spline space in L2(Q).

    Solves ``sigma beta = b`` with ``b_i`` the Q-average of ``B_i * target``.
    A near-singular Gram is regularized with an additive ridge of
    ``1e-12 * trace(sigma) / J``, reported in the result.  The sup error is
    measured on a dense uniform grid, the L2 error under Q itself.
    """
    gram = gram_matrix(basis, design,
                       None if design.kind == "fixed" else
                       max(nodes_per_interval, 2 * basis.q))
    if design.kind == "fixed":
        pts = np.asarray(design.points, dtype=float)
        B = basis.design_matrix(pts)
        b = B.T @ np.asarray(target(pts), dtype=float) / len(pts)
    else:
        x, w = _composite_quadrature(basis, max(nodes_per_interval, 2 * basis.q),
                                     design)
        B = basis.design_matrix(x)
        b = B.T @ (w * np.asarray(target(x), dtype=float))

    sigma = gram.sigma
    ridge = 0.0
    try:
        coeffs = cho_solve(cho_factor(sigma), b)
    except LinAlgError:
        ridge = RIDGE_FACTOR * np.trace(sigma) / basis.dim
        try:
            coeffs = cho_solve(cho_factor(sigma + ridge * np.eye(basis.dim)), b)
        except LinAlgError:
            coeffs, *_ = np.linalg.lstsq(sigma + ridge * np.eye(basis.dim), b,
                                         rcond=None)

    grid = np.linspace(0.0, 1.0, grid_size)
    fit_grid = basis.design_matrix(grid) @ coeffs
    sup_error = float(np.max(np.abs(np.asarray(target(grid)) - fit_grid)))
    nodes, weights = design.nodes_and_weights()
    resid = np.asarray(target(nodes)) - basis.design_matrix(nodes) @ coeffs
    l2_error = float(np.sqrt(max(resid * resid @ weights, 0.0)))
    return ProjectionResult(coeffs=coeffs, sup_error=sup_error,
                            l2_error=l2_error, ridge=ridge)
