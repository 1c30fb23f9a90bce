"""Posterior sampling for the heteroscedastic regression model.

The sampler is a blockwise adaptive random-walk Metropolis over the mean
block and the log-variance block.  Proposal scales adapt toward a target
acceptance rate during burn-in and freeze afterwards, preserving
ergodicity.  Spline-parameterized chains work on coefficient vectors;
Gaussian-process chains work on whitened grid values through a
precomputed prior factor, with the rescaling variable held fixed per
chain.  Everything is deterministic given the generator state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from ._validation import as_rng, check_unit_interval
from .design import DesignSpec
from .model import LOG_2PI, FunctionPair, hellinger_sq_values
from .priors import (GPPriorConfig, SplinePriorConfig, _chol_with_jitter,
                     coefficient_log_prior, squared_exp_cov)
from .splines import SplineBasis

SCALE_LOG_MIN = -23.0
SCALE_LOG_MAX = 4.0


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed pairs (x_i, y_i) with the covariate design they came from."""

    x: np.ndarray
    y: np.ndarray
    design: DesignSpec
    truth: Optional[FunctionPair] = None

    def __post_init__(self):
        x = check_unit_interval(self.x, "covariates")
        y = np.asarray(self.y, dtype=float)
        if len(y) < 1 or x.shape[0] != len(y):
            raise ValueError("dataset needs n >= 1 matched (x, y) pairs")
        if not np.all(np.isfinite(y)):
            raise ValueError("responses must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class SamplerConfig:
    """Run-length and adaptation settings for the blockwise sampler."""

    n_iter: int = 20_000
    burn_in: int = 5_000
    thin: int = 5
    target_accept: float = 0.3
    init_scale: float = 0.5
    adapt: bool = True
    use_likelihood: bool = True

    def __post_init__(self):
        if not 0 <= self.burn_in < self.n_iter:
            raise ValueError("burn-in must be smaller than the chain length")
        if self.thin < 1:
            raise ValueError("thinning must be >= 1")
        if not self.init_scale > 0:
            raise ValueError("proposal scales must be positive")
        if not 0.0 < self.target_accept < 1.0:
            raise ValueError("target acceptance must be in (0, 1)")


@dataclass(frozen=True)
class PosteriorDraw:
    eta_coeffs: np.ndarray
    f_coeffs: np.ndarray
    log_posterior: float
    iteration: int


@dataclass(frozen=True, eq=False)
class Chain:
    """Thinned post-burn-in draws plus per-block sampling statistics."""

    eta_draws: np.ndarray
    f_draws: np.ndarray
    log_post: np.ndarray
    iterations: np.ndarray
    accept_eta: float
    accept_f: float
    scale_eta: float
    scale_f: float
    config: SamplerConfig
    kind: str = "spline"
    basis: Optional[SplineBasis] = None
    grid: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.log_post)

    def draw(self, i: int) -> PosteriorDraw:
        return PosteriorDraw(eta_coeffs=self.eta_draws[i],
                             f_coeffs=self.f_draws[i],
                             log_posterior=float(self.log_post[i]),
                             iteration=int(self.iterations[i]))

    def draws(self) -> Iterator[PosteriorDraw]:
        return (self.draw(i) for i in range(len(self)))

    def function_values(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Evaluate every retained draw's (eta, f) at the given points."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.kind == "spline":
            design = self.basis.design_matrix(x)
            return self.eta_draws @ design.T, self.f_draws @ design.T
        idx = np.clip(np.searchsorted(self.grid, x, side="right") - 1,
                      0, len(self.grid) - 2)
        width = self.grid[idx + 1] - self.grid[idx]
        frac = np.where(width > 0, (x - self.grid[idx]) / width, 0.0)
        def interp(draws):
            return draws[:, idx] * (1.0 - frac) + draws[:, idx + 1] * frac
        return interp(self.eta_draws), interp(self.f_draws)


def _gaussian_loglik(y: np.ndarray, eta_lin: np.ndarray,
                     f_lin: np.ndarray) -> float:
    resid = y - eta_lin
    return float(-0.5 * (len(y) * LOG_2PI + f_lin.sum()
                         + resid @ (resid * np.exp(-f_lin))))


def log_posterior(eta_coeffs, f_coeffs, data: Dataset,
                  prior: SplinePriorConfig, basis: SplineBasis) -> float:
    """Unnormalized log posterior: Gaussian log likelihood plus the
    coefficient log prior of both blocks."""
    eta_coeffs = np.asarray(eta_coeffs, dtype=float)
    f_coeffs = np.asarray(f_coeffs, dtype=float)
    if eta_coeffs.shape != (basis.dim,) or f_coeffs.shape != (basis.dim,):
        raise ValueError(f"coefficient blocks must have length {basis.dim}")
    design = basis.design_matrix(data.x)
    loglik = _gaussian_loglik(data.y, design @ eta_coeffs, design @ f_coeffs)
    return loglik + coefficient_log_prior(prior, eta_coeffs) \
        + coefficient_log_prior(prior, f_coeffs)


def _running_mean(values: np.ndarray, half_width: int) -> np.ndarray:
    n = len(values)
    csum = np.concatenate([[0.0], np.cumsum(values)])
    lo = np.maximum(np.arange(n) - half_width, 0)
    hi = np.minimum(np.arange(n) + half_width + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def pilot_coefficients(data: Dataset, basis: SplineBasis) -> tuple[np.ndarray,
                                                                   np.ndarray]:
    """Initialization point: empirical-design projections of a running-window
    mean and of the log running-window squared residuals."""
    order = np.argsort(data.x)
    xs, ys = data.x[order], data.y[order]
    half = max(2, data.n // 20)
    eta_pilot = _running_mean(ys, half)
    resid_sq = (ys - eta_pilot) ** 2
    f_pilot = np.log(np.maximum(_running_mean(resid_sq, half), 1e-6))
    design = basis.design_matrix(xs)
    eta0, *_ = np.linalg.lstsq(design, eta_pilot, rcond=None)
    f0, *_ = np.linalg.lstsq(design, f_pilot, rcond=None)
    return eta0, f0


def _adaptive_block_rwm(y, design_eta, design_f, logprior_eta, logprior_f,
                        init_eta, init_f, config: SamplerConfig, rng):
    """Shared two-block adaptive random-walk Metropolis core.

    Returns thinned post-burn-in draws of both blocks, the log-posterior
    trace, iteration indices, post-burn-in acceptance rates, and the
    frozen proposal scales.
    """
    rng = as_rng(rng)
    beta = [np.array(init_eta, dtype=float), np.array(init_f, dtype=float)]
    designs = [design_eta, design_f]
    logpriors = [logprior_eta, logprior_f]
    linear = [designs[0] @ beta[0], designs[1] @ beta[1]]

    def loglik(lin_eta, lin_f):
        if not config.use_likelihood:
            return 0.0
        return _gaussian_loglik(y, lin_eta, lin_f)

    log_prior = [logpriors[0](beta[0]), logpriors[1](beta[1])]
    log_lik = loglik(*linear)
    if not np.isfinite(log_lik + log_prior[0] + log_prior[1]):
        raise ValueError("log posterior is not finite at initialization")

    log_scale = [math.log(config.init_scale)] * 2
    kept = max(0, (config.n_iter - config.burn_in + config.thin - 1)
               // config.thin)
    draws = [np.empty((kept, len(beta[0]))), np.empty((kept, len(beta[1])))]
    log_post_trace = np.empty(kept)
    iterations = np.empty(kept, dtype=int)
    accepted = [0, 0]
    proposals = [0, 0]
    stored = 0

    for i in range(config.n_iter):
        for block in (0, 1):
            step = math.exp(log_scale[block]) \
                * rng.standard_normal(len(beta[block]))
            proposal = beta[block] + step
            lin_prop = designs[block] @ proposal
            lin_pair = (lin_prop, linear[1]) if block == 0 \
                else (linear[0], lin_prop)
            lik_prop = loglik(*lin_pair)
            prior_prop = logpriors[block](proposal)
            log_alpha = (lik_prop + prior_prop) \
                - (log_lik + log_prior[block])
            alpha = math.exp(min(0.0, log_alpha))
            if rng.random() < alpha:
                beta[block] = proposal
                linear[block] = lin_prop
                log_lik = lik_prop
                log_prior[block] = prior_prop
                if i >= config.burn_in:
                    accepted[block] += 1
            if i >= config.burn_in:
                proposals[block] += 1
            elif config.adapt:
                log_scale[block] += (alpha - config.target_accept) \
                    / (i + 1) ** 0.6
                if not SCALE_LOG_MIN < log_scale[block] < SCALE_LOG_MAX:
                    raise RuntimeError("proposal scale adaptation diverged "
                                       f"(log scale {log_scale[block]:.1f})")
        if i >= config.burn_in and (i - config.burn_in) % config.thin == 0:
            draws[0][stored] = beta[0]
            draws[1][stored] = beta[1]
            log_post_trace[stored] = log_lik + log_prior[0] + log_prior[1]
            iterations[stored] = i
            stored += 1

    rate = [accepted[b] / max(proposals[b], 1) for b in (0, 1)]
    return (draws[0][:stored], draws[1][:stored], log_post_trace[:stored],
            iterations[:stored], rate[0], rate[1],
            math.exp(log_scale[0]), math.exp(log_scale[1]))


def run_mcmc(data: Dataset, basis: SplineBasis, prior: SplinePriorConfig,
             config: SamplerConfig, rng) -> Chain:
    """Sample the spline-parameterized posterior.

    Blocks are initialized at the empirical projection of pilot estimates
    and updated alternately; the chain is bit-reproducible under a fixed
    generator seed.
    """
    design = basis.design_matrix(data.x)
    if config.use_likelihood:
        init_eta, init_f = pilot_coefficients(data, basis)
    else:
        init_eta = np.zeros(basis.dim)
        init_f = np.zeros(basis.dim)

    def logprior(coeffs):
        return coefficient_log_prior(prior, coeffs)

    out = _adaptive_block_rwm(data.y, design, design, logprior, logprior,
                              init_eta, init_f, config, rng)
    return Chain(eta_draws=out[0], f_draws=out[1], log_post=out[2],
                 iterations=out[3], accept_eta=out[4], accept_f=out[5],
                 scale_eta=out[6], scale_f=out[7], config=config,
                 kind="spline", basis=basis)


def _interp_matrix(grid: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Dense linear-interpolation matrix from grid values to points x."""
    idx = np.clip(np.searchsorted(grid, x, side="right") - 1,
                  0, len(grid) - 2)
    width = grid[idx + 1] - grid[idx]
    frac = np.where(width > 0, (x - grid[idx]) / width, 0.0)
    mat = np.zeros((len(x), len(grid)))
    rows = np.arange(len(x))
    mat[rows, idx] = 1.0 - frac
    mat[rows, idx + 1] = frac
    return mat


def integrated_bm_factor(grid: np.ndarray, fold_count: int) -> np.ndarray:
    """Linear map from i.i.d. standard normals to an integrated-BM path:
    columns for the Brownian increments (integrated ``fold_count`` times
    by the trapezoid rule) followed by the polynomial release terms."""
    grid = np.asarray(grid, dtype=float)
    m = len(grid)
    dx = grid[1] - grid[0]
    bm_map = np.sqrt(dx) * np.tril(np.ones((m, m - 1)), k=-1)
    trap = np.zeros((m, m))
    for i in range(1, m):
        trap[i, :i] += 0.5 * dx
        trap[i, 1:i + 1] += 0.5 * dx
    for _ in range(fold_count):
        bm_map = trap @ bm_map
    poly = np.stack([grid ** i / math.factorial(i)
                     for i in range(fold_count + 1)], axis=1)
    return np.hstack([bm_map, poly])


def gp_prior_factor(config: GPPriorConfig, rng,
                    scale: Optional[float] = None) -> tuple[np.ndarray, dict]:
    """Factor L with path = L @ z, z i.i.d. standard normal, for one block.

    For the rescaled squared-exponential prior the rescaling variable is
    drawn here (or passed) and held fixed for the chain.
    """
    rng = as_rng(rng)
    grid = np.asarray(config.grid, dtype=float)
    if config.kind == "rescaled-se":
        if scale is None:
            g = rng.gamma(config.gamma_shape, 1.0 / config.gamma_rate)
            scale = g ** (1.0 / config.dim)
        chol, jitter = _chol_with_jitter(squared_exp_cov(grid, scale),
                                         config.jitter)
        return chol, {"scale": float(scale), "jitter": jitter}
    return integrated_bm_factor(grid, config.fold_count), \
        {"fold_count": config.fold_count}


def run_mcmc_gp(data: Dataset, config: GPPriorConfig,
                sampler: SamplerConfig, rng) -> Chain:
    """Sample the grid-parameterized posterior under a GP prior.

    Both blocks are whitened through the prior factor, so the coefficient
    prior is standard normal; the chain stores grid values per draw.
    """
    rng = as_rng(rng)
    grid = np.asarray(config.grid, dtype=float)
    factor_eta, meta_eta = gp_prior_factor(config, rng)
    factor_f, meta_f = gp_prior_factor(config, rng)
    interp = _interp_matrix(grid, data.x)

    def logprior(u):
        return float(-0.5 * u @ u - 0.5 * len(u) * LOG_2PI)

    out = _adaptive_block_rwm(data.y, interp @ factor_eta, interp @ factor_f,
                              logprior, logprior,
                              np.zeros(factor_eta.shape[1]),
                              np.zeros(factor_f.shape[1]), sampler, rng)
    return Chain(eta_draws=out[0] @ factor_eta.T, f_draws=out[1] @ factor_f.T,
                 log_post=out[2], iterations=out[3], accept_eta=out[4],
                 accept_f=out[5], scale_eta=out[6], scale_f=out[7],
                 config=sampler, kind="gp-grid", grid=grid,
                 meta={"eta": meta_eta, "f": meta_f})


# ---------------------------------------------------------------------------
# Diagnostics and posterior-distance summaries.
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChainSummary:
    """Chain diagnostics and, when computed, distances to a reference."""

    acceptance: Optional[dict] = None
    ess: Optional[dict] = None
    rhat: Optional[float] = None
    distance_quantiles: Optional[dict] = None
    exceedance: Optional[dict] = None
    distances: Optional[np.ndarray] = field(default=None, repr=False)
    flags: dict = field(default_factory=dict)


def effective_sample_size(trace: np.ndarray) -> float:
    """ESS from the autocorrelation sequence, truncated at the first
    negative consecutive pair sum.  Returns nan for degenerate traces."""
    trace = np.asarray(trace, dtype=float)
    n = len(trace)
    if n < 4 or np.var(trace) == 0.0:
        return float("nan")
    centered = trace - trace.mean()
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    spectrum = np.fft.rfft(centered, size)
    acov = np.fft.irfft(spectrum * np.conj(spectrum))[:n].real / n
    rho = acov / acov[0]
    tau = 0.0
    m = 0
    while 2 * m + 1 < n:
        pair = rho[2 * m] + rho[2 * m + 1]
        if pair <= 0.0:
            break
        tau += 2.0 * pair
        m += 1
    tau = max(tau - 1.0, 1e-12)
    return float(min(n, n / tau))


def split_rhat(trace: np.ndarray) -> float:
    """Potential scale reduction of the two halves of a single trace."""
    trace = np.asarray(trace, dtype=float)
    half = len(trace) // 2
    if half < 2:
        return float("nan")
    first, second = trace[:half], trace[half:2 * half]
    within = 0.5 * (first.var(ddof=1) + second.var(ddof=1))
    if within == 0.0:
        return float("nan")
    between = half * np.var([first.mean(), second.mean()], ddof=1)
    pooled = (half - 1) / half * within + between / half
    return float(np.sqrt(pooled / within))


def diagnostics(chain: Chain) -> ChainSummary:
    """Acceptance rates, per-block and log-posterior ESS, split R-hat."""
    if len(chain) < 100:
        raise ValueError("diagnostics need at least 100 retained draws")
    ess_blocks = {
        "eta": float(np.nanmin([effective_sample_size(chain.eta_draws[:, j])
                                for j in range(chain.eta_draws.shape[1])])),
        "f": float(np.nanmin([effective_sample_size(chain.f_draws[:, j])
                              for j in range(chain.f_draws.shape[1])])),
        "log_post": effective_sample_size(chain.log_post),
    }
    flags = {}
    if not np.isfinite(ess_blocks["log_post"]):
        flags["degenerate_log_post"] = True
    return ChainSummary(acceptance={"eta": chain.accept_eta,
                                    "f": chain.accept_f},
                        ess=ess_blocks, rhat=split_rhat(chain.log_post),
                        flags=flags)


def posterior_distance_summary(chain: Chain, truth: FunctionPair,
                               design: DesignSpec,
                               levels=(0.5, 0.9), radii=()) -> ChainSummary:
    """Distribution of the averaged Hellinger distance to ``truth`` over
    the retained draws: requested quantiles plus exceedance fractions for
    any supplied radii."""
    if len(chain) == 0:
        raise ValueError("chain has no retained draws")
    nodes, weights = design.nodes_and_weights()
    eta_mat, f_mat = chain.function_values(nodes)
    eta0 = np.asarray(truth.eta(nodes), dtype=float)
    v0 = np.asarray(truth.variance(nodes), dtype=float)
    h2 = hellinger_sq_values(eta_mat, np.exp(f_mat), eta0[None, :],
                             v0[None, :])
    distances = np.sqrt(np.maximum(h2 @ weights, 0.0))
    quantiles = {float(q): float(np.quantile(distances, q)) for q in levels}
    exceedance = {float(r): float(np.mean(distances > r)) for r in radii}
    return ChainSummary(distance_quantiles=quantiles, exceedance=exceedance,
                        distances=distances)


def export_chain_csv(chain: Chain, path) -> None:
    """Write the chain as CSV rows (iteration, block, coeff_index, value,
    log_post), preceded by a schema comment line."""
    with open(path, "w") as handle:
        handle.write("# hetreg chain-csv v1\n")
        handle.write("iteration,block,coeff_index,value,log_post\n")
        for i in range(len(chain)):
            it = int(chain.iterations[i])
            lp = float(chain.log_post[i])
            for name, block in (("eta", chain.eta_draws),
                                ("f", chain.f_draws)):
                for j, value in enumerate(block[i]):
                    handle.write(f"{it},{name},{j},{float(value)!r},"
                                 f"{lp!r}\n")
