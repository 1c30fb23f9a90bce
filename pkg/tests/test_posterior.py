"""Posterior sampler, diagnostics, and distance summaries."""

import numpy as np
import pytest

from hetreg import (Chain, Dataset, DesignSpec, FunctionPair, GPPriorConfig,
                    SamplerConfig, SplinePriorConfig, build_basis, diagnostics,
                    effective_sample_size, export_chain_csv, log_posterior,
                    make_truth, gen_data, posterior_distance_summary,
                    run_mcmc, run_mcmc_gp, split_rhat)
from hetreg.posterior import integrated_bm_factor
from hetreg.priors import coefficient_log_prior

CONSTANT_BASIS = build_basis(1, 1)


def constant_dataset(y_values, x_values=None):
    y = np.asarray(y_values, dtype=float)
    x = np.linspace(0.05, 0.95, len(y)) if x_values is None \
        else np.asarray(x_values, dtype=float)
    return Dataset(x=x, y=y, design=DesignSpec.fixed(x))


class TestDataset:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Dataset(x=np.array([]), y=np.array([]),
                    design=DesignSpec.uniform())

    def test_rejects_out_of_domain(self):
        with pytest.raises(ValueError):
            Dataset(x=np.array([0.5, 1.2]), y=np.array([0.0, 1.0]),
                    design=DesignSpec.uniform())

    def test_rejects_nonfinite_response(self):
        with pytest.raises(ValueError):
            Dataset(x=np.array([0.5]), y=np.array([np.inf]),
                    design=DesignSpec.uniform())


class TestLogPosterior:
    def test_single_exact_fit_unit_variance(self):
        """One datum fit exactly at unit variance: the likelihood part is
        -log(2 pi)/2."""
        data = constant_dataset([1.3])
        prior = SplinePriorConfig()
        value = log_posterior([1.3], [0.0], data, prior, CONSTANT_BASIS)
        prior_part = coefficient_log_prior(prior, np.array([1.3])) \
            + coefficient_log_prior(prior, np.array([0.0]))
        assert value - prior_part == pytest.approx(-0.5 * np.log(2 * np.pi))

    def test_doubling_data_doubles_likelihood(self):
        rng = np.random.default_rng(42)
        y = rng.standard_normal(20)
        x = rng.uniform(0, 1, 20)
        prior = SplinePriorConfig()
        basis = build_basis(2, 3)
        be, bf = rng.standard_normal((2, basis.dim))

        def likelihood_part(data):
            prior_part = coefficient_log_prior(prior, be) \
                + coefficient_log_prior(prior, bf)
            return log_posterior(be, bf, data, prior, basis) - prior_part

        single = likelihood_part(constant_dataset(y, x))
        double = likelihood_part(constant_dataset(np.tile(y, 2),
                                                  np.tile(x, 2)))
        assert double == pytest.approx(2 * single, rel=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(42)
        y = rng.standard_normal(30)
        x = rng.uniform(0, 1, 30)
        perm = rng.permutation(30)
        prior = SplinePriorConfig()
        basis = build_basis(3, 2)
        be, bf = rng.standard_normal((2, basis.dim))
        a = log_posterior(be, bf, constant_dataset(y, x), prior, basis)
        b = log_posterior(be, bf, constant_dataset(y[perm], x[perm]),
                          prior, basis)
        assert a == pytest.approx(b, rel=1e-12)

    def test_dimension_mismatch(self):
        data = constant_dataset([0.0, 1.0])
        with pytest.raises(ValueError):
            log_posterior([1.0, 2.0], [0.0], data, SplinePriorConfig(),
                          CONSTANT_BASIS)


class TestSamplerConfig:
    def test_burn_in_must_precede_end(self):
        with pytest.raises(ValueError):
            SamplerConfig(n_iter=100, burn_in=100)

    def test_positive_scales_and_thinning(self):
        with pytest.raises(ValueError):
            SamplerConfig(init_scale=0.0)
        with pytest.raises(ValueError):
            SamplerConfig(thin=0)


class TestRunMcmc:
    def test_seed_determinism(self):
        """Identical generator seeds give bit-identical chains."""
        truth = make_truth(2.0, 2.0)
        data = gen_data(truth, 80, "fixed", np.random.default_rng(5))
        basis = build_basis(2, 3)
        config = SamplerConfig(n_iter=800, burn_in=200, thin=2)
        chains = [run_mcmc(data, basis, SplinePriorConfig(), config,
                           np.random.default_rng(11)) for _ in range(2)]
        np.testing.assert_array_equal(chains[0].eta_draws,
                                      chains[1].eta_draws)
        np.testing.assert_array_equal(chains[0].f_draws, chains[1].f_draws)
        np.testing.assert_array_equal(chains[0].log_post, chains[1].log_post)

    def test_prior_only_chain_reproduces_prior_moments(self):
        """With the likelihood switched off the chain must sample the
        standard normal prior in every coordinate."""
        data = constant_dataset(np.zeros(10))
        basis = build_basis(2, 2)
        config = SamplerConfig(n_iter=24_000, burn_in=4_000, thin=1,
                               use_likelihood=False)
        chain = run_mcmc(data, basis, SplinePriorConfig(), config,
                         np.random.default_rng(3))
        draws = np.hstack([chain.eta_draws, chain.f_draws])
        ess = min(effective_sample_size(draws[:, j])
                  for j in range(draws.shape[1]))
        tol = 4.0 / np.sqrt(ess)
        assert abs(draws.mean()) < tol
        assert abs(draws.var() - 1.0) < 3 * tol

    def test_two_coefficient_posterior_matches_quadrature(self):
        """Constant-basis toy model: chain moments agree with a dense-grid
        quadrature of the exact posterior within three Monte Carlo
        standard errors."""
        rng = np.random.default_rng(42)
        n = 25
        v_true = np.exp(-0.3)
        y = 0.5 + np.sqrt(v_true) * rng.standard_normal(n)
        data = constant_dataset(y)
        prior = SplinePriorConfig()
        config = SamplerConfig(n_iter=30_000, burn_in=5_000, thin=1,
                               init_scale=0.3)
        chain = run_mcmc(data, CONSTANT_BASIS, prior, config,
                         np.random.default_rng(0))

        be = np.linspace(-1.0, 2.0, 601)
        bf = np.linspace(-2.4, 1.8, 601)
        mesh_e, mesh_f = np.meshgrid(be, bf, indexing="ij")
        resid_sq = np.sum((y[None, None, :] - mesh_e[..., None]) ** 2,
                          axis=-1)
        log_post = (-0.5 * n * np.log(2 * np.pi) - 0.5 * n * mesh_f
                    - 0.5 * resid_sq * np.exp(-mesh_f)
                    - 0.5 * (mesh_e ** 2 + mesh_f ** 2))
        weights = np.exp(log_post - log_post.max())
        weights /= weights.sum()
        exact = {
            "mean_e": float(np.sum(weights * mesh_e)),
            "mean_f": float(np.sum(weights * mesh_f)),
            "var_e": float(np.sum(weights * mesh_e ** 2)
                           - np.sum(weights * mesh_e) ** 2),
            "var_f": float(np.sum(weights * mesh_f ** 2)
                           - np.sum(weights * mesh_f) ** 2),
        }
        for trace, mean_key, var_key in (
                (chain.eta_draws[:, 0], "mean_e", "var_e"),
                (chain.f_draws[:, 0], "mean_f", "var_f")):
            ess = effective_sample_size(trace)
            se_mean = np.sqrt(exact[var_key] / ess)
            assert trace.mean() == pytest.approx(exact[mean_key],
                                                 abs=3 * se_mean)
            se_var = exact[var_key] * np.sqrt(2.0 / ess)
            assert trace.var() == pytest.approx(exact[var_key],
                                                abs=3 * se_var)

    def test_posterior_mean_close_to_projection_in_easy_regime(self):
        """Unit-variance truth with ample data: the posterior mean of the
        mean-block coefficients lands within three posterior standard
        deviations of the truth's projection coefficients.  (Constant
        variance makes the posterior's precision-weighted fit coincide
        with the plain projection.)"""
        from hetreg import project
        truth = FunctionPair(
            eta=lambda x: np.sin(2 * np.pi * np.atleast_1d(x)),
            f=lambda x: np.zeros(len(np.atleast_1d(x))))
        data = gen_data(truth, 1500, "fixed", np.random.default_rng(8))
        basis = build_basis(4, 1)
        config = SamplerConfig(n_iter=12_000, burn_in=4_000, thin=2)
        chain = run_mcmc(data, basis, SplinePriorConfig(), config,
                         np.random.default_rng(9))
        projected = project(basis, truth.eta, data.design).coeffs
        post_mean = chain.eta_draws.mean(axis=0)
        post_sd = chain.eta_draws.std(axis=0)
        assert np.all(np.abs(post_mean - projected) < 3 * post_sd + 0.05)

    def test_acceptance_rates_near_target(self):
        truth = make_truth(2.0, 2.0)
        data = gen_data(truth, 150, "fixed", np.random.default_rng(2))
        chain = run_mcmc(data, build_basis(3, 2), SplinePriorConfig(),
                         SamplerConfig(n_iter=6_000, burn_in=3_000, thin=2),
                         np.random.default_rng(4))
        assert 0.15 < chain.accept_eta < 0.5
        assert 0.15 < chain.accept_f < 0.5

    def test_concentration_with_growing_n(self):
        """Median posterior distance to a fixed truth does not increase
        over n in {100, 400, 1600}."""
        truth = make_truth(2.0, 2.0)
        config = SamplerConfig(n_iter=4_000, burn_in=1_500, thin=5)
        medians = []
        for i, n in enumerate((100, 400, 1600)):
            data = gen_data(truth, n, "fixed", np.random.default_rng(20 + i))
            basis = build_basis(4, 1)
            chain = run_mcmc(data, basis, SplinePriorConfig(), config,
                             np.random.default_rng(30 + i))
            summary = posterior_distance_summary(chain, truth, data.design)
            medians.append(summary.distance_quantiles[0.5])
        assert medians[1] < medians[0]
        assert medians[2] < medians[1]


class TestDiagnostics:
    def test_iid_trace_ess_near_length(self):
        rng = np.random.default_rng(42)
        trace = rng.standard_normal(4000)
        assert effective_sample_size(trace) \
            == pytest.approx(4000, rel=0.2)

    def test_ar1_trace_ess(self):
        """AR(1) with rho = 0.9 has ESS about n (1-rho)/(1+rho)."""
        rng = np.random.default_rng(42)
        rho = 0.9
        n = 120_000
        noise = rng.standard_normal(n) * np.sqrt(1 - rho ** 2)
        trace = np.empty(n)
        trace[0] = rng.standard_normal()
        for t in range(1, n):
            trace[t] = rho * trace[t - 1] + noise[t]
        expected = n * (1 - rho) / (1 + rho)
        assert effective_sample_size(trace) == pytest.approx(expected,
                                                             rel=0.3)

    def test_constant_trace_flagged(self):
        assert np.isnan(effective_sample_size(np.ones(500)))

    def test_split_rhat_near_one_for_stationary_trace(self):
        rng = np.random.default_rng(42)
        assert split_rhat(rng.standard_normal(2000)) \
            == pytest.approx(1.0, abs=0.05)

    def test_split_rhat_detects_drift(self):
        assert split_rhat(np.linspace(0, 10, 2000)) > 1.5

    def test_diagnostics_requires_enough_draws(self):
        truth = make_truth(2.0, 2.0)
        data = gen_data(truth, 50, "fixed", np.random.default_rng(0))
        chain = run_mcmc(data, build_basis(2, 2), SplinePriorConfig(),
                         SamplerConfig(n_iter=300, burn_in=100, thin=10),
                         np.random.default_rng(0))
        with pytest.raises(ValueError):
            diagnostics(chain)

    def test_diagnostics_fields(self):
        truth = make_truth(2.0, 2.0)
        data = gen_data(truth, 100, "fixed", np.random.default_rng(0))
        chain = run_mcmc(data, build_basis(2, 2), SplinePriorConfig(),
                         SamplerConfig(n_iter=3_000, burn_in=1_000, thin=2),
                         np.random.default_rng(0))
        summary = diagnostics(chain)
        assert 0.0 <= summary.acceptance["eta"] <= 1.0
        assert 0.0 <= summary.acceptance["f"] <= 1.0
        assert 0 < summary.ess["log_post"] <= len(chain)
        assert np.isfinite(summary.rhat)


class TestDistanceSummary:
    def _chain_from_eta_offsets(self, offsets):
        draws = np.asarray(offsets, dtype=float)[:, None]
        zeros = np.zeros_like(draws)
        return Chain(eta_draws=draws, f_draws=zeros,
                     log_post=np.zeros(len(draws)),
                     iterations=np.arange(len(draws)), accept_eta=1.0,
                     accept_f=1.0, scale_eta=1.0, scale_f=1.0,
                     config=SamplerConfig(n_iter=2, burn_in=0, thin=1),
                     kind="spline", basis=CONSTANT_BASIS)

    def test_chain_at_truth_has_zero_quantiles(self):
        truth = FunctionPair.from_constants(0.0, 1.0)
        chain = self._chain_from_eta_offsets([0.0, 0.0, 0.0])
        summary = posterior_distance_summary(chain, truth,
                                             DesignSpec.uniform())
        assert summary.distance_quantiles[0.5] == pytest.approx(0.0,
                                                                abs=1e-12)
        assert summary.distance_quantiles[0.9] == pytest.approx(0.0,
                                                                abs=1e-12)

    def test_two_draw_median_interpolates(self):
        """Draws at distances 0.1 and 0.3 give median 0.2 under linear
        quantile interpolation; the offsets invert the constant-model
        Hellinger formula."""
        def offset_for_distance(d):
            return np.sqrt(-8.0 * np.log(1.0 - d * d / 2.0))

        truth = FunctionPair.from_constants(0.0, 1.0)
        chain = self._chain_from_eta_offsets(
            [offset_for_distance(0.1), offset_for_distance(0.3)])
        summary = posterior_distance_summary(chain, truth,
                                             DesignSpec.uniform(),
                                             levels=(0.5,), radii=(0.2,))
        assert summary.distance_quantiles[0.5] == pytest.approx(0.2,
                                                                abs=1e-12)
        assert summary.exceedance[0.2] == pytest.approx(0.5)

    def test_quantiles_nondecreasing_in_level(self):
        rng = np.random.default_rng(42)
        chain = self._chain_from_eta_offsets(rng.uniform(0, 1, 50))
        summary = posterior_distance_summary(
            chain, FunctionPair.from_constants(0.0, 1.0),
            DesignSpec.uniform(), levels=(0.1, 0.5, 0.9))
        values = [summary.distance_quantiles[q] for q in (0.1, 0.5, 0.9)]
        assert values[0] <= values[1] <= values[2]


class TestGPChain:
    def test_integrated_bm_factor_covariance(self):
        """The whitening factor reproduces the k = 0 covariance: the path
        variance at x is x + 1 exactly (Brownian plus constant release)."""
        grid = np.linspace(0, 1, 33)
        factor = integrated_bm_factor(grid, 0)
        cov = factor @ factor.T
        np.testing.assert_allclose(np.diag(cov), grid + 1.0, atol=1e-12)

    def test_prior_only_gp_chain_matches_prior_variance(self):
        """Whitened prior-only sampling reproduces the unit marginal
        variance of the squared-exponential field."""
        grid = np.linspace(0, 1, 12)
        config = GPPriorConfig(kind="rescaled-se", grid=grid)
        data = constant_dataset(np.zeros(6))
        sampler = SamplerConfig(n_iter=30_000, burn_in=5_000, thin=1,
                                use_likelihood=False)
        chain = run_mcmc_gp(data, config, sampler,
                            np.random.default_rng(12))
        pooled = chain.eta_draws.ravel()
        assert abs(pooled.mean()) < 0.12
        assert abs(pooled.var() - 1.0) < 0.2

    def test_gp_chain_with_likelihood_runs(self):
        truth = make_truth(1.5, 1.5, seed=1)
        data = gen_data(truth, 60, "fixed", np.random.default_rng(1))
        config = GPPriorConfig(kind="rescaled-se",
                               grid=np.linspace(0, 1, 16))
        sampler = SamplerConfig(n_iter=2_000, burn_in=500, thin=5)
        chain = run_mcmc_gp(data, config, sampler, np.random.default_rng(2))
        assert chain.kind == "gp-grid"
        assert chain.meta["eta"]["scale"] > 0
        summary = posterior_distance_summary(chain, truth, data.design)
        assert np.isfinite(summary.distance_quantiles[0.5])


class TestChainExport:
    def test_csv_roundtrip_and_determinism(self, tmp_path):
        truth = make_truth(2.0, 2.0)
        data = gen_data(truth, 40, "fixed", np.random.default_rng(0))
        basis = build_basis(2, 2)
        config = SamplerConfig(n_iter=400, burn_in=100, thin=10)
        paths = []
        for rep in range(2):
            chain = run_mcmc(data, basis, SplinePriorConfig(), config,
                             np.random.default_rng(77))
            path = tmp_path / f"chain{rep}.csv"
            export_chain_csv(chain, path)
            paths.append(path.read_bytes())
        assert paths[0] == paths[1]
        lines = paths[0].decode().strip().split("\n")
        assert lines[0].startswith("# hetreg chain-csv")
        assert lines[1] == "iteration,block,coeff_index,value,log_post"
        chain = run_mcmc(data, basis, SplinePriorConfig(), config,
                         np.random.default_rng(77))
        assert len(lines) == 2 + len(chain) * 2 * basis.dim
