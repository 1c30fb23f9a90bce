"""Desk-scale verifiers for the supporting bounds."""

import math

import numpy as np
import pytest

from hetreg import (BudgetError, DesignSpec, FunctionPair, GPPriorConfig,
                    SieveSpec, SplinePriorConfig, approximation_rate_check,
                    build_basis, concentration_mc, concentration_sweep,
                    covering_number, holder_series, spline_function,
                    tail_probability_mc, verify_gp_sieve,
                    verify_hellinger_entropy_bound, verify_divergence_bounds)


def spline_pair(basis, rng, f_cap=1.0):
    """A random pair with both sup|f| <= f_cap by the coefficient bound."""
    def one():
        eta = rng.standard_normal(basis.dim)
        f = rng.uniform(-f_cap, f_cap, basis.dim)
        return FunctionPair.from_splines(basis, eta, f)
    return one(), one()


class TestVerifyDivergenceBounds:
    def test_identical_pairs_trivially_pass(self):
        basis = build_basis(2, 3)
        theta = FunctionPair.from_splines(
            basis, np.full(basis.dim, 0.4), np.full(basis.dim, 0.3))
        report = verify_divergence_bounds([(theta, theta)], 0.5, DesignSpec.uniform())
        assert report.passed
        assert report.empirical <= 0.0

    def test_small_mean_shift(self):
        """eta difference delta, equal unit variances: the KL average is
        delta^2/2, well under (1 + e^{2N}) delta^2 at N = 1."""
        t1 = FunctionPair.from_constants(0.1, 1.0)
        t2 = FunctionPair.from_constants(0.0, 1.0)
        report = verify_divergence_bounds([(t1, t2)], 1.0, DesignSpec.uniform())
        assert report.passed
        assert report.details["worst_kl_margin"] \
            == pytest.approx((1 + math.e ** 2) * 0.01 - 0.005)

    def test_random_spline_pairs_no_violations(self):
        rng = np.random.default_rng(42)
        basis = build_basis(3, 5)
        pairs = [spline_pair(basis, rng) for _ in range(2000)]
        report = verify_divergence_bounds(pairs, 1.0, DesignSpec.uniform(n_nodes=128))
        assert report.passed
        assert report.details["violations"] == 0

    def test_precondition_enforced(self):
        t1 = FunctionPair.from_constants(0.0, math.exp(2.0))
        t2 = FunctionPair.from_constants(0.0, 1.0)
        with pytest.raises(ValueError):
            verify_divergence_bounds([(t1, t2)], 0.5, DesignSpec.uniform())


class TestEntropyBound:
    def test_singleton_families(self):
        report = verify_hellinger_entropy_bound(
            [lambda x: np.zeros(len(np.atleast_1d(x)))],
            [lambda x: np.zeros(len(np.atleast_1d(x)))],
            [0.1, 0.2], 1.0)
        assert report.passed

    def test_constant_family_matches_scalar_greedy(self):
        """One-parameter family of constant means with a fixed variance:
        the module's product cover must coincide with a direct greedy
        cover run on the scalar offsets."""
        levels = np.linspace(0.0, 1.9, 20)
        v0 = 1.0
        etas = [(lambda c: (lambda x: np.full(len(np.atleast_1d(x)), c)))(c)
                for c in levels]
        fs = [lambda x: np.zeros(len(np.atleast_1d(x)))]
        eps = 0.05
        report = verify_hellinger_entropy_bound(etas, fs, [eps], 0.5)

        def hellinger(delta):
            return math.sqrt(2 - 2 * math.exp(-delta ** 2 / (8 * v0)))

        # Same farthest-point insertion, scalar distances.
        min_dist = np.array([hellinger(abs(c - levels[0])) for c in levels])
        centers = 1
        while min_dist.max() > 3 * eps:
            nxt = int(np.argmax(min_dist))
            dist = np.array([hellinger(abs(c - levels[nxt]))
                             for c in levels])
            min_dist = np.minimum(min_dist, dist)
            centers += 1
        assert report.details["table"][0]["cover_product"] == centers

    def test_random_spline_families_bounded_ratio(self):
        rng = np.random.default_rng(42)
        basis = build_basis(2, 4)
        etas = [spline_function(basis, rng.standard_normal(basis.dim))
                for _ in range(30)]
        fs = [spline_function(basis, rng.uniform(-0.5, 0.5, basis.dim))
              for _ in range(30)]
        report = verify_hellinger_entropy_bound(
            etas, fs, [0.02, 0.05, 0.1, 0.2], 0.5)
        assert report.passed
        assert report.empirical <= report.slack

    def test_member_budget(self):
        fn = lambda x: np.zeros(len(np.atleast_1d(x)))
        with pytest.raises(BudgetError):
            verify_hellinger_entropy_bound([fn] * 400, [fn] * 400, [0.1],
                                           1.0)

    def test_variance_floor_precondition(self):
        small_v = lambda x: np.full(len(np.atleast_1d(x)), -3.0)
        zeros = lambda x: np.zeros(len(np.atleast_1d(x)))
        with pytest.raises(ValueError):
            verify_hellinger_entropy_bound([zeros], [small_v], [0.1], 1.0)


class TestCoveringNumber:
    def test_radius_covers_everything(self):
        assert covering_number(1.5, 1.0, 2).net_size == 1

    def test_line_segment(self):
        """dim 1, R = 1, eps = 0.1: net size within [10, 21]."""
        result = covering_number(0.1, 1.0, 1)
        assert 10 <= result.net_size <= 21
        assert result.lower == pytest.approx(10.0)
        assert result.upper == pytest.approx(21.0)

    def test_disk(self):
        """dim 2, R = 1, eps = 0.25: inside the volume bounds [16, 81]."""
        result = covering_number(0.25, 1.0, 2)
        assert 16 <= result.net_size <= 81

    def test_sandwich_over_parameters(self):
        for dim, eps in ((1, 0.2), (2, 0.3), (3, 0.5)):
            result = covering_number(eps, 1.0, dim)
            assert result.lower <= result.net_size <= result.upper

    def test_dimension_guard(self):
        with pytest.raises(BudgetError):
            covering_number(0.1, 1.0, 7)

    def test_net_budget_guard(self):
        with pytest.raises(BudgetError):
            covering_number(0.01, 1.0, 4)


class TestConcentration:
    BASIS = build_basis(2, 1)
    TRUTH = FunctionPair.from_splines(BASIS, np.array([0.3, -0.2]),
                                      np.array([0.2, -0.1]))
    PRIOR = SplinePriorConfig()

    def test_large_radius_probability_near_one(self):
        report = concentration_mc(self.PRIOR, self.BASIS, self.TRUTH,
                                  eps=0.8, sup_bound=0.5, draws=20_000,
                                  rng=np.random.default_rng(42))
        assert report.passed
        assert report.details["log_prob"] > math.log(0.01)
        assert report.details["coeff_ball_violations"] == 0

    def test_inclusion_chain_holds_on_all_checked_draws(self):
        report = concentration_mc(self.PRIOR, self.BASIS, self.TRUTH,
                                  eps=0.3, sup_bound=0.5, draws=40_000,
                                  rng=np.random.default_rng(42))
        assert report.passed
        assert report.details["in_coeff_ball"] > 50
        assert report.details["coeff_ball_violations"] == 0
        assert report.details["norm_equiv_violations"] == 0
        assert report.details["l2_ball_violations"] == 0

    def test_log_mass_slope_matches_dimension(self):
        """log prior mass against log eps has slope about 2J."""
        sweep = concentration_sweep(self.PRIOR, self.BASIS, self.TRUTH,
                                    [0.1, 0.2, 0.3], 0.5, 40_000,
                                    np.random.default_rng(42))
        assert sweep["inclusions_ok"]
        assert abs(sweep["slope"] - sweep["predicted_slope"]) \
            <= 0.5 * sweep["predicted_slope"]

    def test_zero_hits_flagged(self):
        report = concentration_mc(self.PRIOR, self.BASIS, self.TRUTH,
                                  eps=0.002, sup_bound=0.5, draws=10_000,
                                  rng=np.random.default_rng(0),
                                  proposal_scale=1.0)
        assert report.details["zero_hit_lower_bound_only"]
        assert not report.passed

    def test_draw_budget_enforced(self):
        with pytest.raises(ValueError):
            concentration_mc(self.PRIOR, self.BASIS, self.TRUTH, 0.3, 0.5,
                             100, np.random.default_rng(0))


class TestTailProbability:
    def test_far_threshold_both_vanish(self):
        basis = build_basis(2, 9)
        report = tail_probability_mc(SplinePriorConfig(), basis, 8.0,
                                     100_000, np.random.default_rng(42))
        assert report.empirical == 0.0
        assert report.bound == pytest.approx(2 * 10 * math.exp(-32.0))
        assert report.passed

    def test_moderate_threshold(self):
        """J = 10, M = 3: the empirical tail sits well under the bound
        2 J exp(-M^2/2) because the sup never exceeds max |beta_j|."""
        basis = build_basis(2, 9)
        report = tail_probability_mc(SplinePriorConfig(), basis, 3.0,
                                     100_000, np.random.default_rng(42))
        assert report.passed
        assert report.empirical <= 2 * 10 * math.exp(-4.5)
        assert report.empirical < 0.04

    def test_generalized_law_same_shape(self):
        basis = build_basis(2, 9)
        prior = SplinePriorConfig(coefficient_law="generalized", rho=2.0)
        report = tail_probability_mc(prior, basis, 3.0, 100_000,
                                     np.random.default_rng(42))
        assert report.passed
        assert report.details["rho"] == 2.0

    def test_draw_budget(self):
        with pytest.raises(ValueError):
            tail_probability_mc(SplinePriorConfig(), build_basis(2, 2),
                                3.0, 1000, np.random.default_rng(0))


class TestGPSieve:
    CONFIG = GPPriorConfig(kind="rescaled-se", grid=np.linspace(0, 1, 32))

    def test_wide_ball_probability_near_one(self):
        report = verify_gp_sieve(self.CONFIG,
                                 lambda x: np.zeros(len(x)), [3.0],
                                 10_000, np.random.default_rng(42))
        assert report.details["probs"][0] > 0.9

    def test_log_probability_strictly_decreasing(self):
        report = verify_gp_sieve(self.CONFIG,
                                 lambda x: np.zeros(len(x)),
                                 [1.0, 0.5, 0.25], 10_000,
                                 np.random.default_rng(42))
        assert report.passed
        probs = report.details["probs"]
        assert probs[0] > probs[1] > probs[2]

    def test_smooth_target_has_larger_small_ball_mass(self):
        rough = holder_series(0.6)
        rough_scaled = lambda x: 0.5 * rough(x) / 1.8
        smooth = lambda x: np.zeros(len(np.atleast_1d(x)))
        rng = np.random.default_rng(42)
        smooth_report = verify_gp_sieve(self.CONFIG, smooth, [0.5],
                                        10_000, rng)
        rough_report = verify_gp_sieve(self.CONFIG, rough_scaled, [0.5],
                                       10_000, rng)
        assert smooth_report.details["probs"][0] \
            > rough_report.details["probs"][0]

    def test_rate_reference_attached(self):
        report = verify_gp_sieve(self.CONFIG, lambda x: np.zeros(len(x)),
                                 [1.0, 0.5], 10_000,
                                 np.random.default_rng(0),
                                 rate_pairs=[(100, 0.3), (400, 0.2)])
        ref = report.details["reference"]
        assert ref[0]["neg_n_eps_sq"] == pytest.approx(-100 * 0.09)


class TestApproximationRate:
    def test_lipschitz_and_fractional_slopes(self):
        results = approximation_rate_check(
            [0.6, 1.0], [8, 16, 32, 64], lambda a: holder_series(a), q=3)
        for alpha, res in results.items():
            assert res["passed"], (alpha, res)
            assert res["slope"] == pytest.approx(-alpha, abs=0.2)

    def test_polynomial_target_exact(self):
        results = approximation_rate_check(
            [1.0], [8, 16], lambda a: (lambda x: np.atleast_1d(x) ** 2),
            q=4)
        assert results[1.0]["exact"]
        assert results[1.0]["passed"]

    def test_order_must_dominate_smoothness(self):
        with pytest.raises(ValueError):
            approximation_rate_check([2.5], [8, 16],
                                     lambda a: holder_series(a), q=2)


class TestReportInvariants:
    def test_sieve_spec_validation(self):
        with pytest.raises(ValueError):
            SieveSpec(eta_sup_radius=0.0, f_sup_radius=1.0, dim_cap=3,
                      n=100, eps=0.1)
        with pytest.raises(ValueError):
            SieveSpec(eta_sup_radius=1.0, f_sup_radius=1.0, dim_cap=3,
                      n=100, eps=1.5)

    def test_sieve_tail_comparison_trend(self):
        spec = SieveSpec(eta_sup_radius=4.0, f_sup_radius=4.0, dim_cap=5,
                         n=200, eps=0.2)
        trend = spec.tail_comparison(dim=5)
        assert trend["sup_tail_bound"] == pytest.approx(5 * math.exp(-8.0))
        assert trend["target"] == pytest.approx(math.exp(-8.0))

    def test_pass_flag_recomputable(self):
        """Every emitted report satisfies: passed iff margin >= -allowance."""
        rng = np.random.default_rng(42)
        basis = build_basis(2, 3)
        pairs = [spline_pair(basis, rng) for _ in range(50)]
        reports = [
            verify_divergence_bounds(pairs, 1.0, DesignSpec.uniform(n_nodes=64)),
            tail_probability_mc(SplinePriorConfig(), basis, 3.0, 100_000,
                                rng),
            concentration_mc(self_prior := SplinePriorConfig(),
                             TestConcentration.BASIS,
                             TestConcentration.TRUTH, 0.3, 0.5, 10_000,
                             rng),
            verify_gp_sieve(TestGPSieve.CONFIG,
                            lambda x: np.zeros(len(x)), [1.0, 0.5],
                            10_000, rng),
        ]
        for report in reports:
            assert report.passed == (report.margin >= -report.allowance)

    def test_to_dict_serializes(self):
        import json
        report = verify_divergence_bounds(
            [(FunctionPair.from_constants(0.0, 1.0),
              FunctionPair.from_constants(0.1, 1.0))], 1.0,
            DesignSpec.uniform(n_nodes=64))
        text = json.dumps(report.to_dict())
        assert "kl-var-l2-bound" in text
