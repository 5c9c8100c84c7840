import math

import numpy as np
import pytest
from scipy.integrate import quad

from leaderlab.core import DataError, NonConvergenceError, RegimeError, RngSpec
from leaderlab.rwstail import (RwsModel, a_threshold, c_l_constant, find_l_beta,
                               gg_cdf, implied_lambda,
                               infinite_product_one_minus,
                               infinite_product_one_plus, large_A_bound,
                               leader_cdf_exact, leader_cdf_monte_carlo,
                               leader_log_cdf_exact, mills_bounds,
                               small_A_bounds, verify_tail_rates,
                               weighted_dyadic_sum)


class TestGgCdf:
    def test_zero(self):
        assert gg_cdf(0.0, 2.0) == 0.0

    def test_laplace_closed_form(self):
        # beta=1: P(|X| <= x) = 1 - e^-x
        for x in (0.3, 1.0, 4.0):
            assert gg_cdf(x, 1.0) == pytest.approx(1.0 - math.exp(-x),
                                                   rel=1e-12)

    def test_gaussian_by_quadrature(self):
        # oracle: numerical integration of the variance-1/2 density
        val, _ = quad(lambda t: math.exp(-t * t) / math.sqrt(math.pi),
                      -1.0, 1.0, epsabs=1e-14)
        assert gg_cdf(1.0, 2.0) == pytest.approx(val, abs=1e-12)
        assert gg_cdf(1.0, 2.0) == pytest.approx(0.8427007929497149, abs=1e-12)

    def test_domain_error(self):
        with pytest.raises(DataError):
            gg_cdf(-0.5, 2.0)


class TestLeaderCdfExact:
    def test_large_a_limit(self):
        model = RwsModel(1.0, 2.0)
        assert leader_cdf_exact(model, 1e3) >= 1.0 - 1e-10

    def test_monotone_in_a(self):
        model = RwsModel(1.0, 2.0)
        assert leader_cdf_exact(model, 0.1) < leader_cdf_exact(model, 0.2)

    @pytest.mark.parametrize("a_val", [0.05, 0.25, 1.0])
    def test_matches_fixed_depth_product(self, a_val):
        model = RwsModel(1.0, 2.0)
        log_p = 0.0
        for j in range(41):
            f = gg_cdf(2.0 ** j * a_val, 2.0)
            log_p += 2.0 ** j * math.log(f)
        mine = leader_cdf_exact(model, a_val, tol=1e-12)
        assert mine == pytest.approx(math.exp(log_p), abs=1e-12)

    def test_tightening_tol(self):
        model = RwsModel(1.0, 2.0)
        loose = leader_cdf_exact(model, 0.4, tol=1e-6)
        tight = leader_cdf_exact(model, 0.4, tol=1e-14)
        assert abs(loose - tight) <= 1e-6

    def test_nonconvergence_for_tiny_alpha(self):
        model = RwsModel(0.005, 2.0)
        with pytest.raises(NonConvergenceError):
            leader_log_cdf_exact(model, 1e-4)

    def test_validation(self):
        model = RwsModel(1.0, 2.0)
        with pytest.raises(DataError):
            leader_cdf_exact(model, 0.0)
        with pytest.raises(DataError):
            leader_cdf_exact(model, 0.5, tol=0.0)


class TestLeaderCdfMonteCarlo:
    def test_agrees_with_truncated_product(self):
        model = RwsModel(1.0, 2.0)
        res = leader_cdf_monte_carlo(model, 0.5, J=14, n_paths=100_000,
                                     rng=RngSpec(21))
        log_p = sum(2.0 ** j * math.log(gg_cdf(2.0 ** j * 0.5, 2.0))
                    for j in range(15))
        assert abs(res.estimate - math.exp(log_p)) <= 4.0 * res.stderr

    def test_tiny_a_is_zero(self):
        model = RwsModel(1.0, 2.0)
        res = leader_cdf_monte_carlo(model, 1e-12, J=4, n_paths=2000,
                                     rng=RngSpec(22))
        assert res.estimate == 0.0

    def test_depth_one_closed_form(self):
        model = RwsModel(1.0, 2.0)
        a_val = 0.8
        res = leader_cdf_monte_carlo(model, a_val, J=1, n_paths=200_000,
                                     rng=RngSpec(23))
        closed = gg_cdf(a_val, 2.0) * gg_cdf(2.0 * a_val, 2.0) ** 2
        assert abs(res.estimate - closed) <= 4.0 * res.stderr

    def test_validation(self):
        model = RwsModel(1.0, 2.0)
        with pytest.raises(DataError):
            leader_cdf_monte_carlo(model, 0.5, J=0, n_paths=10, rng=RngSpec(1))
        with pytest.raises(DataError):
            leader_cdf_monte_carlo(model, 0.5, J=30, n_paths=10, rng=RngSpec(1))


class TestConstants:
    def test_infinite_product_identities(self):
        assert infinite_product_one_minus(1) == pytest.approx(2.0 / math.pi,
                                                              abs=1e-10)
        assert infinite_product_one_plus() == pytest.approx(4.0 / math.pi,
                                                            abs=1e-10)

    def test_c_l2_closed_form(self):
        # product over j >= 3 equals 128/(45 pi)
        assert c_l_constant(3) == pytest.approx(128.0 / (45.0 * math.pi),
                                                abs=1e-10)

    def test_weighted_dyadic_sum(self):
        for l in range(1, 21):
            brute = sum(2 ** j * (l - j) for j in range(l))
            assert weighted_dyadic_sum(l) == brute == 2 ** (l + 1) - (l + 2)

    def test_kappa_beta2(self):
        model = RwsModel(1.0, 2.0)
        assert model.gg.kappa == pytest.approx(1.0 / math.sqrt(math.pi),
                                               abs=1e-12)

    def test_l_beta_values(self):
        assert find_l_beta(RwsModel(1.0, 2.0)) == 3
        lam = implied_lambda(RwsModel(1.0, 2.0), 3)
        assert 1.0 < lam < math.pi / 2.0


class TestSmallABounds:
    def test_worked_example_constants(self):
        model = RwsModel(1.0, 2.0)
        res = small_A_bounds(model, 0.25)
        assert res.constants["l_beta"] == 3
        assert res.constants["c_lbeta"] == pytest.approx(
            128.0 / (45.0 * math.pi), abs=1e-10)
        assert res.constants["kappa_beta"] == pytest.approx(
            1.0 / math.sqrt(math.pi), abs=1e-12)
        lower, upper, rate = res
        assert lower <= upper
        assert rate > 0.0

    def test_regime_errors(self):
        with pytest.raises(RegimeError):
            small_A_bounds(RwsModel(0.5, 2.0), 0.1)  # alpha below threshold
        with pytest.raises(RegimeError):
            small_A_bounds(RwsModel(1.0, 2.0), 0.75)  # A above 2^-alpha


class TestLargeABound:
    def test_a2_value(self):
        assert a_threshold(RwsModel(1.0, 2.0)) == pytest.approx(
            math.sqrt(99.0 / 2.0), abs=1e-12)

    def test_beta1_closed_form(self):
        model = RwsModel(1.0, 1.0)
        bound = large_A_bound(model, 10.0)
        assert bound == pytest.approx(math.exp(-10.0)
                                      / (1.0 - 2.0 * math.exp(-20.0)),
                                      rel=1e-12)

    @pytest.mark.parametrize("a_val", [7.1, 8.0, 10.0])
    def test_dominates_exact_tail(self, a_val):
        model = RwsModel(1.0, 2.0)
        tail = 1.0 - leader_cdf_exact(model, a_val)
        assert large_A_bound(model, a_val) >= tail

    def test_below_threshold_reports_a_beta(self):
        model = RwsModel(1.0, 2.0)
        with pytest.raises(RegimeError) as err:
            large_A_bound(model, 5.0)
        assert "7.03" in str(err.value)


class TestMills:
    def test_beta1_three_quantities_coincide(self):
        for x in (0.5, 1.0, 2.0, 5.0):
            lower, upper, exact = mills_bounds(x, 1.0)
            assert lower == upper == pytest.approx(0.5 * math.exp(-x),
                                                   rel=1e-12)
            assert exact == pytest.approx(lower, abs=1e-12)

    def test_beta2_printed_bounds(self):
        lower, upper, exact = mills_bounds(2.0, 2.0)
        ref_up = math.exp(-4.0) / (2.0 * math.sqrt(math.pi) * 2.0)
        assert upper == pytest.approx(ref_up, rel=1e-12)
        assert lower == pytest.approx(ref_up / (1.0 + 1.0 / 8.0), rel=1e-12)
        assert lower <= exact <= upper

    def test_heavy_tail_case(self):
        lower, upper, exact = mills_bounds(4.0, 0.5)
        assert lower <= exact <= upper
        assert np.isfinite(upper)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 1.5, 2.0, 3.0])
    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 5.0])
    def test_sandwich_grid(self, beta, x):
        lower, upper, exact = mills_bounds(x, beta)
        assert lower <= exact * (1 + 1e-12)
        assert exact <= upper * (1 + 1e-12)

    def test_domain(self):
        with pytest.raises(DataError):
            mills_bounds(0.0, 2.0)

    def test_case1_envelope_beyond_a2(self):
        # past the 1%-accuracy point the tail sits within 1% of the Mills
        # form kappa e^(-x^2)/(2x); verified against the quadrature value
        a2 = a_threshold(RwsModel(1.0, 2.0))
        for x in (a2, 8.0, 10.0):
            lower, upper, exact = mills_bounds(x, 2.0)
            assert exact >= 0.99 * upper
            assert exact <= upper


class TestVerifyTailRates:
    def test_gaussian_example_report(self, tmp_path):
        model = RwsModel(1.0, 2.0)
        grid = [2.0 ** (-k) for k in range(9, 3, -1)] + [7.1, 8.0, 10.0]
        report = verify_tail_rates(model, grid,
                                   json_path=tmp_path / "tb.json",
                                   csv_path=tmp_path / "tb.csv")
        assert report.slope == pytest.approx(-1.0, abs=0.1)
        assert report.slope_ok
        assert all(report.large_dominates)
        assert report.checks_passed
        assert (tmp_path / "tb.json").exists()
        text = (tmp_path / "tb.csv").read_text()
        assert text.splitlines()[0] == "A,exact_cdf,lower_env,upper_env,upper_large"
        # exact CDF nondecreasing along the grid
        assert np.all(np.diff(report.exact_cdf) >= -1e-15)

    def test_regime_gap_raises(self):
        model = RwsModel(1.0, 2.0)
        with pytest.raises(RegimeError):
            verify_tail_rates(model, [1.0])  # neither small nor large

    def test_monte_carlo_consistency(self):
        # exact truncated product vs simulation across (A, model) combos
        combos = []
        for alpha, beta in [(1.0, 2.0), (1.2, 1.0), (1.0, 1.5), (1.5, 3.0)]:
            for a_val in (0.3, 0.5, 0.8, 1.2, 2.0):
                combos.append((alpha, beta, a_val))
        for i, (alpha, beta, a_val) in enumerate(combos):
            model = RwsModel(alpha, beta)
            mc = leader_cdf_monte_carlo(model, a_val, J=12, n_paths=20_000,
                                        rng=RngSpec(9100, i))
            log_p = sum(2.0 ** j * math.log(gg_cdf(2.0 ** (alpha * j) * a_val,
                                                   beta))
                        for j in range(13))
            exact = math.exp(log_p)
            assert abs(mc.estimate - exact) <= 4.0 * max(mc.stderr, 1e-4), \
                (alpha, beta, a_val)

    def test_mc_columns(self, tmp_path):
        model = RwsModel(1.0, 2.0)
        report = verify_tail_rates(model, [0.25, 0.5], mc_paths=5000,
                                   rng=RngSpec(77),
                                   csv_path=tmp_path / "tb.csv")
        assert report.mc is not None and len(report.mc) == 2
        header = (tmp_path / "tb.csv").read_text().splitlines()[0]
        assert header.endswith("mc_cdf,mc_stderr")
