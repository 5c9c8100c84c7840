import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gammainc

from leaderlab.core import DataError, RngSpec
from leaderlab.synth import (GenGaussianParams, ProcessSpec, cpc_cone_mass,
                             fgn_autocovariance, gen_cmc_motion,
                             gen_cpc_motion, gen_fbm, gen_mrw,
                             gen_rws_pyramid, generate,
                             mrw_log_field_autocovariance,
                             sample_gen_gaussian)
from leaderlab.wavelet import daubechies_basis, dwt


class TestFbm:
    def test_brownian_case_iid_increments(self):
        n = 1 << 14
        sig = gen_fbm(0.5, n, RngSpec(2))
        inc = np.diff(np.concatenate([[0.0], sig.samples]))
        lag1 = float(np.mean(inc[1:] * inc[:-1]) / np.mean(inc * inc))
        assert abs(lag1) <= 3.0 / math.sqrt(n)

    def test_aggregated_variance_slope(self):
        # oracle: direct slope fit on log variance of k-lag increments
        n = 1 << 14
        sig = gen_fbm(0.7, n, RngSpec(3))
        ks = np.array([1, 2, 4, 8, 16, 32, 64])
        v = []
        for k in ks:
            d = sig.samples[k:] - sig.samples[:-k]
            v.append(np.mean(d * d))
        slope = np.polyfit(np.log(ks), np.log(v), 1)[0]
        assert slope == pytest.approx(1.4, abs=0.1)

    def test_defaults_from_study(self):
        for h in (0.4, 0.7):
            sig = gen_fbm(h, 512, RngSpec(4))
            assert len(sig) == 512

    def test_reproducible(self):
        a = gen_fbm(0.6, 256, RngSpec(9, 1))
        b = gen_fbm(0.6, 256, RngSpec(9, 1))
        assert np.array_equal(a.samples, b.samples)

    def test_fgn_autocovariance_ensemble(self):
        # empirical lag-k autocovariance within 5 standard errors of gamma(k)
        n, reps = 1 << 12, 200
        acc = np.zeros((reps, 11))
        for i in range(reps):
            sig = gen_fbm(0.7, n, RngSpec(1000, i))
            fgn = np.diff(np.concatenate([[0.0], sig.samples]))
            for k in range(11):
                acc[i, k] = np.mean(fgn[k:] * fgn[: n - k])
        gamma = fgn_autocovariance(0.7, 10)
        mean = acc.mean(axis=0)
        se = acc.std(axis=0, ddof=1) / math.sqrt(reps)
        assert np.all(np.abs(mean - gamma) <= 5.0 * se)

    def test_validation(self):
        with pytest.raises(DataError):
            gen_fbm(0.0, 64, RngSpec(1))
        with pytest.raises(DataError):
            gen_fbm(1.0, 64, RngSpec(1))
        with pytest.raises(DataError):
            gen_fbm(0.5, 1, RngSpec(1))


class TestMrw:
    def test_beta_zero_reduces_to_fbm(self):
        a = gen_fbm(0.6, 512, RngSpec(5, 2))
        b = gen_mrw(0.6, 0.0, 512, 512, RngSpec(5, 2))
        assert np.array_equal(a.samples, b.samples)

    def test_log_field_variance_at_zero_lag(self):
        beta, big_l = 0.05, 100_000
        cov = mrw_log_field_autocovariance(beta, big_l, 10)
        assert cov[0] == pytest.approx(beta ** 2 * math.log(big_l), abs=1e-10)

    def test_covariance_clipping(self):
        cov = mrw_log_field_autocovariance(0.1, 8, 20)
        assert np.all(cov[8:] == 0.0)
        assert np.all(cov >= 0.0)

    def test_study_defaults_run(self):
        sig = gen_mrw(0.6, 0.05, 4096, 4096, RngSpec(6))
        assert len(sig) == 4096

    def test_validation(self):
        with pytest.raises(DataError):
            gen_mrw(0.6, 0.05, 100, 200, RngSpec(1))  # L < n
        with pytest.raises(DataError):
            gen_mrw(0.6, -0.1, 256, 256, RngSpec(1))


class TestCmc:
    def test_degenerate_cascade_is_ramp(self):
        # mu -> 0 with sigma2 forced to 0: every multiplier is exactly 1
        sig = gen_cmc_motion(0.0, 8, RngSpec(7), sigma2=0.0)
        n = 1 << 8
        expected = np.arange(1, n + 1) / n
        assert np.max(np.abs(sig.samples - expected)) <= 1e-12

    def test_multiplier_mean_one(self):
        # E[2^-U] = 1 under the mass-conservation link sigma2 = 2 mu / ln 2
        mu = 0.37
        sigma2 = 2.0 * mu / math.log(2.0)
        gen = RngSpec(8).generator()
        u = gen.normal(mu, math.sqrt(sigma2), size=1_000_000)
        w = np.exp2(-u)
        assert w.mean() == pytest.approx(1.0, abs=0.005)

    def test_cascade_mass(self):
        # E[A(1)] = 1; sample mean over 500 realizations within 5%
        total = 0.0
        for i in range(500):
            sig = gen_cmc_motion(0.37, 7, RngSpec(880, i))
            total += sig.samples[-1]
        assert total / 500 == pytest.approx(1.0, abs=0.05)

    def test_validation(self):
        with pytest.raises(DataError):
            gen_cmc_motion(-0.1, 4, RngSpec(1))
        with pytest.raises(DataError):
            gen_cmc_motion(0.37, 0, RngSpec(1))


class TestCpc:
    def test_empty_point_process_linear(self):
        sig = gen_cpc_motion("ln", 10.0, 0.05, 128, RngSpec(9), intensity=0.0)
        dt = 10.0 / 128
        expected = dt * np.arange(1, 129)
        assert np.max(np.abs(sig.samples - expected)) <= 1e-12

    def test_cone_point_count(self):
        # points in the full-resolution cone at t: Poisson with mean
        # integral of (1/r^2) over the cone = log(1/r_min)
        t_star, r_min, t_len = 5.0, 0.02, 10.0
        counts = []
        for i in range(200):
            gen = RngSpec(910, i).generator(0)
            span = t_len + 1.0
            n_pts = gen.poisson(span * (1.0 / r_min - 1.0))
            t_pts = gen.uniform(-0.5, t_len + 0.5, size=n_pts)
            u = gen.random(n_pts)
            r_pts = 1.0 / (1.0 / r_min - u * (1.0 / r_min - 1.0))
            counts.append(np.sum(np.abs(t_pts - t_star) <= r_pts / 2.0))
        mean = cpc_cone_mass(r_min)
        observed = float(np.mean(counts))
        se = math.sqrt(mean / 200)
        assert abs(observed - mean) <= 3.0 * se

    def test_defaults_both_kinds(self):
        for kind in ("ln", "lp"):
            sig = gen_cpc_motion(kind, 100.0, 0.02, 1024, RngSpec(11))
            assert len(sig) == 1024
            assert np.all(np.diff(sig.samples) > 0)  # positive density

    def test_validation(self):
        with pytest.raises(DataError):
            gen_cpc_motion("xx", 10.0, 0.02, 64, RngSpec(1))
        with pytest.raises(DataError):
            gen_cpc_motion("ln", 10.0, 0.0, 64, RngSpec(1))
        with pytest.raises(DataError):
            gen_cpc_motion("ln", -1.0, 0.02, 64, RngSpec(1))


class TestRws:
    def test_large_alpha_damps_fine_scales(self):
        basis = daubechies_basis(3)
        sig, pyr = gen_rws_pyramid(10.0, 2.0, basis, 6, RngSpec(12))
        top = pyr.levels[-1]
        coarse_max = np.abs(pyr.coeffs[top]).max()
        for j in pyr.levels[:-1]:
            assert np.abs(pyr.coeffs[j]).max() <= 2.0 ** (-10) * max(
                coarse_max, np.abs(pyr.coeffs[top]).max() + 1.0)

    def test_round_trip_recovers_planted(self):
        basis = daubechies_basis(3)
        sig, planted = gen_rws_pyramid(1.0, 2.0, basis, 10, RngSpec(13))
        j_max = 8  # deepest level honoring the length >= 2^j * filter bound
        pyr = dwt(sig, basis, j_max)
        for j in range(1, j_max + 1):
            got = pyr.coeffs[j]
            want = planted.coeffs[j]
            denom = np.maximum(np.abs(want), 1e-12)
            assert np.max(np.abs(got - want) / denom) <= 1e-8

    def test_beta2_draw_variance(self):
        x = sample_gen_gaussian(2.0, 1_000_000, RngSpec(14))
        assert x.var() == pytest.approx(0.5, abs=0.005)


class TestGenGaussian:
    def test_laplace_mean_abs(self):
        x = sample_gen_gaussian(1.0, 1_000_000, RngSpec(15))
        assert np.mean(np.abs(x)) == pytest.approx(1.0, abs=0.01)

    def test_ecdf_matches_incomplete_gamma(self):
        beta, n = 1.5, 40_000
        x = np.abs(sample_gen_gaussian(beta, n, RngSpec(16)))
        xs = np.sort(x)
        ecdf = np.arange(1, n + 1) / n
        cdf = gammainc(1.0 / beta, xs ** beta)
        assert np.max(np.abs(ecdf - cdf)) <= 2.0 / math.sqrt(n)

    @pytest.mark.parametrize("beta", [0.5, 1.0, 1.5, 2.0, 3.0])
    def test_density_normalization(self, beta):
        gg = GenGaussianParams(beta)
        val, _ = quad(gg.pdf, 0.0, np.inf, limit=400)
        assert 2.0 * val == pytest.approx(1.0, abs=1e-8)
        assert 0.0 < gg.kappa < 0.565

    def test_validation(self):
        with pytest.raises(DataError):
            sample_gen_gaussian(0.0, 10, RngSpec(1))
        with pytest.raises(DataError):
            GenGaussianParams(-1.0)


class TestProcessSpec:
    def test_generate_dispatch_reproducible(self):
        for kind, params in [("fbm", {"H": 0.7}),
                             ("mrw", {"H": 0.6, "beta": 0.05, "L": 512}),
                             ("cmc", {"mu": 0.37, "J": 9}),
                             ("cpc-ln", {"T": 20.0, "rmin": 0.05}),
                             ("cpc-lp", {"T": 20.0, "rmin": 0.05, "w": 1.5}),
                             ("rws", {"alpha": 1.0, "ggbeta": 2.0, "J": 8})]:
            spec = ProcessSpec(kind=kind, n=512, params=params,
                               rng=RngSpec(77, 4))
            a = generate(spec)
            b = generate(spec)
            assert np.array_equal(a.samples, b.samples), kind
            assert len(a) == 512, kind

    def test_unknown_kind(self):
        with pytest.raises(DataError):
            generate(ProcessSpec("levy", 128, {}, RngSpec(1)))
