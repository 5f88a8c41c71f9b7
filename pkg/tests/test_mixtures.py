import math

import numpy as np
import pytest
from scipy.integrate import quad

from evhc.mixtures import (
    STD_FLOOR,
    GaussianMixture,
    fit_gmm_bic,
    fit_gmm_em,
    gmm_cdf,
    gmm_linear_combination,
    gmm_loglik,
    gmm_pdf,
    gmm_quantile,
    gmm_reduce,
    gmm_sample,
    gmm_shift,
)
from oracles import ks_distance, trapezoid_cdf


def _random_mixture(rng, k):
    w = rng.random(k) + 0.2
    return GaussianMixture(
        w / w.sum(),
        rng.normal(0.0, 1.0, k),
        rng.random(k) * 0.8 + 0.1,
    )


class TestConstruction:
    def test_weight_sum_enforced(self):
        with pytest.raises(ValueError):
            GaussianMixture(np.array([0.5, 0.4]), np.zeros(2), np.ones(2))

    def test_positive_stds_enforced(self):
        with pytest.raises(ValueError):
            GaussianMixture(np.array([1.0]), np.zeros(1), np.zeros(1))

    def test_json_round_trip(self):
        g = GaussianMixture(np.array([0.3, 0.7]), np.array([0.1, 0.5]),
                            np.array([0.05, 0.2]))
        g2 = GaussianMixture.from_dict(g.to_dict())
        assert np.allclose(g.weights, g2.weights)
        assert np.allclose(g.means, g2.means)
        assert np.allclose(g.stds, g2.stds)


class TestPdfCdf:
    def test_standard_normal_median(self):
        g = GaussianMixture.single(0.0, 1.0)
        assert gmm_cdf(g, 0.0) == pytest.approx(0.5, abs=1e-12)

    def test_cdf_saturates(self):
        rng = np.random.default_rng(3)
        for k in (1, 2, 4):
            g = _random_mixture(rng, k)
            hi = float(np.max(np.abs(g.means)) + 10 * np.max(g.stds) + 10)
            assert gmm_cdf(g, hi) == pytest.approx(1.0, abs=1e-9)
            assert gmm_cdf(g, -hi) == pytest.approx(0.0, abs=1e-9)

    def test_cdf_matches_trapezoid_oracle(self):
        g = GaussianMixture(np.array([0.4, 0.6]), np.array([-0.5, 0.8]),
                            np.array([0.3, 0.5]))
        lo = -6.0
        for x in (-0.7, 0.0, 0.4, 1.5):
            num = trapezoid_cdf(lambda t: gmm_pdf(g, t), lo, x)
            assert gmm_cdf(g, x) == pytest.approx(num, abs=1e-6)

    def test_pdf_normalizes_by_quadrature(self):
        rng = np.random.default_rng(11)
        for k in (1, 3, 5):
            g = _random_mixture(rng, k)
            total, _ = quad(lambda t: gmm_pdf(g, t), -np.inf, np.inf, limit=200)
            assert total == pytest.approx(1.0, abs=1e-6)


class TestQuantile:
    def test_median_of_symmetric(self):
        g = GaussianMixture.single(0.0, 1.0)
        assert gmm_quantile(g, 0.5) == pytest.approx(0.0, abs=1e-9)

    def test_standard_normal_080(self):
        g = GaussianMixture.single(0.0, 1.0)
        assert gmm_quantile(g, 0.8) == pytest.approx(0.841621, abs=1e-5)

    @pytest.mark.parametrize("q", [0.0, 1.0, -0.2, 1.5])
    def test_open_interval_precondition(self, q):
        g = GaussianMixture.single(0.0, 1.0)
        with pytest.raises(ValueError):
            gmm_quantile(g, q)

    def test_inversion_property(self):
        rng = np.random.default_rng(5)
        for k in (1, 2, 4):
            g = _random_mixture(rng, k)
            for q in (0.01, 0.2, 0.5, 0.8, 0.99):
                x = gmm_quantile(g, q)
                assert gmm_cdf(g, x) == pytest.approx(q, abs=1e-8)


class TestShift:
    def test_zero_shift_identity(self):
        g = GaussianMixture.single(0.3, 0.05)
        s = gmm_shift(g, 0.0)
        assert np.array_equal(s.means, g.means)
        assert np.array_equal(s.stds, g.stds)

    def test_location_family(self):
        g = GaussianMixture.single(0.0, 0.05)
        s = gmm_shift(g, 0.4)
        assert s.means[0] == pytest.approx(0.4)
        assert s.stds[0] == pytest.approx(0.05)

    def test_mean_linearity(self):
        rng = np.random.default_rng(9)
        g = _random_mixture(rng, 3)
        assert gmm_shift(g, 1.7).mean() == pytest.approx(g.mean() + 1.7, abs=1e-12)


class TestLinearCombination:
    def test_hand_arithmetic_two_gaussians(self):
        ga = GaussianMixture.single(1.0, 3.0)
        gb = GaussianMixture.single(2.0, 4.0)
        out = gmm_linear_combination([ga, gb], [2.0, -1.0])
        assert out.k == 1
        assert out.means[0] == pytest.approx(0.0, abs=1e-12)
        assert out.stds[0] == pytest.approx(math.sqrt(52.0), abs=1e-12)

    def test_component_count_bookkeeping(self):
        rng = np.random.default_rng(2)
        g2, g3 = _random_mixture(rng, 2), _random_mixture(rng, 3)
        out = gmm_linear_combination([g2, g3], [1.0, 1.0])
        assert out.k == 6
        expect = np.sort((g2.weights[:, None] * g3.weights[None, :]).ravel())
        assert np.allclose(np.sort(out.weights), expect, atol=1e-12)

    def test_cap_enforced(self):
        rng = np.random.default_rng(4)
        gs = [_random_mixture(rng, 4) for _ in range(4)]
        with pytest.raises(ValueError, match="reduce"):
            gmm_linear_combination(gs, [1.0] * 4, max_components=100)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            gmm_linear_combination([GaussianMixture.single(0, 1)], [1.0, 2.0])

    def test_moments_closed_form(self):
        rng = np.random.default_rng(8)
        gs = [_random_mixture(rng, k) for k in (2, 3, 2)]
        cs = [0.7, -1.3, 2.1]
        out = gmm_linear_combination(gs, cs)
        mean_expect = sum(c * g.mean() for c, g in zip(cs, gs))
        var_expect = sum(c * c * g.var() for c, g in zip(cs, gs))
        assert out.mean() == pytest.approx(mean_expect, abs=1e-10)
        assert out.var() == pytest.approx(var_expect, abs=1e-10)

    def test_cdf_matches_monte_carlo(self):
        # 3 random 2-component mixtures, random coefficients
        rng = np.random.default_rng(12)
        gs = [_random_mixture(rng, 2) for _ in range(3)]
        cs = list(rng.normal(0, 1, 3))
        out = gmm_linear_combination(gs, cs)
        n = 1_000_000
        total = np.zeros(n)
        for i, (g, c) in enumerate(zip(gs, cs)):
            total += c * gmm_sample(g, n, seed=100 + i)
        total.sort()
        d = ks_distance(total, lambda x: gmm_cdf(out, x))
        assert d < 0.005


class TestReduce:
    def test_duplicate_merge(self):
        g = GaussianMixture(np.array([0.5, 0.5]), np.array([0.2, 0.2]),
                            np.array([0.1, 0.1]))
        r = gmm_reduce(g, 1)
        assert r.k == 1
        assert r.weights[0] == pytest.approx(1.0)
        assert r.means[0] == pytest.approx(0.2)
        assert r.stds[0] == pytest.approx(0.1)

    def test_moment_preservation(self):
        rng = np.random.default_rng(21)
        g = _random_mixture(rng, 12)
        for k in (8, 4, 1):
            r = gmm_reduce(g, k)
            assert r.mean() == pytest.approx(g.mean(), abs=1e-12)
            assert r.var() == pytest.approx(g.var(), abs=1e-12)

    def test_reduce_64_to_8_cdf_close(self):
        rng = np.random.default_rng(31)
        gs = [_random_mixture(rng, 2) for _ in range(6)]
        big = gmm_linear_combination(gs, [1.0] * 6)
        assert big.k == 64
        small = gmm_reduce(big, 8)
        lo = big.mean() - 6 * big.std()
        hi = big.mean() + 6 * big.std()
        grid = np.linspace(lo, hi, 2001)
        sup = np.max(np.abs(gmm_cdf(big, grid) - gmm_cdf(small, grid)))
        assert sup < 0.01

    def test_invalid_target(self):
        with pytest.raises(ValueError):
            gmm_reduce(GaussianMixture.single(0, 1), 0)


class TestSample:
    def test_clt_mean_bound(self):
        g = GaussianMixture.single(0.5, 0.1)
        s = gmm_sample(g, 100_000, seed=17)
        assert abs(s.mean() - 0.5) < 0.002

    def test_determinism(self):
        g = GaussianMixture(np.array([0.3, 0.7]), np.array([0.0, 1.0]),
                            np.array([0.2, 0.1]))
        a = gmm_sample(g, 1000, seed=33)
        b = gmm_sample(g, 1000, seed=33)
        assert np.array_equal(a, b)

    def test_prefix_stability(self):
        g = GaussianMixture(np.array([0.3, 0.7]), np.array([0.0, 1.0]),
                            np.array([0.2, 0.1]))
        short = gmm_sample(g, 10, seed=44)
        long = gmm_sample(g, 100_000, seed=44)
        assert np.array_equal(short, long[:10])

    def test_component_frequencies(self):
        g = GaussianMixture(np.array([0.3, 0.7]), np.array([-50.0, 50.0]),
                            np.array([0.1, 0.1]))
        s = gmm_sample(g, 100_000, seed=5)
        frac_hi = np.mean(s > 0)
        assert abs(frac_hi - 0.7) < 0.01


class TestFitEM:
    def test_single_gaussian_recovery(self):
        rng = np.random.default_rng(1)
        x = rng.normal(0.02, 0.01, 10_000)
        g, _ = fit_gmm_em(x, k=1, seed=0)
        assert abs(g.means[0] - 0.02) < 3 * 0.01 / math.sqrt(10_000)
        assert abs(g.stds[0] - 0.01) < 0.05 * 0.01

    def test_degenerate_data(self):
        g, _ = fit_gmm_em(np.full(50, 0.37), k=1, seed=0)
        assert g.means[0] == pytest.approx(0.37)
        assert g.stds[0] == STD_FLOOR

    def test_three_component_heldout_loglik(self):
        truth = GaussianMixture(np.array([0.3, 0.4, 0.3]),
                                np.array([-2.0, 0.0, 2.5]),
                                np.array([0.4, 0.3, 0.5]))
        train = gmm_sample(truth, 5000, seed=7)
        held = gmm_sample(truth, 5000, seed=8)
        fit, _ = fit_gmm_em(train, k=3, seed=0)
        assert gmm_loglik(fit, held) >= gmm_loglik(truth, held) - 0.01

    def test_errors(self):
        with pytest.raises(ValueError):
            fit_gmm_em([], k=1)
        with pytest.raises(ValueError):
            fit_gmm_em([1.0, 2.0], k=3)

    def test_loglik_monotone(self):
        rng = np.random.default_rng(19)
        x = np.concatenate([rng.normal(-1, 0.3, 400), rng.normal(1, 0.5, 600)])
        _, trace = fit_gmm_em(x, k=2, seed=0)
        diffs = np.diff(np.array(trace))
        assert np.all(diffs >= -1e-10)

    def test_bic_prefers_multimodal(self):
        truth = GaussianMixture(np.array([0.5, 0.5]), np.array([-2.0, 2.0]),
                                np.array([0.3, 0.3]))
        x = gmm_sample(truth, 3000, seed=2)
        g = fit_gmm_bic(x, k_max=5, seed=0)
        assert g.k >= 2
