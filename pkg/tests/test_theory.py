import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrivalqrng import theory
from arrivalqrng.config import BinDistribution, DomainError, ExperimentConfig

from conftest import REFERENCE_LAMBDA_T0, REFERENCE_N0, REFERENCE_ND


def literal_curve(cfg):
    """Three-term single-pulse sum with the double loop written out, for checking the vectorized path."""
    nd, n0 = cfg.nd, cfg.n0
    p0 = math.exp(-cfg.lambda_t0)
    pe = 1 - p0

    def p(n, k):
        if k <= 0:
            return 0.0
        return (p0 ** (n - 1) * pe + p0 ** (n - 2) * pe**2 * theory.merge_count_h(n - k, nd)
                + p0 ** (n - 3) * pe**3 * theory.merge_count_h_prime(n - k, nd))

    out = []
    for k in range(1, n0 + 1):
        second = sum(p(n0 - i, k - i) for i in range(1, nd + 1))
        third = sum(p0 ** (nd - i) * sum(p(n0 - j - nd, k - j - nd) for j in range(1, i + 1))
                    for i in range(1, nd + 1))
        out.append(p0**nd * p(n0, k) + p0**nd * pe * second + p0**nd * pe**2 * third)
    return np.array(out)


class TestPoisson:
    def test_empty_process(self):
        assert theory.poisson_pmf(0, 0) == 1.0
        assert theory.poisson_pmf(0, 3) == 0.0

    @pytest.mark.parametrize("count", [0, 1, 2, 5, 30])
    def test_against_mpmath(self, count):
        mu = mpmath.mpf("0.2176")
        expected = float(mpmath.exp(-mu) * mu**count / mpmath.factorial(count))
        assert theory.poisson_pmf(0.2176, count) == pytest.approx(expected, rel=1e-13)

    def test_values(self):
        assert theory.poisson_pmf(0.2176, 0) == pytest.approx(0.80445, abs=5e-6)
        assert theory.poisson_pmf(0.2176, 1) == pytest.approx(0.17505, abs=5e-6)

    def test_large_count_stays_finite(self):
        assert 0 < theory.poisson_pmf(1000.0, 1000) < 1

    def test_negative_mean(self):
        with pytest.raises(DomainError):
            theory.poisson_pmf(-0.1, 0)


class TestFirstArrival:
    def test_values(self):
        # 40-digit mpmath evaluation of the closed form
        assert theory.first_arrival_bin_pmf(0.00068, 320, 1) == pytest.approx(0.0034761389255403827, rel=1e-12)
        assert theory.first_arrival_bin_pmf(0.00068, 320, 320) == pytest.approx(0.0027982722514610255, rel=1e-12)

    def test_sums_to_one(self):
        total = math.fsum(theory.first_arrival_bin_pmf(0.00068, 320, k) for k in range(1, 321))
        assert total == pytest.approx(1.0, abs=1e-12)
        assert theory.first_arrival_distribution(0.00068, 320).total == pytest.approx(1.0, abs=1e-12)

    def test_decreasing(self):
        d = theory.first_arrival_distribution(0.01, 50).values
        assert np.all(np.diff(d) < 0)

    @pytest.mark.parametrize("k", [0, 321])
    def test_out_of_range(self, k):
        with pytest.raises(DomainError):
            theory.first_arrival_bin_pmf(0.00068, 320, k)


@pytest.mark.parametrize("n0, expected", [(320, 0.003125), (1, 1.0), (256, 0.00390625)])
def test_conditional_uniform(n0, expected):
    assert theory.conditional_uniform_pmf(n0) == expected


def test_conditional_uniform_zero():
    with pytest.raises(DomainError):
        theory.conditional_uniform_pmf(0)


class TestDeadTimeCount:
    def test_single_pulse_value(self):
        assert theory.deadtime_count_pmf(0.2176, 0.1, 1) == pytest.approx(0.1786, abs=5e-4)
        assert theory.prob_single_pulse(0.2176, 0.1) == theory.deadtime_count_pmf(0.2176, 0.1, 1)

    def test_no_events(self):
        assert theory.deadtime_count_pmf(0.0, 0.1, 0) == 1.0
        assert theory.prob_single_pulse(0.0, 0.1) == 0.0

    @pytest.mark.parametrize("m", range(6))
    def test_zero_dead_time_is_poisson(self, m):
        assert theory.deadtime_count_pmf(0.2176, 0.0, m) == pytest.approx(theory.poisson_pmf(0.2176, m), abs=1e-10)

    def test_small_dead_time_approaches_poisson(self):
        for m in range(4):
            assert theory.deadtime_count_pmf(0.2176, 1e-4, m) == pytest.approx(
                theory.poisson_pmf(0.2176, m), abs=1e-4)

    def test_impossible_count(self):
        assert theory.deadtime_count_pmf(0.5, 0.1, 11) == 0.0

    def test_series_limit_choice_is_immaterial(self):
        # K = ceil(T0/td) = 10 at r = 0.1; the i = 10 term has base 1 - 10r = 0 and vanishes
        assert theory._series_limit(0.1) == 10
        assert theory._series_limit(32 / 320) == 10

    def test_sums_to_one(self):
        for mu, r in [(0.2176, 0.1), (1.0, 0.1), (0.5, 0.15), (2.0, 0.25)]:
            total = math.fsum(theory.deadtime_count_pmf(mu, r, m) for m in range(0, math.ceil(1 / r) + 1))
            assert total == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("r", [1.0, 1.5, -0.1])
    def test_bad_ratio(self, r):
        with pytest.raises(DomainError):
            theory.deadtime_count_pmf(0.2, r, 1)

    @given(st.floats(0, 5), st.floats(0.01, 0.5), st.integers(0, 12))
    def test_probability_range(self, mu, r, m):
        assert 0.0 <= theory.deadtime_count_pmf(mu, r, m) <= 1.0 + 1e-12


class TestMergeCounts:
    @pytest.mark.parametrize("x, expected", [(-1, 0), (0, 0), (10, 10), (32, 32), (33, 32), (100, 32)])
    def test_h(self, x, expected):
        assert theory.merge_count_h(x, 32) == expected

    @pytest.mark.parametrize("x, expected", [(1, 0), (2, 1), (3, 3), (64, 1024), (100, 1024)])
    def test_h_prime(self, x, expected):
        assert theory.merge_count_h_prime(x, 32) == expected

    @given(st.integers(1, 200))
    def test_h_prime_continuous_at_breaks(self, nd):
        hp = theory.merge_count_h_prime
        # adjacent branches agree where they meet
        assert nd * (nd + 1) / 2 == pytest.approx(hp(nd + 1, nd))
        assert nd * (2 * nd - nd) + (2 * nd - 1) * 0 / 2 == hp(2 * nd, nd)
        lower = nd * (nd + 1 - nd) + nd * (2 * nd - nd - 1) / 2
        assert lower == pytest.approx(hp(nd + 1, nd))

    def test_h_prime_counts_pairs(self):
        # brute force: second detection 1..nd after the first, third 1..nd after the second, within x bins
        nd = 5
        for x in range(0, 15):
            count = sum(1 for a in range(1, nd + 1) for b in range(1, nd + 1) if a + b <= x)
            if x < 2 * nd:
                assert theory.merge_count_h_prime(x, nd) == count


class TestBinDistribution:
    def test_vectorized_matches_literal_sum(self, reference_cfg):
        fast = theory.single_pulse_curve(reference_cfg)
        slow = literal_curve(reference_cfg)
        np.testing.assert_allclose(fast, slow, rtol=1e-12, atol=0)

    def test_literal_small_config(self):
        cfg = ExperimentConfig.from_lambda_t0(0.02, 30, 4)
        np.testing.assert_allclose(theory.single_pulse_curve(cfg), literal_curve(cfg), rtol=1e-12)

    def test_scalar_accessor(self, reference_cfg):
        curve = theory.single_pulse_curve(reference_cfg)
        assert theory.single_pulse_bin_prob(reference_cfg, 1) == curve[0]
        assert theory.single_pulse_bin_prob(reference_cfg, 320) == curve[-1]
        with pytest.raises(DomainError):
            theory.single_pulse_bin_prob(reference_cfg, 321)

    def test_zero_dead_time_is_constant(self):
        cfg = ExperimentConfig.from_lambda_t0(0.00068, 320, 0)
        p0 = math.exp(-0.00068)
        curve = theory.single_pulse_curve(cfg)
        np.testing.assert_allclose(curve, p0**319 * (1 - p0), rtol=1e-13)
        dist = theory.normalized_bin_distribution(cfg)
        assert dist.values.max() - dist.values.min() < 1e-14
        assert dist.values[0] == pytest.approx(1 / 320, abs=1e-15)

    def test_reference_peak(self, reference_cfg):
        dist = theory.normalized_bin_distribution(reference_cfg)
        assert dist.total == pytest.approx(1.0, abs=1e-12)
        assert dist.max == pytest.approx(0.003132, abs=2e-6)
        # dead time depresses the earliest bins
        assert dist[1] < dist[100]

    def test_no_signal(self):
        cfg = ExperimentConfig.from_lambda_t0(0.0, 320, 32)
        with pytest.raises(DomainError, match="no signal"):
            theory.normalized_bin_distribution(cfg)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(1e-5, 5e-3), st.integers(4, 400), st.data())
    def test_normalized(self, lambda_t0, n0, data):
        nd = data.draw(st.integers(0, (n0 - 1) // 2))
        cfg = ExperimentConfig.from_lambda_t0(lambda_t0, n0, nd)
        dist = theory.normalized_bin_distribution(cfg)
        assert abs(math.fsum(dist.values) - 1) < 1e-12
        trunc = theory.truncate_distribution(dist, nd)
        assert trunc.n0 == n0 - 2 * nd
        assert abs(math.fsum(trunc.values) - 1) < 1e-12


class TestTruncation:
    def test_reference_truncated_peak(self, reference_cfg):
        trunc = theory.truncate_distribution(theory.normalized_bin_distribution(reference_cfg), 32)
        assert trunc.n0 == 256
        assert trunc.max == pytest.approx(0.00390633, abs=5e-8)

    def test_uniform_input(self):
        dist = BinDistribution(np.full(100, 0.01))
        trunc = theory.truncate_distribution(dist, 10)
        np.testing.assert_allclose(trunc.values, 1 / 80, rtol=1e-14)

    def test_identity(self, reference_cfg):
        dist = theory.normalized_bin_distribution(reference_cfg)
        np.testing.assert_allclose(theory.truncate_distribution(dist, 0).values, dist.values, rtol=1e-15)

    def test_empty_range(self):
        with pytest.raises(DomainError):
            theory.truncate_distribution(BinDistribution(np.full(10, 0.1)), 5)


class TestMinEntropy:
    def test_reference_values(self):
        assert theory.min_entropy_per_bit(0.00390633, 256) == pytest.approx(0.999996, abs=1e-6)
        assert theory.min_entropy_per_bit(0.003132, 320) == pytest.approx(0.99961, abs=1e-4)

    def test_uniform(self):
        assert theory.min_entropy_per_bit(1 / 256, 256) == 1.0

    @pytest.mark.parametrize("p", [0.0, -0.1, 1.01])
    def test_bad_p(self, p):
        with pytest.raises(DomainError):
            theory.min_entropy_per_bit(p, 256)

    @given(st.floats(1 / 256 * (1 + 1e-9), 1.0))
    def test_bounds(self, p):
        h = theory.min_entropy_per_bit(p, 256)
        assert 0 <= h < 1


class TestRetainedFraction:
    def test_reference_config(self, reference_cfg):
        kept = theory.retained_fraction(theory.normalized_bin_distribution(reference_cfg), 32)
        assert kept.exact == pytest.approx(0.803, abs=0.002)
        assert kept.approximate == 0.8
        assert abs(kept.exact - kept.approximate) < 0.01

    def test_uniform_no_cut(self):
        kept = theory.retained_fraction(BinDistribution(np.full(8, 0.125)), 0)
        assert kept.exact == 1.0 and kept.approximate == 1.0


class TestBitrate:
    def test_reference_config(self, reference_cfg):
        rate = theory.predicted_bitrate(reference_cfg)
        assert rate.bits_per_symbol == 8.0
        assert rate.exact_bps / 1e6 == pytest.approx(22.13, abs=0.05)
        # same formula fed the printed factors
        assert 8 * 0.1786 / 51.84e-9 * 0.803 / 1e6 == pytest.approx(22.13, abs=0.01)

    def test_no_light(self):
        cfg = ExperimentConfig.from_lambda_t0(0.0, 320, 32)
        assert theory.predicted_bitrate(cfg).exact_bps == 0.0

    def test_non_power_of_two_bits(self):
        cfg = ExperimentConfig.from_lambda_t0(0.001, 300, 10)
        assert theory.predicted_bitrate(cfg).bits_per_symbol == pytest.approx(math.log2(280))

    def test_projection_order_of_magnitude(self):
        # 1 ns dead time, 10 ps bins, 10 ns period, mu chosen so one-pulse probability exceeds 0.4
        cfg = ExperimentConfig(t0_seconds=10e-12, n0=1000, nd=100, lambda_per_second=1.0 / 10e-9)
        rate = theory.predicted_bitrate(cfg)
        assert rate.p_single_pulse > 0.4
        assert 1e8 < rate.exact_bps < 1e9

    def test_sweep_monotone_in_p1(self, reference_cfg):
        mus = np.linspace(0.05, 1.2, 24)
        sweep = theory.bitrate_sweep(reference_cfg, mus)
        p1 = [s.p_single_pulse for s in sweep]
        bps = [s.approximate_bps for s in sweep]
        np.testing.assert_allclose(np.array(bps) / np.array(p1), bps[0] / p1[0], rtol=1e-12)
