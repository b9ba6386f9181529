import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import mean_se, within
from gausstrunc import (
    Ball,
    Halfspace,
    Intersection,
    RngStream,
    SampleBatch,
    Slab,
    TooFewSamples,
    axis,
    gaussian_batch,
    map_trials,
    matched_body,
    sample_truncated,
)
from gausstrunc.influence import truncated_moments
from gausstrunc.testers import (
    TestConfig,
    UnderpoweredWarning,
    calibrate_threshold,
    convex_distinguisher,
    detection_rate,
    geometric_median,
    ltf_distinguisher,
    mean_estimator,
    null_statistics,
    statistic_M,
    statistic_N,
    symm_convex_distinguisher,
)


class TestStatistics:
    def test_zero_rows(self):
        assert statistic_M(np.zeros((5, 3))) == 0.0

    def test_unit_rows(self):
        assert statistic_M(np.tile(axis(4), (7, 1))) == 1.0

    def test_null_moments_small(self):
        M = null_statistics("symm", 20, 100, 2000, RngStream(1))
        m, se = mean_se(M)
        assert within(m, 20.0, se)
        assert abs(M.var(ddof=1) / (2 * 20 / 100) - 1) <= 0.2

    def test_statistic_N(self):
        X = np.array([[1.0, 0.0], [1.0, 2.0]])
        assert statistic_N(X) == 1.0 + 1.0


class TestMeanEstimator:
    def test_identical_rows(self):
        x = np.array([0.1, -3.3, 7.25])
        assert np.array_equal(mean_estimator(np.tile(x, (100, 1))), x)

    def test_too_few(self):
        with pytest.raises(TooFewSamples):
            mean_estimator(np.zeros((10, 2)), 0.01)

    def test_null_norm_small(self):
        vals = map_trials(lambda s: float(np.sum(mean_estimator(gaussian_batch(50, 5000, s)) ** 2)),
                          RngStream(2), 100)
        assert sum(v <= 0.05 for v in vals) >= 99

    def test_halfspace_mean(self):
        L = mean_estimator(sample_truncated(Halfspace(axis(10), 0.0), 20_000, RngStream(3)))
        assert abs(L[0] - math.sqrt(2 / math.pi)) <= 0.02

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32), st.floats(-5, 5))
    def test_geometric_median_equivariance(self, seed, shift):
        P = np.random.default_rng(seed).standard_normal((15, 3))
        Q, _ = np.linalg.qr(np.random.default_rng(seed + 1).standard_normal((3, 3)))
        a = geometric_median(P @ Q.T + shift)
        b = geometric_median(P) @ Q.T + shift
        assert np.allclose(a, b, atol=1e-6)

    def test_geometric_median_robust(self):
        P = np.zeros((21, 2))
        P[:10] = 1e6  # minority of outliers
        assert np.linalg.norm(geometric_median(P)) < 1e-3


class TestConfigRules:
    def test_auto_T(self):
        assert TestConfig(100, 0.5).T == 3200
        c = TestConfig(400, 0.5, algorithm="ltf")
        assert c.T == math.ceil(8 * 20 / 0.25 + 8 * math.log(2) ** 2 / 0.0625)

    def test_needs_eps_or_T(self):
        with pytest.raises(ValueError):
            TestConfig(10)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5000), st.floats(0.02, 0.98), st.sampled_from(["symm", "ltf"]))
    def test_eps_eff_inverts_rule(self, n, eps, alg):
        T = TestConfig(n, eps, algorithm=alg).T
        back = TestConfig(n, None, T, alg).eps_eff
        # ceil() makes the implied eps slightly smaller, never larger
        assert back <= eps * (1 + 1e-9)
        C = TestConfig(n, 0.5).C_sample
        if alg == "ltf":
            rule = C * math.sqrt(n) / back**2 + C * math.log(1 / back) ** 2 / back**4
        else:
            rule = C * n / back**2
        assert rule == pytest.approx(T, rel=1e-9)

    def test_underpowered_warning(self):
        cfg = TestConfig(10, 0.5, T=20)
        with pytest.warns(UnderpoweredWarning):
            rep = symm_convex_distinguisher(gaussian_batch(10, 20, RngStream(1)), cfg)
        assert rep.warnings and "underpowered" in rep.warnings[0]


class TestVerdicts:
    def test_tie_is_untruncated(self):
        cfg = TestConfig(2, 0.5, T=5, c_sym=4.0)  # threshold 2 - 4 * 0.25 = 1
        batch = SampleBatch(np.tile(axis(2), (5, 1)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = symm_convex_distinguisher(batch, cfg)
        assert rep.statistic_M == rep.thresholds["M"] == 1.0
        assert rep.verdict == "untruncated"

    def test_verdict_is_function_of_statistics(self):
        cfg = TestConfig(20, 0.5, algorithm="convex")
        rep = convex_distinguisher(gaussian_batch(20, cfg.T, RngStream(4)), cfg)
        expect = rep.statistic_M < rep.thresholds["M"] or rep.statistic_L_normsq >= rep.thresholds["L_normsq"]
        assert rep.truncated == expect

    def test_report_provenance(self):
        cfg = TestConfig(5, 0.5)
        rep = symm_convex_distinguisher(gaussian_batch(5, cfg.T, RngStream(9, 3)), cfg)
        assert (rep.master_seed, rep.stream_index) == (9, 3)


class TestLtfLaw:
    def test_null(self):
        n, T = 20, 50
        N = null_statistics("ltf", n, T, 2000, RngStream(5))
        m, se = mean_se(N)
        assert within(m, n / T, se)
        v = N.var(ddof=1)
        # stderr of the sample variance via fourth central moment
        v_se = math.sqrt(np.var((N - N.mean()) ** 2, ddof=1) / N.size)
        assert within(v, 2 * n / T**2, v_se)

    @pytest.mark.parametrize("b", [0.0, 1.0])
    def test_halfspace_mean(self, b):
        n, T = 20, 50
        m1 = truncated_moments(b).M1
        expect = n / T + m1**2 + m1 * (b - m1) / T
        N = np.array(map_trials(lambda s: statistic_N(sample_truncated(Halfspace(axis(n), b), T, s)),
                                RngStream(6), 2000))
        m, se = mean_se(N)
        assert within(m, expect, se)

    def test_detects_halfspace(self):
        cfg = TestConfig(100, 0.5, algorithm="ltf")
        rate, _ = detection_rate(Halfspace(axis(100), 0.0), cfg, 100, RngStream(7))
        assert rate >= 0.9
        rep = ltf_distinguisher(gaussian_batch(100, cfg.T, RngStream(8)), cfg)
        assert rep.statistic_N is not None


class TestCalibration:
    def test_normal_approximation(self):
        n, T = 20, 200
        cal = calibrate_threshold("symm", n, None, T, 0.1, 1000, RngStream(10))
        sigma = math.sqrt(2 * n / T)
        approx = n - stats.norm.ppf(0.9) * sigma
        # quantile stderr ~ sqrt(a(1-a)/N) / density
        q_se = math.sqrt(0.09 / 1000) / (stats.norm.pdf(stats.norm.ppf(0.9)) / sigma)
        assert abs(cal.threshold - approx) <= 4 * q_se

    def test_median(self):
        stats_ = null_statistics("symm", 20, 200, 1000, RngStream(11))
        cal = calibrate_threshold("symm", 20, None, 200, 0.5, 1000, RngStream(11))
        assert cal.threshold == pytest.approx(np.median(stats_))

    def test_ltf_upper_quantile(self):
        cal = calibrate_threshold("ltf", 20, None, 100, 0.1, 1000, RngStream(12))
        stats_ = null_statistics("ltf", 20, 100, 1000, RngStream(12))
        assert abs((stats_ >= cal.threshold).mean() - 0.1) <= 0.01

    def test_transfer_to_double_dimension(self):
        alpha0 = 0.1
        cal = calibrate_threshold("symm", 20, 0.5, None, alpha0, 1000, RngStream(13))
        cfg = cal.apply(TestConfig(40, 0.5))
        rate, _ = detection_rate(Ball(40, 1e3), cfg, 500, RngStream(14))
        assert rate <= alpha0 + 0.05

    def test_min_trials(self):
        with pytest.raises(ValueError):
            calibrate_threshold("symm", 5, 0.5, None, 0.1, 100, RngStream(1))


class TestStructuralProperties:
    def test_monotone_power_in_volume(self):
        n, T = 20, 400
        cfg = TestConfig(n, None, T, "symm")
        rates = [detection_rate(matched_body("slab", n, 1 - vol), cfg, 500, RngStream(15))[0]
                 for vol in (0.3, 0.5, 0.7, 0.9)]
        assert all(a >= b for a, b in zip(rates, rates[1:])), rates

    @pytest.mark.parametrize("n", [10, 50])
    @pytest.mark.parametrize("kind", ["slab", "ball"])
    def test_variance_ceiling(self, n, kind):
        X = sample_truncated(matched_body(kind, n, 0.5), 50_000, RngStream(n, 16)).data
        sq = (X**2).sum(1)
        v = sq.var(ddof=1)
        v_se = math.sqrt(np.var((sq - sq.mean()) ** 2, ddof=1) / sq.size)
        assert v <= 4 * n + 5 * v_se

    @pytest.mark.parametrize("body", [
        Slab(axis(8), 0.5),
        matched_body("ball", 8, 0.4),
        Halfspace(axis(8), 0.7),
        Intersection((Ball(8, 2.5), Halfspace(axis(8, 2), -0.2))),
    ])
    def test_directional_variance(self, body):
        X = sample_truncated(body, 50_000, RngStream(17)).data
        for v in RngStream(18).generator().standard_normal((5, 8)):
            v /= np.linalg.norm(v)
            y = X @ v
            v_se = math.sqrt(np.var((y - y.mean()) ** 2, ddof=1) / y.size)
            assert y.var(ddof=1) <= 1 + 4 * v_se

    def test_mean_drop_probe(self):
        n, eps = 20, 0.3
        kappas = []
        for body in (matched_body("slab", n, eps), matched_body("ball", n, eps),
                     Intersection((matched_body("slab", n, eps / 2), Slab(axis(n, 1), 2.0)))):
            X = sample_truncated(body, 50_000, RngStream(19)).data
            kappas.append((n - (X**2).sum(1).mean()) / eps)
        print("fitted mean-drop constant kappa =", min(kappas))
        assert min(kappas) > 0

    def test_reflected_halfspace_second_moment(self):
        body = Halfspace(axis(6, sign=-1), -0.1)  # x_1 <= 0.1
        X = sample_truncated(body, 100_000, RngStream(20)).data
        x1 = X[:, 0]
        mu = x1.mean()
        _, se = mean_se(x1**2)
        bound = 1 + mu**2 - math.exp(-((0.1 - mu) ** 2)) / (2 * math.pi)
        assert (x1**2).mean() <= bound + 4 * se
