import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from conftest import within
from gausstrunc import Ball, Halfspace, Intersection, RngStream, Slab, axis, matched_body
from gausstrunc.influence import (
    convex_influence,
    gaussian_isoperimetric_lb,
    influence_identity_check,
    mills_ratio,
    total_convex_influence,
    truncated_moments,
)

MILLS_ZERO = 1.2533141373155003  # sqrt(pi/2), mpmath tail quadrature
M1_ZERO = 0.7978845608028654
SLAB1_INFLUENCE = 0.3421982803122165  # int_{-1}^{1} (1 - x^2) phi(x) dx / sqrt(2), mpmath


def _phi(x):
    return math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


def _quad_moment(p, b):
    num = sum(integrate.quad(lambda x: x**p * _phi(x), lo, hi, epsabs=1e-15, epsrel=1e-12, limit=200)[0]
              for lo, hi in ((b, max(b, 0.0)), (max(b, 0.0), 40.0)))
    return num / special.ndtr(-b)


class TestMills:
    def test_zero(self):
        assert abs(mills_ratio(0.0) - MILLS_ZERO) <= 1e-15

    def test_bounds_at_two(self):
        assert 2 / 5 <= mills_ratio(2.0) <= 1 / 2

    def test_negative(self):
        assert mills_ratio(-3.0) >= math.sqrt(math.pi / 2)

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 5.0, 10.0])
    def test_sandwich(self, x):
        assert x / (1 + x * x) <= mills_ratio(x) <= 1 / x

    def test_branch_continuity(self):
        a, b = mills_ratio(5.0), mills_ratio(np.nextafter(5.0, 6.0))
        assert abs(a - b) <= 1e-12 * a

    def test_far_tail_against_mpmath(self):
        import mpmath as mp

        mp.mp.dps = 40
        for x in (6.0, 20.0, 39.0):
            ref = float(mp.ncdf(-x) / mp.npdf(x))
            assert abs(mills_ratio(x) - ref) <= 1e-13 * ref

    def test_range(self):
        with pytest.raises(ValueError):
            mills_ratio(41.0)


class TestMoments:
    def test_zero(self):
        m = truncated_moments(0.0)
        assert m.M2 == 1.0 and m.M4 == 3.0
        assert abs(m.M1 - M1_ZERO) <= 1e-15

    @pytest.mark.parametrize("b", [-3, -2, -1, 0, 1, 2, 3])
    def test_against_quadrature(self, b):
        m = truncated_moments(b)
        for p, val in enumerate((m.M1, m.M2, m.M3, m.M4), start=1):
            ref = _quad_moment(p, b)
            assert abs(val - ref) <= 1e-9 * abs(ref), (b, p)

    # below b ~ -38.5 the first moment phi(b) / Phi(-b) underflows to 0.0
    @settings(max_examples=200, deadline=None)
    @given(st.floats(-38, 40))
    def test_invariants(self, b):
        m = truncated_moments(b)
        assert m.M2 >= m.M1**2 * (1 - 1e-9)
        assert m.M4 >= m.M2**2 * (1 - 1e-9)
        assert m.M1 > max(b, 0.0)


class TestInfluence:
    def test_full_space(self):
        est = convex_influence(Ball(4, 50.0), axis(4), 200_000, RngStream(1))
        assert within(est.value, 0.0, est.stderr)

    def test_orthogonal_direction(self):
        est = convex_influence(Slab(axis(4), 0.8), axis(4, 1), 200_000, RngStream(2))
        assert within(est.value, 0.0, est.stderr)

    def test_slab_along_normal(self):
        est = convex_influence(Slab(axis(3), 1.0), axis(3), 200_000, RngStream(3))
        assert within(est.value, SLAB1_INFLUENCE, est.stderr)
        assert abs(SLAB1_INFLUENCE - math.sqrt(2) * _phi(1.0)) <= 1e-15

    def test_total_full_space(self):
        est = total_convex_influence(Ball(5, 50.0), 100_000, RngStream(4))
        assert within(est.value, 0.0, est.stderr)

    def test_chunking_invariance(self):
        a = total_convex_influence(Ball(5, 2.0), 150_000, RngStream(5))
        b = total_convex_influence(Ball(5, 2.0), 150_000, RngStream(5))
        assert a.value == b.value and a.stderr == b.stderr

    def test_needs_trials(self):
        with pytest.raises(ValueError):
            convex_influence(Ball(2, 1.0), axis(2), 10, RngStream(1))

    @pytest.mark.parametrize("n", [5, 20])
    @pytest.mark.parametrize("kind", ["slab", "ball", "intersection"])
    def test_identity(self, n, kind):
        body = {
            "slab": Slab(axis(n), 0.6745),
            "ball": matched_body("ball", n, 0.5),
            "intersection": Intersection((matched_body("ball", n, 0.3), Slab(axis(n, 1), 0.9))),
        }[kind]
        chk = influence_identity_check(body, 100_000, RngStream(n, len(kind)))
        assert abs(chk.discrepancy) <= 4 * chk.stderr

    def test_identity_median_ball_n10(self):
        chk = influence_identity_check(matched_body("ball", 10, 0.5), 100_000, RngStream(6))
        assert abs(chk.discrepancy) <= 4 * chk.stderr

    def test_poincare_probe(self):
        body = Slab(axis(10), 0.6745)
        est = total_convex_influence(body, 200_000, RngStream(7))
        vol = body.exact_volume()
        assert est.value / vol >= 0.1 * (1 - vol)

    def test_centered_direction_nonnegative(self):
        for b in (-1.0, 0.0, 0.5, 1.5):
            est = convex_influence(Halfspace(axis(4), b), axis(4, 1), 200_000, RngStream(8))
            assert est.value >= -4 * est.stderr


class TestIsoperimetric:
    def test_half(self):
        r = gaussian_isoperimetric_lb(0.5)
        assert abs(r.bound - 0.3989422804014327) <= 1e-15
        assert abs(r.profile - 0.3989422804014327) <= 1e-15
        assert r.bound <= r.profile + 1e-15

    def test_small(self):
        r = gaussian_isoperimetric_lb(0.01)
        assert abs(r.bound - 0.007978845608028654) <= 1e-15
        assert abs(r.profile - 0.026652142203458049) <= 1e-12

    def test_upper_branch(self):
        assert gaussian_isoperimetric_lb(0.999).bound == pytest.approx(math.sqrt(2 / math.pi) * 0.001)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(1e-6, 1 - 1e-6))
    def test_bound_below_profile(self, eps):
        r = gaussian_isoperimetric_lb(eps)
        assert r.bound <= r.profile * (1 + 1e-12)
