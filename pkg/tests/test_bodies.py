import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gausstrunc import (
    Ball,
    DimensionMismatch,
    Halfspace,
    Hyperplane,
    Intersection,
    RngStream,
    Slab,
    SpecParseError,
    TruncationSpec,
    axis,
    contains,
    exact_volume,
    grid_union_random,
    load_spec,
    matched_body,
    mc_volume,
)
from gausstrunc.bodies import body_from_dict, dump_spec, spec_from_dict

SLAB_HALF_R = 0.6744897501960817  # 2 Phi(r) - 1 = 1/2, mpmath root
CHI2_10_MEDIAN = 9.34181776559197


def _closed_form_bodies(n):
    v = np.ones(n) / math.sqrt(n)
    return [
        Halfspace(axis(n), 0.3),
        Halfspace(v, -0.5),
        Slab(v, 0.8),
        Ball(n, math.sqrt(n)),
    ]


class TestContains:
    def test_examples(self):
        assert contains(Ball(4, 1.0), np.zeros(4))
        assert not contains(Halfspace(axis(3), 0.0), np.array([-0.5, 0, 0]))
        assert not contains(Slab(axis(3), 0.68), np.array([0.7, 0, 0]))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            contains(Ball(3, 1.0), np.zeros(4))

    def test_hyperplane_tolerance(self):
        h = Hyperplane(axis(3))
        assert contains(h, np.array([1e-10, 5, 5]))
        assert not contains(h, np.array([1e-8, 5, 5]))

    def test_direction_must_be_unit(self):
        with pytest.raises(ValueError):
            Halfspace(np.array([1.0, 1.0]), 0)

    def test_vectorized(self):
        X = np.array([[0.0, 0.0], [3.0, 0.0]])
        assert list(Ball(2, 1.0).contains(X)) == [True, False]


class TestVolumes:
    def test_examples(self):
        assert exact_volume(Halfspace(axis(2), 0.0)) == 0.5
        assert abs(exact_volume(Slab(axis(2), SLAB_HALF_R)) - 0.5) <= 1e-15
        assert exact_volume(Hyperplane(axis(5))) == 0.0
        assert exact_volume(Intersection((Ball(2, 1.0), Slab(axis(2), 1.0)))) is None

    def test_full_space_ball(self):
        est, se = mc_volume(Ball(3, 50.0), 1000, RngStream(1))
        assert est == 1.0 and se == 0.0

    def test_disjoint_intersection(self):
        body = Intersection((Halfspace(axis(3), 0.0), Halfspace(axis(3, sign=-1), 0.5)))
        est, se = mc_volume(body, 10_000, RngStream(2))
        assert est == 0.0 and se == 0.0

    def test_median_ball(self):
        est, se = mc_volume(Ball(10, math.sqrt(CHI2_10_MEDIAN)), 100_000, RngStream(3))
        assert abs(est - 0.5) <= 0.005

    @pytest.mark.parametrize("n", [5, 50])
    def test_mc_agrees_with_exact(self, n):
        for i, body in enumerate(_closed_form_bodies(n)):
            est, se = mc_volume(body, 40_000, RngStream(n, i))
            assert abs(est - body.exact_volume()) <= 4 * max(se, 1e-3), body

    def test_too_few_trials(self):
        with pytest.raises(ValueError):
            mc_volume(Ball(2, 1.0), 50, RngStream(1))

    @pytest.mark.parametrize("kind", ["slab", "halfspace", "ball"])
    def test_matched_body_volume(self, kind):
        assert abs(matched_body(kind, 12, 0.3).exact_volume() - 0.7) <= 1e-12


class TestConvexity:
    @pytest.mark.parametrize("body", [
        Halfspace(axis(4), 0.2),
        Slab(axis(4), 0.5),
        Ball(4, 2.0),
        Hyperplane(axis(4)),
        Intersection((Ball(4, 2.0), Halfspace(axis(4, 1), -0.3), Slab(axis(4, 2), 1.0))),
    ])
    def test_midpoints_inside(self, body):
        from gausstrunc import sample_truncated

        X = sample_truncated(body, 2000, RngStream(7)).data
        A, B = X[:1000], X[1000:]
        assert np.all(body.contains(0.5 * (A + B)))


class TestSymmetry:
    @pytest.mark.parametrize("body", [
        Slab(axis(6), 0.7),
        Ball(6, 2.0),
        Hyperplane(axis(6)),
        Intersection((Ball(6, 2.5), Slab(axis(6, 3), 0.4))),
    ])
    def test_symmetric_bodies(self, body):
        X = RngStream(9).generator().standard_normal((10_000, 6))
        if isinstance(body, Hyperplane):
            X[:5000] -= np.outer(X[:5000] @ body.direction, body.direction)
        assert body.symmetric
        assert np.array_equal(body.contains(X), body.contains(-X))

    def test_halfspace_not_symmetric(self):
        assert not Halfspace(axis(2), 0.0).symmetric
        assert not Intersection((Ball(2, 1.0), Halfspace(axis(2), 0.0))).symmetric


class TestGridUnion:
    def test_all_kept(self):
        g = grid_union_random(2, 100, 1.0, RngStream(1))
        assert g.exact_volume() == 1.0

    def test_quartiles(self):
        g = grid_union_random(1, 4, 0.5, RngStream(1))
        assert g.kept_count == 2 and g.exact_volume() == 0.5

    def test_million_cells(self):
        g = grid_union_random(2, 10**6, 0.5, RngStream(2))
        assert g.kept_count == 500_000
        est, _ = mc_volume(g, 10_000, RngStream(3))
        assert abs(est - 0.5) <= 0.01

    def test_not_perfect_power(self):
        with pytest.raises(ValueError):
            grid_union_random(2, 10, 0.5, RngStream(1))

    def test_cells_partition(self):
        g = grid_union_random(3, 8**3, 0.5, RngStream(4))
        X = RngStream(5).generator().standard_normal((20_000, 3))
        idx = g.cell_index(X)
        assert idx.min() >= 0 and idx.max() < g.M
        lo, hi = g.cell_bounds(idx)
        assert np.all((X >= lo) & (X < hi))

    def test_cells_equal_volume(self):
        g = grid_union_random(2, 5**2, 0.6, RngStream(4))
        X = RngStream(6).generator().standard_normal((250_000, 2))
        counts = np.bincount(g.cell_index(X), minlength=25) / 250_000
        assert np.max(np.abs(counts - 1 / 25)) < 5 * math.sqrt(0.04 * 0.96 / 250_000)


class TestTruncationSpec:
    def test_weights_normalised(self):
        with pytest.raises(ValueError):
            TruncationSpec.mixture([0.5, 0.6], [Ball(2, 1.0), Ball(2, 2.0)])

    def test_dimension_agreement(self):
        with pytest.raises(DimensionMismatch):
            TruncationSpec.mixture([0.5, 0.5], [Ball(2, 1.0), Ball(3, 2.0)])

    def test_single(self):
        s = TruncationSpec.single(Slab(axis(3), SLAB_HALF_R))
        assert s.n == 3 and abs(s.tv_from_gaussian() - 0.5) < 1e-15


class TestJson:
    @pytest.mark.parametrize("body", [
        Halfspace(np.array([0.6, 0.8]), -0.25),
        Slab(axis(2, 1), 0.3),
        Ball(2, 1.5),
        Hyperplane(np.array([0.6, -0.8])),
        Intersection((Ball(2, 1.5), Halfspace(axis(2), 0.1))),
    ])
    def test_round_trip(self, body):
        back = body_from_dict(json.loads(json.dumps(body.to_dict())))
        X = RngStream(1).generator().standard_normal((500, 2))
        assert type(back) is type(body)
        assert np.array_equal(back.contains(X), body.contains(X))
        assert back.to_dict() == body.to_dict()

    def test_grid_round_trip(self, tmp_path):
        g = grid_union_random(2, 16, 0.5, RngStream(3))
        dump_spec(g, tmp_path / "g.json")
        back = load_spec(tmp_path / "g.json").bodies[0]
        assert np.array_equal(back.kept, g.kept)

    def test_mixture_round_trip(self, tmp_path):
        s = TruncationSpec.mixture([0.25, 0.75], [Ball(3, 1.0), Slab(axis(3), 0.5)])
        dump_spec(s, tmp_path / "m.json")
        back = load_spec(tmp_path / "m.json")
        assert np.allclose(back.weights, [0.25, 0.75]) and back.bodies[1].half_width == 0.5

    @pytest.mark.parametrize("bad", [
        {"variant": "cube", "n": 2},
        {"variant": "ball", "n": 2},
        {"variant": "slab", "n": 3, "direction": [1.0, 0.0], "half_width": 1.0},
    ])
    def test_parse_errors(self, bad):
        with pytest.raises(SpecParseError):
            spec_from_dict(bad)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=6).filter(lambda v: np.linalg.norm(v) > 1e-3),
           st.floats(-3, 3))
    def test_direction_precision_survives(self, v, b):
        v = np.array(v) / np.linalg.norm(v)
        if abs(np.linalg.norm(v) - 1) > 1e-12:
            return
        h = Halfspace(v, b)
        back = body_from_dict(json.loads(json.dumps(h.to_dict())))
        assert np.array_equal(back.direction, h.direction) and back.offset == h.offset
