"""Voronoi-cell diameter probes and the one-dimensional cone radius."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ong_lab import (
    DimensionMismatchError,
    Point,
    PointSequence,
    RandomStream,
    UnsupportedDimensionError,
    cone_radius_1d,
    sample_binomial_process,
    uniform_open,
    voronoi_diameter,
)
from ong_lab.voronoi import (
    METHOD_EXACT,
    METHOD_SAMPLED,
    VORONOI_CSV_HEADER,
    voronoi_csv_row,
)

open_unit = st.floats(min_value=1e-6, max_value=1.0 - 1e-6, allow_nan=False)


class TestExactDiameter1D:
    def test_interior_hand_example(self):
        # midpoints toward 0.3 and 0.8 give the cell [0.4, 0.65]
        est = voronoi_diameter(
            Point((0.5,)),
            PointSequence.from_points([Point((0.3,)), Point((0.8,))]),
            sample_count=0,
        )
        assert est.method == METHOD_EXACT
        assert est.sample_count == 0
        assert est.value == pytest.approx(0.25, abs=1e-15)

    def test_one_sided_boundary_clip(self):
        # sole prefix point to the right: the cell runs from the cube edge
        # to the midpoint, (0, 0.5], diameter 0.5
        est = voronoi_diameter(
            Point((0.1,)), PointSequence.from_points([Point((0.9,))]), sample_count=0
        )
        assert est.value == pytest.approx(0.5, abs=1e-15)

    def test_prefix_point_at_x_imposes_no_constraint(self):
        est = voronoi_diameter(
            Point((0.5,)),
            PointSequence.from_points([Point((0.5,)), Point((0.9,))]),
            sample_count=0,
        )
        assert est.value == pytest.approx(0.7, abs=1e-15)

    def test_empty_prefix_rejected(self):
        with pytest.raises(ValueError):
            voronoi_diameter(Point((0.5,)), PointSequence.empty(1), sample_count=0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            voronoi_diameter(
                Point((0.5, 0.5)),
                PointSequence.from_points([Point((0.3,))]),
                sample_count=0,
            )

    @settings(max_examples=30)
    @given(
        x=open_unit,
        n=st.integers(min_value=1, max_value=40),
        extra=st.integers(min_value=1, max_value=20),
        seed=st.integers(min_value=1, max_value=10**6),
    )
    def test_adding_points_never_grows_the_cell(self, x, n, extra, seed):
        seq = sample_binomial_process(n + extra, 1, RandomStream(seed, (61,)))
        before = voronoi_diameter(Point((x,)), seq.prefix(n), sample_count=0).value
        after = voronoi_diameter(Point((x,)), seq, sample_count=0).value
        assert after <= before + 1e-15


class TestConeRadius1D:
    def test_interior_hand_example(self):
        prefix = PointSequence.from_points([Point((0.3,)), Point((0.8,))])
        r = cone_radius_1d(Point((0.5,)), prefix)
        assert r.value == pytest.approx(0.3, abs=1e-15)
        diam = voronoi_diameter(Point((0.5,)), prefix, sample_count=0).value
        assert 2.0 * r.value >= diam

    def test_boundary_vacuous_side(self):
        # no prefix point left of 0.1: that side is satisfied by the cube
        # boundary at distance 0.1; the right side needs 0.8 to reach 0.9
        r = cone_radius_1d(Point((0.1,)), PointSequence.from_points([Point((0.9,))]))
        assert r.value == pytest.approx(0.8, abs=1e-15)

    def test_prefix_containing_x_itself(self):
        r = cone_radius_1d(
            Point((0.4,)), PointSequence.from_points([Point((0.4,))])
        )
        assert r.value == pytest.approx(0.0, abs=1e-15)
        assert r.value >= 0.0

    def test_unsupported_dimension(self):
        with pytest.raises(UnsupportedDimensionError):
            cone_radius_1d(
                Point((0.5, 0.5)),
                PointSequence.from_points([Point((0.3, 0.3))]),
            )

    @settings(max_examples=40)
    @given(
        x=open_unit,
        n=st.integers(min_value=1, max_value=60),
        seed=st.integers(min_value=1, max_value=10**6),
    )
    def test_twice_radius_dominates_diameter_pathwise(self, x, n, seed):
        seq = sample_binomial_process(n, 1, RandomStream(seed, (62,)))
        probe = Point((x,))
        diam = voronoi_diameter(probe, seq, sample_count=0).value
        r = cone_radius_1d(probe, seq).value
        assert diam <= 2.0 * r + 1e-12


class TestSampledDiameter:
    def test_matches_a_definitional_rebuild(self):
        # same stream, same candidate draws: membership plus max pairwise
        # distance recomputed directly must reproduce the estimate
        d, n, k = 2, 50, 400
        seq = sample_binomial_process(n, d, RandomStream(63, (1,)))
        x = Point((0.5, 0.5))
        s = RandomStream(63, (2,))
        est = voronoi_diameter(x, seq, sample_count=k, s=s)
        assert est.method == METHOD_SAMPLED
        assert est.sample_count == k

        candidates = uniform_open(s.generator(), (k, d))
        xa = np.array(x.coords)
        to_x = np.sum((candidates - xa) ** 2, axis=1)
        to_prefix = np.min(
            np.sum(
                (candidates[:, None, :] - seq.coords[None, :, :]) ** 2, axis=2
            ),
            axis=1,
        )
        cloud = np.concatenate([xa[None, :], candidates[to_x <= to_prefix]])
        best = 0.0
        for a in range(cloud.shape[0]):
            for b in range(a + 1, cloud.shape[0]):
                best = max(best, float(np.sum((cloud[a] - cloud[b]) ** 2)))
        assert est.value == math.sqrt(best)

    def test_value_bounded_by_cube_diameter(self):
        seq = sample_binomial_process(30, 3, RandomStream(64, (1,)))
        est = voronoi_diameter(
            Point((0.5, 0.5, 0.5)), seq, sample_count=500, s=RandomStream(64, (2,))
        )
        assert 0.0 <= est.value <= math.sqrt(3.0)

    def test_grows_with_sample_count_in_expectation(self):
        # max over a growing sample: average the estimate over independent
        # streams at two sample counts and check the ordering
        seq = sample_binomial_process(20, 2, RandomStream(65, (1,)))
        x = Point((0.5, 0.5))
        lo, hi = [], []
        for r in range(20):
            lo.append(
                voronoi_diameter(x, seq, sample_count=30, s=RandomStream(65, (2, r))).value
            )
            hi.append(
                voronoi_diameter(x, seq, sample_count=600, s=RandomStream(65, (3, r))).value
            )
        assert float(np.mean(hi)) > float(np.mean(lo))

    def test_sampling_contract_errors(self):
        seq = sample_binomial_process(10, 2, RandomStream(66, (1,)))
        x = Point((0.5, 0.5))
        with pytest.raises(ValueError):
            voronoi_diameter(x, seq, sample_count=0, s=RandomStream(66, (2,)))
        with pytest.raises(ValueError):
            voronoi_diameter(x, seq, sample_count=100, s=None)


class TestCsvEmission:
    def test_one_dimensional_row(self):
        est = voronoi_diameter(
            Point((0.5,)), PointSequence.from_points([Point((0.3,))]), sample_count=0
        )
        row = voronoi_csv_row(est)
        assert len(VORONOI_CSV_HEADER) == len(row) == 5
        assert row[0] == 1
        assert row[2] == "0.5"
        assert row[3] == METHOD_EXACT

    def test_two_dimensional_row_joins_coordinates(self):
        seq = sample_binomial_process(5, 2, RandomStream(67, (1,)))
        est = voronoi_diameter(
            Point((0.25, 0.75)), seq, sample_count=10, s=RandomStream(67, (2,))
        )
        row = voronoi_csv_row(est)
        assert row[2] == "0.25;0.75"
        assert row[3] == METHOD_SAMPLED
