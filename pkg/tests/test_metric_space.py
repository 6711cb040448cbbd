"""Tests for finite pointed metric spaces and Gromov-Hausdorff machinery."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leafscope.errors import DomainError, RefusalError, ValidationError
from leafscope.metric_space import (
    GhBounds,
    PointedFiniteMetricSpace,
    exact_pointed_gh_small,
    gh_bounds,
    hausdorff_distance,
    load_space,
    save_space,
    space_from_json,
    space_to_json,
    truncated_ball,
)


def euclidean_space(pts, basepoint=0):
    pts = np.asarray(pts, dtype=float)
    d = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    return PointedFiniteMetricSpace(
        points=tuple(f"p{i}" for i in range(len(pts))), dist=d, basepoint=basepoint
    )


def random_euclidean(rng, n, scale=1.5, dim=2, basepoint=0):
    return euclidean_space(rng.uniform(0, scale, size=(n, dim)), basepoint)


def line_space(xs, basepoint=0):
    xs = np.asarray(xs, dtype=float)
    return PointedFiniteMetricSpace(
        points=tuple(str(x) for x in xs),
        dist=np.abs(xs[:, None] - xs[None, :]),
        basepoint=basepoint,
    )


# ---------------------------------------------------------------------------
# Construction and validation
# ---------------------------------------------------------------------------


class TestValidation:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValidationError):
            PointedFiniteMetricSpace(("a", "b"), [[0, 1], [2, 0]], 0)

    def test_rejects_nonzero_diagonal(self):
        with pytest.raises(ValidationError):
            PointedFiniteMetricSpace(("a", "b"), [[0.5, 1], [1, 0]], 0)

    def test_rejects_triangle_violation(self):
        d = [[0, 1, 5], [1, 0, 1], [5, 1, 0]]
        with pytest.raises(ValidationError):
            PointedFiniteMetricSpace(("a", "b", "c"), d, 0)

    def test_rejects_bad_basepoint(self):
        with pytest.raises(ValidationError):
            PointedFiniteMetricSpace(("a",), [[0.0]], 3)

    def test_triangle_tolerance_accepted(self):
        # Violation below 1e-9 passes.
        d = np.array([[0, 1, 2 + 0.5e-9], [1, 0, 1], [2 + 0.5e-9, 1, 0]])
        PointedFiniteMetricSpace(("a", "b", "c"), d, 0)

    def test_dist_is_immutable(self):
        s = line_space([0, 1, 2])
        with pytest.raises(ValueError):
            s.dist[0, 1] = 7.0


# ---------------------------------------------------------------------------
# Hausdorff distance
# ---------------------------------------------------------------------------


class TestHausdorff:
    def test_identical_singletons(self):
        s = line_space([0, 3])
        assert hausdorff_distance([0], [0], s) == 0.0

    def test_singleton_versus_pair_on_line(self):
        s = line_space([0, 3])
        assert hausdorff_distance([0], [0, 1], s) == 3.0

    def test_empty_subset_rejected(self):
        s = line_space([0, 3])
        with pytest.raises(DomainError):
            hausdorff_distance([], [0], s)

    def test_matches_brute_force_on_random_subsets(self):
        rng = np.random.default_rng(11)
        s = random_euclidean(rng, 6)
        for _ in range(25):
            a = rng.choice(6, size=rng.integers(1, 6), replace=False)
            b = rng.choice(6, size=rng.integers(1, 6), replace=False)
            brute = max(
                max(min(s.dist[i, j] for j in b) for i in a),
                max(min(s.dist[i, j] for i in a) for j in b),
            )
            assert hausdorff_distance(a, b, s) == pytest.approx(brute)

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        s = random_euclidean(rng, 6)
        a, b = [0, 2, 4], [1, 5]
        assert hausdorff_distance(a, b, s) == hausdorff_distance(b, a, s)


# ---------------------------------------------------------------------------
# Truncated balls
# ---------------------------------------------------------------------------


class TestTruncatedBall:
    def test_radius_zero_keeps_basepoint_only(self):
        s = line_space([0, 1, 2], basepoint=1)
        t = truncated_ball(s, 0.0)
        assert t.n_points == 1
        assert t.points == ("1.0",)
        assert t.basepoint == 0

    def test_radius_beyond_diameter_is_identity(self):
        s = line_space([0, 1, 2])
        t = truncated_ball(s, 10.0)
        assert t.points == s.points
        np.testing.assert_array_equal(t.dist, s.dist)

    def test_five_point_line(self):
        s = line_space([0, 1, 2, 3, 4])
        t = truncated_ball(s, 2.5)
        assert t.n_points == 3
        assert t.points == ("0.0", "1.0", "2.0")

    def test_closed_ball_boundary_included(self):
        s = line_space([0, 2])
        assert truncated_ball(s, 2.0).n_points == 2


# ---------------------------------------------------------------------------
# Exact oracle
# ---------------------------------------------------------------------------


class TestExactOracle:
    def test_single_points(self):
        x = line_space([0.0])
        assert exact_pointed_gh_small(x, x, 4, 0.02) == 0.0

    def test_one_versus_two_points(self):
        # Every d_n equals 1, so the truncated series sums the weights.
        x = line_space([0.0])
        y = line_space([0.0, 1.0])
        got = exact_pointed_gh_small(x, y, 8, 0.02)
        assert got == pytest.approx(sum(2.0**-n for n in range(1, 9)), abs=1e-12)

    def test_isometric_three_point_spaces(self):
        rng = np.random.default_rng(3)
        x = random_euclidean(rng, 3)
        # Same distances, relabeled, plus an isometry (reflection).
        y = PointedFiniteMetricSpace(("q0", "q1", "q2"), x.dist, 0)
        assert exact_pointed_gh_small(x, y, 6, 0.02) == pytest.approx(0.0, abs=1e-12)

    def test_scale_refusal(self):
        rng = np.random.default_rng(4)
        x = random_euclidean(rng, 4)
        y = random_euclidean(rng, 4)
        with pytest.raises(RefusalError):
            exact_pointed_gh_small(x, y, 2, 0.02)

    def test_bad_grid_step(self):
        x = line_space([0.0])
        with pytest.raises(DomainError):
            exact_pointed_gh_small(x, x, 2, -1.0)

    def test_grid_route_envelopes_enumeration(self):
        # The grid search is an upper envelope of the exact enumerated value
        # and converges to it as the step shrinks.
        rng = np.random.default_rng(12)
        for _ in range(10):
            x = random_euclidean(rng, 2, scale=1.0)
            y = random_euclidean(rng, 2, scale=1.0)
            exact = exact_pointed_gh_small(x, y, 3, 0.05)
            coarse = exact_pointed_gh_small(x, y, 3, 0.05, method="grid")
            assert coarse >= exact - 1e-9
            assert coarse <= exact + 2 * 0.05 + 1e-9


# ---------------------------------------------------------------------------
# Scalable bounds
# ---------------------------------------------------------------------------


class TestGhBounds:
    def test_self_bounds_are_zero(self):
        rng = np.random.default_rng(8)
        for n in (1, 3, 6, 12):
            s = random_euclidean(rng, n)
            b = gh_bounds(s, s, 4)
            assert b.lower == 0.0
            assert b.upper == 0.0

    def test_sandwich_against_oracle(self):
        rng = np.random.default_rng(21)
        for _ in range(40):
            nx = int(rng.integers(1, 4))
            ny = int(rng.integers(1, 5))
            x = random_euclidean(rng, nx)
            y = random_euclidean(rng, ny)
            exact = exact_pointed_gh_small(x, y, 4, 0.02)
            b = gh_bounds(x, y, 4)
            assert b.lower <= exact + 1e-9
            assert exact <= b.upper + 1e-9

    def test_rotated_circle_sample_upper_small(self):
        # A dense circle sample against its own rotation: the rotation is an
        # isometry of the circle but not of the sample, so the upper bound is
        # controlled by the sampling mesh.
        n = 36
        theta = np.arange(n) * 2 * np.pi / n
        mesh = 2 * np.pi / n

        def circle_dist(t):
            a = np.abs(t[:, None] - t[None, :]) % (2 * np.pi)
            return np.minimum(a, 2 * np.pi - a)

        x = PointedFiniteMetricSpace(tuple(range(n)), circle_dist(theta), 0)
        y = PointedFiniteMetricSpace(tuple(range(n)), circle_dist(theta + 0.4 * mesh), 0)
        b = gh_bounds(x, y, 4)
        assert b.upper <= mesh

    def test_symmetry(self):
        rng = np.random.default_rng(30)
        x = random_euclidean(rng, 5)
        y = random_euclidean(rng, 7)
        bxy = gh_bounds(x, y, 4)
        byx = gh_bounds(y, x, 4)
        assert bxy.lower == byx.lower
        assert bxy.upper == byx.upper

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(31)
        x = random_euclidean(rng, 6)
        y = random_euclidean(rng, 5)
        perm = np.array([3, 0, 5, 1, 4, 2])  # fixes nothing but moves basepoint index
        inv = np.argsort(perm)
        # Keep the basepoint at the same underlying point.
        x2 = PointedFiniteMetricSpace(
            tuple(x.points[i] for i in perm),
            x.dist[np.ix_(perm, perm)],
            int(inv[x.basepoint]),
        )
        b1 = gh_bounds(x, y, 4)
        b2 = gh_bounds(x2, y, 4)
        assert b1.lower == pytest.approx(b2.lower, abs=1e-12)
        assert b1.upper == pytest.approx(b2.upper, abs=1e-12)

    def test_truncation_monotonicity(self):
        # Adding terms can only add up to the new weights; correcting for the
        # truncation remainder, the value never drops by more than 2^-n_max.
        rng = np.random.default_rng(33)
        x = random_euclidean(rng, 5)
        y = random_euclidean(rng, 6)
        prev = None
        for n_max in (1, 2, 3, 4, 5):
            b = gh_bounds(x, y, n_max)
            if prev is not None:
                assert b.upper + 2.0 ** (-n_max) >= prev.upper - 1e-12
            prev = b

    def test_bounds_object_validation(self):
        with pytest.raises(ValidationError):
            GhBounds(lower=0.5, upper=0.1, n_max=3)
        assert GhBounds(0.0, 0.0, 5).remainder == 2.0**-5

    @settings(max_examples=25, deadline=None)
    @given(
        st.integers(min_value=1, max_value=4),
        st.integers(min_value=1, max_value=3),
        st.integers(min_value=0, max_value=10_000),
    )
    def test_sandwich_property(self, nx, ny, seed):
        rng = np.random.default_rng(seed)
        x = random_euclidean(rng, nx)
        y = random_euclidean(rng, ny)
        exact = exact_pointed_gh_small(x, y, 3, 0.02)
        b = gh_bounds(x, y, 3)
        assert b.lower <= exact + 1e-9 <= b.upper + 2e-9


# ---------------------------------------------------------------------------
# JSON interface
# ---------------------------------------------------------------------------


class TestJson:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(9)
        s = random_euclidean(rng, 5, basepoint=2)
        path = tmp_path / "space.json"
        save_space(s, path)
        loaded = load_space(path)
        assert loaded.points == s.points
        assert loaded.basepoint == s.basepoint
        np.testing.assert_allclose(loaded.dist, s.dist)

    def test_document_shape(self):
        s = line_space([0, 1])
        doc = space_to_json(s)
        assert set(doc) == {"points", "basepoint", "dist"}
        assert doc["dist"][0][1] == 1.0
        # Document is plain-JSON serializable.
        json.dumps(doc)

    def test_reader_validates(self):
        doc = {"points": ["a", "b"], "basepoint": 0, "dist": [[0, 1], [2, 0]]}
        with pytest.raises(ValidationError):
            space_from_json(doc)

    def test_reader_rejects_malformed(self):
        with pytest.raises(ValidationError):
            space_from_json({"points": ["a"]})
