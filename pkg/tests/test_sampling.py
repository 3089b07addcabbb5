"""Deterministic sampling helpers: coverage, ranges, reproducibility."""

import numpy as np

from duophase.sampling import (
    Ball,
    ball_points,
    box_points,
    domain_point_pairs,
    gradient_matrices,
    lattice_window,
    magnitude_ladder,
)


class TestLatticeWindow:
    def test_deterministic(self):
        a = lattice_window(0, 100, 3, seed=5)
        b = lattice_window(0, 100, 3, seed=5)
        assert np.array_equal(a, b)

    def test_seed_changes_values(self):
        a = lattice_window(0, 100, 3, seed=5)
        b = lattice_window(0, 100, 3, seed=6)
        assert not np.array_equal(a, b)

    def test_unit_cube_range(self):
        u = lattice_window(0, 500, 4, seed=0)
        assert u.shape == (500, 4)
        assert np.all(u >= 0.0) and np.all(u < 1.0)

    def test_windows_concatenate(self):
        whole = lattice_window(0, 60, 2, seed=9)
        parts = np.concatenate(
            [lattice_window(0, 25, 2, seed=9), lattice_window(25, 35, 2, seed=9)]
        )
        assert np.array_equal(whole, parts)


class TestBallPoints:
    def test_inside(self):
        ball = Ball((0.5, -0.25), 0.4)
        pts = ball_points(300, ball, seed=2)
        dist = np.sqrt(np.sum((pts - np.array([0.5, -0.25])) ** 2, axis=1))
        assert np.all(dist <= 0.4 + 1e-12)

    def test_fills_the_ball(self):
        # some points land beyond half the radius
        ball = Ball((0.0, 0.0), 1.0)
        pts = ball_points(300, ball, seed=2)
        dist = np.sqrt(np.sum(pts**2, axis=1))
        assert np.max(dist) > 0.5


class TestBoxPoints:
    def test_in_box(self):
        pts = box_points(200, (-1.0, 0.0), (1.0, 2.0), seed=3)
        assert np.all(pts >= [-1.0, 0.0]) and np.all(pts <= [1.0, 2.0])


class TestDomainPointPairs:
    def test_pairs_in_ball_and_straddle_jump(self):
        ball = Ball((0.5, 0.0), 0.45)
        x, xt = domain_point_pairs(ball, [0.5], 512, seed=1)
        for pts in (x, xt):
            dist = np.sqrt(np.sum((pts - np.array([0.5, 0.0])) ** 2, axis=1))
            assert np.all(dist <= 0.45 + 1e-12)
        # at least one pair straddles the jump hyperplane x1 = 0.5
        straddle = (x[:, 0] - 0.5) * (xt[:, 0] - 0.5) < 0
        assert np.any(straddle)


class TestGradientMatrices:
    def test_shapes_and_spread(self):
        z = gradient_matrices(64, 2, 3, seed=4)
        assert z.shape[1:] == (2, 3)
        mags = np.sqrt(np.einsum("kai,kai->k", z, z))
        assert mags.min() < 1e-3 or np.any(mags == 0.0)
        assert mags.max() > 10.0


class TestMagnitudeLadder:
    def test_geometric_and_positive(self):
        t = magnitude_ladder(12, 1e-3, 1e3)
        assert np.all(t > 0)
        ratios = t[1:] / t[:-1]
        assert np.allclose(ratios, ratios[0])
