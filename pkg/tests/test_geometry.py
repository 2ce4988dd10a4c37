import numpy as np
import pytest

from padbench import errors
from padbench.geometry import (
    estimate_homography_dlt,
    project_point,
    project_points,
    ransac_homography,
    symmetric_transfer_errors,
)


def pairs_from(h, src):
    dst = project_points(h, np.asarray(src, float))
    return np.hstack([np.asarray(src, float), dst])


def random_projective(rng, max_cond=100.0):
    """Mild random homography with a bounded condition number."""
    while True:
        h = np.eye(3)
        h[:2, :2] += rng.uniform(-0.2, 0.2, (2, 2))
        h[:2, 2] = rng.uniform(-30, 30, 2)
        h[2, :2] = rng.uniform(-1e-4, 1e-4, 2)
        if np.linalg.cond(h) < max_cond:
            return h


# DLT --------------------------------------------------------------------------

def test_dlt_identity():
    src = np.array([[0, 0], [10, 0], [10, 10], [0, 10]], float)
    h = estimate_homography_dlt(np.hstack([src, src]))
    assert np.allclose(h, np.eye(3), atol=1e-10)


def test_dlt_translation_moves_all_corners():
    src = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    h = estimate_homography_dlt(np.hstack([src, src + [2.0, 1.0]]))
    for p in src:
        assert project_point(h, p) == pytest.approx((p[0] + 2.0, p[1] + 1.0), abs=1e-9)


def test_dlt_recovers_random_projective(rng):
    for _ in range(20):
        h_true = random_projective(rng)
        src = rng.uniform(0, 640, (8, 2))
        h_est = estimate_homography_dlt(pairs_from(h_true, src))
        assert np.abs(h_est - h_true / h_true[2, 2]).max() < 1e-6


def test_dlt_noiseless_reprojection_error(rng):
    h_true = random_projective(rng)
    src = rng.uniform(0, 640, (30, 2))
    pairs = pairs_from(h_true, src)
    h_est = estimate_homography_dlt(pairs)
    err = np.abs(project_points(h_est, pairs[:, :2]) - pairs[:, 2:]).max()
    assert err <= 1e-8


def test_dlt_rejects_collinear():
    src = np.array([[0, 0], [1, 1], [2, 2], [3, 3]], float)
    with pytest.raises(errors.DegenerateConfiguration):
        estimate_homography_dlt(np.hstack([src, src]))


def test_dlt_rejects_coincident():
    src = np.array([[1, 1], [1, 1], [2, 2], [3, 4]], float)
    with pytest.raises(errors.DegenerateConfiguration):
        estimate_homography_dlt(np.hstack([src, src]))


def test_dlt_too_few_pairs():
    src = np.array([[0, 0], [1, 0], [0, 1]], float)
    with pytest.raises(errors.TooFewPairs):
        estimate_homography_dlt(np.hstack([src, src]))


def test_dlt_scale_invariance(rng):
    h_true = random_projective(rng)
    src = rng.uniform(10, 500, (12, 2))
    pairs = pairs_from(h_true, src)
    h1 = estimate_homography_dlt(pairs)
    s = 37.5
    h2 = estimate_homography_dlt(pairs * s)
    probe = rng.uniform(10, 500, (50, 2))
    p1 = project_points(h1, probe) * s
    p2 = project_points(h2, probe * s)
    assert np.abs(p1 - p2).max() < 1e-9 * s * 500


# project_point -----------------------------------------------------------------

def test_project_point_identity():
    assert project_point(np.eye(3), (3.0, 7.0)) == (3.0, 7.0)


def test_project_point_translation():
    h = np.array([[1.0, 0, 2.0], [0, 1.0, 1.0], [0, 0, 1.0]])
    assert project_point(h, (0.0, 0.0)) == (2.0, 1.0)


def test_project_point_matches_homogeneous_oracle(rng):
    for _ in range(50):
        h = random_projective(rng)
        p = rng.uniform(-100, 100, 2)
        v = h @ np.array([p[0], p[1], 1.0])
        expected = (v[0] / v[2], v[1] / v[2])
        got = project_point(h, p)
        assert abs(got[0] - expected[0]) < 1e-12
        assert abs(got[1] - expected[1]) < 1e-12


def test_project_point_at_infinity():
    h = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 1.0]])
    with pytest.raises(errors.PointAtInfinity):
        project_point(h, (5.0, 1.0))


# RANSAC -------------------------------------------------------------------------

def test_ransac_zero_outliers_equals_full_dlt(rng):
    h_true = random_projective(rng)
    pairs = pairs_from(h_true, rng.uniform(0, 640, (40, 2)))
    h, flags = ransac_homography(pairs, iterations=200, inlier_threshold=2.0, seed=1)
    assert flags.all()
    assert np.allclose(h, estimate_homography_dlt(pairs), atol=1e-9)


def test_ransac_planted_outliers_recovered_exactly(rng):
    for trial in range(20):
        h_true = random_projective(rng)
        inlier_src = rng.uniform(50, 590, (70, 2))
        pairs = pairs_from(h_true, inlier_src)
        outliers = np.hstack(
            [rng.uniform(0, 640, (30, 2)), rng.uniform(0, 640, (30, 2))]
        )
        # keep outliers genuinely off-model
        err = symmetric_transfer_errors(h_true, outliers)
        outliers = outliers[err > 6.0]
        all_pairs = np.vstack([pairs, outliers])
        truth = np.zeros(len(all_pairs), bool)
        truth[:70] = True

        _, flags = ransac_homography(
            all_pairs, iterations=1000, inlier_threshold=2.0, seed=trial
        )
        assert np.array_equal(flags, truth)


def test_ransac_too_few_pairs():
    with pytest.raises(errors.TooFewPairs):
        ransac_homography(np.zeros((3, 4)), iterations=10, inlier_threshold=1.0, seed=0)


def test_ransac_deterministic(rng):
    h_true = random_projective(rng)
    pairs = pairs_from(h_true, rng.uniform(0, 640, (50, 2)))
    pairs[40:] += rng.uniform(-40, 40, (10, 4))
    a = ransac_homography(pairs, iterations=300, inlier_threshold=2.0, seed=99)
    b = ransac_homography(pairs, iterations=300, inlier_threshold=2.0, seed=99)
    assert np.array_equal(a.inliers, b.inliers)
    assert np.array_equal(a.homography, b.homography)


def test_ransac_no_consensus():
    # every 4-point sample is collinear: no hypothesis can be fit
    src = np.column_stack([np.arange(8, dtype=float), np.arange(8, dtype=float)])
    pairs = np.hstack([src, src[::-1]])
    with pytest.raises(errors.NoConsensus):
        ransac_homography(pairs, iterations=50, inlier_threshold=1.0, seed=0)
