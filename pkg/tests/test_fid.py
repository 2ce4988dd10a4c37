import math

import numpy as np
import pytest
import scipy.linalg

from padbench import errors
from padbench.fid import (
    EmbeddingSet,
    frechet_distance,
    frechet_distance_sets,
    gaussian_stats,
    matrix_sqrt_psd,
    read_embeddings,
    write_embeddings,
)


def random_set(rng, n, d, scale=1.0):
    mix = rng.standard_normal((d, d)) / math.sqrt(d)
    data = rng.standard_normal((n, d)) @ mix * scale + rng.standard_normal(d)
    return EmbeddingSet(data.astype(np.float32))


def frechet_oracle(a, b):
    """Classic formula via scipy's Schur-based matrix square root."""
    covmean = scipy.linalg.sqrtm(a.sigma @ b.sigma)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    diff = a.mu - b.mu
    return float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * np.trace(covmean))


# gaussian_stats -----------------------------------------------------------------

def test_stats_two_point_1d():
    stats = gaussian_stats(EmbeddingSet(np.array([[-1.0], [1.0]], np.float32)))
    assert stats.mu[0] == 0.0
    assert stats.sigma[0, 0] == 2.0


def test_stats_identical_vectors():
    v = np.array([3.0, -2.0, 7.5], np.float32)
    stats = gaussian_stats(EmbeddingSet(np.tile(v, (5, 1))))
    assert np.allclose(stats.mu, v)
    assert np.all(stats.sigma == 0.0)


def test_stats_square_2d():
    data = np.array([[0, 0], [2, 0], [0, 2], [2, 2]], np.float32)
    stats = gaussian_stats(EmbeddingSet(data))
    assert np.allclose(stats.mu, [1.0, 1.0])
    assert np.allclose(stats.sigma, np.diag([4.0 / 3.0, 4.0 / 3.0]))


def test_stats_needs_two_samples():
    with pytest.raises(errors.TooFewSamples):
        EmbeddingSet(np.zeros((1, 4), np.float32))


def test_stats_covariance_is_exactly_symmetric(rng):
    stats = gaussian_stats(random_set(rng, 50, 16))
    assert np.array_equal(stats.sigma, stats.sigma.T)


# matrix_sqrt_psd ----------------------------------------------------------------

def test_sqrt_identity():
    assert np.allclose(matrix_sqrt_psd(np.eye(4)), np.eye(4))


def test_sqrt_diagonal():
    assert np.allclose(matrix_sqrt_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_sqrt_hand_eigendecomposition():
    m = np.array([[2.0, 1.0], [1.0, 2.0]])
    s3 = math.sqrt(3.0)
    expected = np.array(
        [[(s3 + 1) / 2, (s3 - 1) / 2], [(s3 - 1) / 2, (s3 + 1) / 2]]
    )
    assert np.allclose(matrix_sqrt_psd(m), expected, atol=1e-12)


def test_sqrt_squares_back(rng):
    for _ in range(10):
        x = rng.standard_normal((30, 8))
        m = x.T @ x
        root = matrix_sqrt_psd(m)
        assert np.array_equal(root, root.T)
        assert np.linalg.norm(root @ root - m) <= 1e-6 * np.linalg.norm(m)


def test_sqrt_clamps_tiny_negative_eigenvalues(rng):
    x = rng.standard_normal((4, 8))  # rank deficient: 8x8 of rank <= 4
    m = x.T @ x
    root = matrix_sqrt_psd(m)
    assert np.all(np.linalg.eigvalsh(root) >= -1e-12)


def test_sqrt_rejects_asymmetric():
    m = np.array([[1.0, 0.5], [0.0, 1.0]])
    with pytest.raises(errors.NotSymmetric):
        matrix_sqrt_psd(m)


def test_sqrt_rejects_indefinite():
    with pytest.raises(errors.IndefiniteMatrix):
        matrix_sqrt_psd(np.diag([1.0, -0.5]))


# frechet_distance ----------------------------------------------------------------

def test_self_distance_is_zero(rng):
    stats = gaussian_stats(random_set(rng, 40, 12))
    assert frechet_distance(stats, stats) == 0.0


def test_1d_hand_value():
    a = gaussian_stats(EmbeddingSet(np.array([[-1.0], [1.0]], np.float32)))
    b = gaussian_stats(EmbeddingSet(np.array([[2.0], [4.0]], np.float32)))
    assert frechet_distance(a, b) == pytest.approx(9.0, abs=1e-12)


def test_matches_schur_oracle_64d(rng):
    for _ in range(10):
        a = gaussian_stats(random_set(rng, 200, 64))
        b = gaussian_stats(random_set(rng, 150, 64))
        mine = frechet_distance(a, b)
        oracle = frechet_oracle(a, b)
        assert abs(mine - oracle) <= 1e-6 * max(abs(oracle), 1.0)


def test_symmetry(rng):
    a = gaussian_stats(random_set(rng, 80, 32))
    b = gaussian_stats(random_set(rng, 90, 32))
    ab = frechet_distance(a, b)
    ba = frechet_distance(b, a)
    assert abs(ab - ba) <= 1e-9 * max(abs(ab), 1.0)


def test_translation_covariance(rng):
    x = random_set(rng, 60, 16)
    y = EmbeddingSet(x.data[rng.permutation(60)])  # identical stats
    c = rng.standard_normal(16)
    shifted = EmbeddingSet((x.data.astype(np.float64) + c).astype(np.float32))
    d = frechet_distance_sets(shifted, y)
    expected = float(
        ((shifted.data.astype(np.float64).mean(0) - y.data.astype(np.float64).mean(0)) ** 2).sum()
    )
    assert d == pytest.approx(expected, rel=1e-6)


def test_1d_closed_form(rng):
    for _ in range(20):
        xa = rng.standard_normal(30) * rng.uniform(0.5, 3) + rng.uniform(-5, 5)
        xb = rng.standard_normal(25) * rng.uniform(0.5, 3) + rng.uniform(-5, 5)
        a = gaussian_stats(EmbeddingSet(xa[:, None].astype(np.float32)))
        b = gaussian_stats(EmbeddingSet(xb[:, None].astype(np.float32)))
        expected = (a.mu[0] - b.mu[0]) ** 2 + (
            math.sqrt(a.sigma[0, 0]) - math.sqrt(b.sigma[0, 0])
        ) ** 2
        assert frechet_distance(a, b) == pytest.approx(float(expected), rel=1e-9)


def test_non_negative(rng):
    for _ in range(20):
        a = gaussian_stats(random_set(rng, 20, 6, scale=0.01))
        b = gaussian_stats(random_set(rng, 20, 6, scale=0.01))
        assert frechet_distance(a, b) >= 0.0


def test_dimension_mismatch(rng):
    a = gaussian_stats(random_set(rng, 10, 4))
    b = gaussian_stats(random_set(rng, 10, 5))
    with pytest.raises(errors.DimensionMismatch):
        frechet_distance(a, b)


# PADEMB1 IO -----------------------------------------------------------------------

def test_round_trip(tmp_path, rng):
    e = random_set(rng, 17, 9)
    path = tmp_path / "e.pademb"
    write_embeddings(e, path)
    back = read_embeddings(path)
    assert back.count == 17 and back.dim == 9
    assert np.array_equal(back.data, e.data)


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.pademb"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
    with pytest.raises(errors.BadMagic):
        read_embeddings(path)


def test_truncated_file(tmp_path, rng):
    e = random_set(rng, 100, 4)
    path = tmp_path / "full.pademb"
    write_embeddings(e, path)
    blob = path.read_bytes()
    short = tmp_path / "short.pademb"
    # keep the header's claim of 100 rows but provide only 50
    short.write_bytes(blob[: 16 + 50 * 4 * 4])
    with pytest.raises(errors.TruncatedFile):
        read_embeddings(short)


def test_dimension_zero(tmp_path):
    import struct

    path = tmp_path / "zero.pademb"
    path.write_bytes(b"PADEMB1\x00" + struct.pack("<II", 5, 0))
    with pytest.raises(errors.DimensionZero):
        read_embeddings(path)


def test_file_layout_is_little_endian(tmp_path):
    e = EmbeddingSet(np.array([[1.0, 2.0], [3.0, 4.0]], np.float32))
    path = tmp_path / "layout.pademb"
    write_embeddings(e, path)
    blob = path.read_bytes()
    assert blob[:8] == b"PADEMB1\x00"
    assert blob[8:16] == (2).to_bytes(4, "little") + (2).to_bytes(4, "little")
    assert np.frombuffer(blob[16:], "<f4").tolist() == [1.0, 2.0, 3.0, 4.0]
