"""Frechet distance between embedding sets.

Given two sets of feature vectors, each is summarized by its mean and
unbiased sample covariance, and the squared Frechet (Wasserstein-2)
distance between the fitted Gaussians is

    d^2 = ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2))

The product square root is evaluated through the similarity-equivalent
symmetric form: with R = S_a^(1/2), the trace term equals
Tr((R S_b R)^(1/2)), which is a real symmetric eigenvalue problem even
though S_a S_b itself is not symmetric.

Embedding files use the PADEMB1 container: magic bytes ``PADEMB1\\0``,
little-endian u32 count and dimension, then count*dim little-endian
float32 values row-major.  Statistics always run in float64.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    DimensionZero,
    IndefiniteMatrix,
    NotSymmetric,
    TooFewSamples,
    TruncatedFile,
    ValidationError,
)

MAGIC = b"PADEMB1\x00"

_SYM_TOL = 1e-9
_EIG_CLAMP = 1e-8
_NEG_RESULT_CLAMP = -1e-6


@dataclass(frozen=True)
class EmbeddingSet:
    """N x D float32 matrix, one row per image."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValidationError("embeddings must be a 2-D matrix")
        if arr.shape[0] < 2:
            raise TooFewSamples("need >= 2 embeddings, got %d" % arr.shape[0])
        if arr.shape[1] < 1:
            raise DimensionZero("embedding dimension must be >= 1")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("embeddings contain non-finite values")
        object.__setattr__(self, "data", arr)

    @property
    def count(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class GaussianStats:
    mu: np.ndarray
    sigma: np.ndarray


def gaussian_stats(e: EmbeddingSet) -> GaussianStats:
    """Column means and unbiased (N-1) sample covariance, symmetrized."""
    x = e.data.astype(np.float64)
    mu = x.mean(axis=0)
    centered = x - mu
    sigma = centered.T @ centered / (e.count - 1)
    sigma = (sigma + sigma.T) / 2.0
    return GaussianStats(mu=mu, sigma=sigma)


def _check_symmetric(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("matrix must be square")
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    if float(np.abs(m - m.T).max(initial=0.0)) > _SYM_TOL * scale:
        raise NotSymmetric("asymmetry exceeds %g (relative to max entry)" % _SYM_TOL)
    return (m + m.T) / 2.0


def matrix_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Symmetric square root of a symmetric PSD matrix.

    Eigenvalues in [-1e-8 * ||m||, 0) are treated as rounding noise and
    clamped to zero; anything lower means the matrix is genuinely
    indefinite.
    """
    m = _check_symmetric(m)
    evals, evecs = np.linalg.eigh(m)
    scale = max(float(np.abs(evals).max(initial=0.0)), np.finfo(np.float64).tiny)
    if evals[0] < -_EIG_CLAMP * scale:
        raise IndefiniteMatrix(
            "eigenvalue %.3e below -%g * ||m||" % (evals[0], _EIG_CLAMP)
        )
    root = evecs @ (np.sqrt(np.clip(evals, 0.0, None))[:, None] * evecs.T)
    return (root + root.T) / 2.0


def frechet_distance(a: GaussianStats, b: GaussianStats) -> float:
    """Squared Frechet distance between two Gaussian summaries."""
    if a.mu.shape != b.mu.shape or a.sigma.shape != b.sigma.shape:
        raise DimensionMismatch(
            "stats dims %s vs %s" % (a.mu.shape, b.mu.shape)
        )
    if np.array_equal(a.mu, b.mu) and np.array_equal(a.sigma, b.sigma):
        return 0.0

    diff = a.mu - b.mu
    root_a = matrix_sqrt_psd(a.sigma)
    inner = root_a @ b.sigma @ root_a
    inner = (inner + inner.T) / 2.0
    evals = np.linalg.eigvalsh(inner)
    trace_sqrt = float(np.sqrt(np.clip(evals, 0.0, None)).sum())

    value = float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * trace_sqrt)
    if _NEG_RESULT_CLAMP < value < 0.0:
        return 0.0
    return value


def frechet_distance_sets(a: EmbeddingSet, b: EmbeddingSet) -> float:
    return frechet_distance(gaussian_stats(a), gaussian_stats(b))


def write_embeddings(e: EmbeddingSet, path) -> None:
    payload = MAGIC + struct.pack("<II", e.count, e.dim)
    tmp = "%s.tmp%d" % (os.fspath(path), os.getpid())
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.write(np.ascontiguousarray(e.data, dtype="<f4").tobytes())
    os.replace(tmp, path)


def read_embeddings(path) -> EmbeddingSet:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MAGIC)] != MAGIC:
        raise BadMagic("%s: not a PADEMB1 file" % path)
    header_end = len(MAGIC) + 8
    if len(blob) < header_end:
        raise TruncatedFile("%s: header cut short" % path)
    n, d = struct.unpack("<II", blob[len(MAGIC) : header_end])
    if d == 0:
        raise DimensionZero("%s: dimension is 0" % path)
    expected = header_end + 4 * n * d
    if len(blob) != expected:
        raise TruncatedFile(
            "%s: expected %d bytes for %dx%d, found %d"
            % (path, expected, n, d, len(blob))
        )
    data = np.frombuffer(blob, dtype="<f4", offset=header_end).reshape(n, d)
    return EmbeddingSet(data=data.copy())
