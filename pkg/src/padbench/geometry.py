"""Projective estimation: normalized DLT and RANSAC over point pairs.

A homography is a plain 3x3 float64 numpy array normalized so H[2, 2] = 1.
Point pairs map (x, y) in image A to (x', y') in image B, and an estimated
H acts as (x', y', 1)^T ~ H (x, y, 1)^T.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateConfiguration,
    NoConsensus,
    PointAtInfinity,
    TooFewPairs,
)
from .rng import SplitMix64

# Relative eigenvalue gap below which the DLT null space is not unique.
_RANK_TOL = 1e-10


def project_point(h: np.ndarray, p: Sequence[float]) -> tuple[float, float]:
    """Apply ``h`` to a point in homogeneous arithmetic."""
    x, y = float(p[0]), float(p[1])
    w = h[2, 0] * x + h[2, 1] * y + h[2, 2]
    if abs(w) < 1e-12:
        raise PointAtInfinity("denominator %.3e at (%g, %g)" % (w, x, y))
    return (
        (h[0, 0] * x + h[0, 1] * y + h[0, 2]) / w,
        (h[1, 0] * x + h[1, 1] * y + h[1, 2]) / w,
    )


def project_points(h: np.ndarray, pts: np.ndarray) -> np.ndarray:
    q = pts @ h[:, :2].T + h[:, 2]
    w = q[:, 2]
    w = np.where(np.abs(w) < 1e-300, 1e-300, w)
    return q[:, :2] / w[:, None]


def _normalization(pts: np.ndarray) -> np.ndarray:
    """Hartley transform: centroid to origin, mean distance sqrt(2)."""
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    if d < 1e-12:
        raise DegenerateConfiguration("coincident points")
    s = np.sqrt(2.0) / d
    return np.array(
        [[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]],
        dtype=np.float64,
    )


def estimate_homography_dlt(pairs: np.ndarray) -> np.ndarray:
    """Least-squares homography from >= 4 point pairs.

    ``pairs`` is (N, 4): columns x, y, x', y'.  Both point sets are Hartley
    normalized, the 9x9 normal matrix A^T A is eigendecomposed, and the
    eigenvector of the smallest eigenvalue gives H.  The normalization is
    undone and the result scaled so H[2, 2] = 1.
    """
    pairs = np.asarray(pairs, dtype=np.float64)
    if pairs.ndim != 2 or pairs.shape[1] != 4:
        raise ValueError("pairs must be (N, 4): x, y, x', y'")
    n = pairs.shape[0]
    if n < 4:
        raise TooFewPairs("need >= 4 pairs, got %d" % n)
    if not np.all(np.isfinite(pairs)):
        raise ValueError("pairs must be finite")

    src = pairs[:, :2]
    dst = pairs[:, 2:]
    t_src = _normalization(src)
    t_dst = _normalization(dst)
    sn = src @ t_src[:2, :2].T + t_src[:2, 2]
    dn = dst @ t_dst[:2, :2].T + t_dst[:2, 2]

    x, y = sn[:, 0], sn[:, 1]
    u, v = dn[:, 0], dn[:, 1]
    zero = np.zeros(n)
    one = np.ones(n)
    a = np.empty((2 * n, 9), dtype=np.float64)
    a[0::2] = np.column_stack([x, y, one, zero, zero, zero, -u * x, -u * y, -u])
    a[1::2] = np.column_stack([zero, zero, zero, x, y, one, -v * x, -v * y, -v])

    m = a.T @ a
    evals, evecs = np.linalg.eigh(m)
    scale = max(evals[-1], 1e-30)
    if evals[1] / scale < _RANK_TOL:
        raise DegenerateConfiguration(
            "point configuration does not determine a unique homography"
        )
    hn = evecs[:, 0].reshape(3, 3)

    h = np.linalg.inv(t_dst) @ hn @ t_src
    if abs(h[2, 2]) < 1e-12:
        raise DegenerateConfiguration("H[2,2] vanishes; cannot normalize")
    h = h / h[2, 2]
    if abs(np.linalg.det(h)) <= 1e-12:
        raise DegenerateConfiguration("estimated homography is singular")
    return h


def symmetric_transfer_errors(h: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Per-pair sqrt(forward^2 + backward^2) transfer distance in pixels."""
    pairs = np.asarray(pairs, dtype=np.float64)
    hinv = np.linalg.inv(h)
    fwd = project_points(h, pairs[:, :2]) - pairs[:, 2:]
    bwd = project_points(hinv, pairs[:, 2:]) - pairs[:, :2]
    return np.sqrt((fwd**2).sum(axis=1) + (bwd**2).sum(axis=1))


class RansacResult(NamedTuple):
    homography: np.ndarray
    inliers: np.ndarray  # bool flags, one per input pair


def ransac_homography(
    matches: np.ndarray,
    iterations: int = 2000,
    inlier_threshold: float = 3.0,
    seed: int = 0,
) -> RansacResult:
    """Robust homography fit by 4-point hypothesize-and-verify.

    The best hypothesis by inlier count (ties broken by the lower sum of
    inlier transfer error) is refit with DLT on all of its inliers, and the
    flags returned are evaluated against that refit model.  Sampling draws
    from SplitMix64(seed), so results replay exactly.
    """
    matches = np.asarray(matches, dtype=np.float64)
    if matches.ndim != 2 or matches.shape[1] != 4:
        raise ValueError("matches must be (N, 4): x, y, x', y'")
    n = matches.shape[0]
    if n < 4:
        raise TooFewPairs("need >= 4 matches, got %d" % n)
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if inlier_threshold <= 0:
        raise ValueError("inlier_threshold must be > 0")

    rng = SplitMix64(seed)
    best_count = 0
    best_error = np.inf
    best_flags = None

    for _ in range(iterations):
        idx = rng.sample_distinct(n, 4)
        try:
            h = estimate_homography_dlt(matches[idx])
        except DegenerateConfiguration:
            continue
        errors = symmetric_transfer_errors(h, matches)
        flags = errors < inlier_threshold
        count = int(flags.sum())
        if count < 4:
            continue
        total = float(errors[flags].sum())
        if count > best_count or (count == best_count and total < best_error):
            best_count = count
            best_error = total
            best_flags = flags

    if best_flags is None:
        raise NoConsensus("no hypothesis reached 4 inliers")

    refit = estimate_homography_dlt(matches[best_flags])
    final_flags = symmetric_transfer_errors(refit, matches) < inlier_threshold
    return RansacResult(refit, final_flags)
