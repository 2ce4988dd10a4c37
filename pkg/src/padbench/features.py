"""Binary local features for image alignment.

Detection is single-scale FAST-9 (segment test on a radius-3 Bresenham
ring) with 3x3 non-maximum suppression on the FAST score, Harris-measure
ranking of the survivors, and orientation from the intensity centroid of
a radius-15 disc.  Descriptors are 256 binary point-pair tests on a 5x5 box-smoothed
patch, with the sampling pattern rotated ("steered") by the keypoint
angle.  The pattern is fixed for the life of the toolkit so descriptors
are reproducible across runs and versions.

Aligned pairs come from the same rectified geometry at near-identical
scale, so no image pyramid is built.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .errors import ImageTooSmall, KeypointTooCloseToBorder
from .imaging import ImageBuffer
from .rng import SplitMix64

# Keypoints stay this far from every border: covers the FAST ring (3),
# the orientation disc (15), and rotated descriptor samples plus their
# 5x5 smoothing window (13 + 1 + 2 = 16).
BORDER_MARGIN = 16

_PATCH_RADIUS = 13  # descriptor sample offsets satisfy dx^2 + dy^2 <= 13^2
_ORIENT_RADIUS = 15
_HARRIS_K = 0.04
_HARRIS_BLOCK = 3  # 7x7 window

# Radius-3 Bresenham ring, clockwise from 12 o'clock: (dx, dy).
_RING = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)

_PATTERN_SEED = 0xB1EFD15C


class Keypoint(NamedTuple):
    x: float
    y: float
    response: float
    angle: float  # radians in [0, 2*pi)


class Match(NamedTuple):
    index_a: int
    index_b: int
    distance: int


def _make_pattern() -> np.ndarray:
    """The fixed 256-pair sampling pattern, (256, 4) ints: x1, y1, x2, y2.

    Pairs are drawn once from SplitMix64(_PATTERN_SEED), uniform over the
    integer disc of radius 13, rejecting coincident endpoints.  Integer
    rejection sampling keeps the table bit-identical on every platform.
    """
    rng = SplitMix64(_PATTERN_SEED)
    rows = []
    while len(rows) < 256:
        vals = [rng.randbelow(2 * _PATCH_RADIUS + 1) - _PATCH_RADIUS for _ in range(4)]
        x1, y1, x2, y2 = vals
        if x1 * x1 + y1 * y1 > _PATCH_RADIUS**2:
            continue
        if x2 * x2 + y2 * y2 > _PATCH_RADIUS**2:
            continue
        if (x1, y1) == (x2, y2):
            continue
        rows.append((x1, y1, x2, y2))
    return np.array(rows, dtype=np.int64)


_PATTERN = _make_pattern()

_POPCOUNT = np.array([bin(v).count("1") for v in range(256)], dtype=np.uint8)


def _build_run9_lut() -> np.ndarray:
    """has_run[code] is True when the 16-bit ring code holds 9 circularly
    contiguous set bits."""
    codes = np.arange(1 << 16, dtype=np.uint32)
    bits = ((codes[:, None] >> np.arange(16)[None, :]) & 1).astype(bool)
    acc = bits.copy()
    for k in range(1, 9):
        acc &= np.roll(bits, -k, axis=1)
    return acc.any(axis=1)


_RUN9 = _build_run9_lut()


def _disc_offsets(radius: int) -> tuple[np.ndarray, np.ndarray]:
    span = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    keep = dy * dy + dx * dx <= radius * radius
    return dy[keep].ravel(), dx[keep].ravel()


_ORIENT_DY, _ORIENT_DX = _disc_offsets(_ORIENT_RADIUS)


def _box_sum(m: np.ndarray, radius: int) -> np.ndarray:
    """Sum of m over a (2r+1)^2 window centered per pixel, zero padded."""
    h, w = m.shape
    ii = np.zeros((h + 1, w + 1), dtype=np.float64)
    ii[1:, 1:] = m.cumsum(axis=0).cumsum(axis=1)
    y0 = np.clip(np.arange(h) - radius, 0, h)
    y1 = np.clip(np.arange(h) + radius + 1, 0, h)
    x0 = np.clip(np.arange(w) - radius, 0, w)
    x1 = np.clip(np.arange(w) + radius + 1, 0, w)
    return (
        ii[np.ix_(y1, x1)] - ii[np.ix_(y0, x1)] - ii[np.ix_(y1, x0)] + ii[np.ix_(y0, x0)]
    )


def _harris_response(gray: np.ndarray) -> np.ndarray:
    img = gray.astype(np.float64)
    h, w = img.shape
    sv = img[:-2, :] + 2.0 * img[1:-1, :] + img[2:, :]
    sh = img[:, :-2] + 2.0 * img[:, 1:-1] + img[:, 2:]
    ix = np.zeros((h, w))
    iy = np.zeros((h, w))
    ix[1:-1, 1:-1] = sv[:, 2:] - sv[:, :-2]
    iy[1:-1, 1:-1] = sh[2:, :] - sh[:-2, :]
    sxx = _box_sum(ix * ix, _HARRIS_BLOCK)
    syy = _box_sum(iy * iy, _HARRIS_BLOCK)
    sxy = _box_sum(ix * iy, _HARRIS_BLOCK)
    return (sxx * syy - sxy * sxy) - _HARRIS_K * (sxx + syy) ** 2


def _fast_corners(arr: np.ndarray, threshold: int) -> tuple[np.ndarray, np.ndarray]:
    """Segment-test mask and the FAST score surface used for suppression.

    The score is the summed threshold excess of the ring pixels on the
    brighter-or-darker side, zero at non-corners."""
    h, w = arr.shape
    center = arr[3 : h - 3, 3 : w - 3]
    bright = np.zeros(center.shape, dtype=np.uint32)
    dark = np.zeros(center.shape, dtype=np.uint32)
    bright_sum = np.zeros(center.shape, dtype=np.int64)
    dark_sum = np.zeros(center.shape, dtype=np.int64)
    for k, (dx, dy) in enumerate(_RING):
        ring = arr[3 + dy : h - 3 + dy, 3 + dx : w - 3 + dx]
        bright |= (ring > center + threshold).astype(np.uint32) << k
        dark |= (ring < center - threshold).astype(np.uint32) << k
        bright_sum += np.maximum(ring - center - threshold, 0)
        dark_sum += np.maximum(center - threshold - ring, 0)
    mask = np.zeros((h, w), dtype=bool)
    mask[3 : h - 3, 3 : w - 3] = _RUN9[bright] | _RUN9[dark]
    score = np.zeros((h, w), dtype=np.float64)
    score[3 : h - 3, 3 : w - 3] = np.maximum(bright_sum, dark_sum)
    score[~mask] = 0.0
    return mask, score


def _raster_nms(score: np.ndarray, cand: np.ndarray) -> np.ndarray:
    """3x3 non-maximum suppression; plateaus keep the raster-first pixel."""
    keep = cand.copy()
    h, w = score.shape
    padded = np.full((h + 2, w + 2), -np.inf)
    padded[1:-1, 1:-1] = score
    # strictly greater than neighbors earlier in raster order
    for dy, dx in ((-1, -1), (-1, 0), (-1, 1), (0, -1)):
        keep &= score > padded[1 + dy : h + 1 + dy, 1 + dx : w + 1 + dx]
    # at least as great as later neighbors
    for dy, dx in ((0, 1), (1, -1), (1, 0), (1, 1)):
        keep &= score >= padded[1 + dy : h + 1 + dy, 1 + dx : w + 1 + dx]
    return keep


def _parabolic_offset(f_m1: np.ndarray, f0: np.ndarray, f_p1: np.ndarray) -> np.ndarray:
    denom = 2.0 * (f_m1 - 2.0 * f0 + f_p1)
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = np.where(np.abs(denom) > 1e-12, (f_m1 - f_p1) / denom, 0.0)
    return np.clip(delta, -0.5, 0.5)


def detect_keypoints(
    gray: ImageBuffer, threshold: int = 20, max_count: int = 1000
) -> list[Keypoint]:
    """FAST-9 corners ranked by Harris response, strongest first.

    Keypoints are refined to subpixel positions by a parabolic fit of the
    Harris response and carry the intensity-centroid orientation of their
    radius-15 patch.  Only positions at least BORDER_MARGIN pixels from
    every border are returned, so detections are always describable.
    """
    if gray.channels != 1:
        raise ValueError("detect_keypoints expects a 1-channel image")
    if gray.width < 32 or gray.height < 32:
        raise ImageTooSmall("%dx%d is below 32x32" % (gray.width, gray.height))
    if not 1 <= threshold <= 255:
        raise ValueError("threshold must be in [1, 255]")
    if max_count < 0:
        raise ValueError("max_count must be >= 0")

    arr = gray.pixels[:, :, 0].astype(np.int32)
    h, w = arr.shape
    corners, fast_score = _fast_corners(arr, threshold)
    corners[:BORDER_MARGIN, :] = False
    corners[h - BORDER_MARGIN :, :] = False
    corners[:, :BORDER_MARGIN] = False
    corners[:, w - BORDER_MARGIN :] = False
    if not corners.any():
        return []

    # non-maximum suppression runs on the FAST score; the Harris measure
    # only ranks the survivors
    keep = _raster_nms(fast_score, corners)
    harris = _harris_response(arr)
    keep &= harris > 0.0
    ys, xs = np.nonzero(keep)
    if ys.size == 0:
        return []

    responses = harris[ys, xs]
    dx = _parabolic_offset(fast_score[ys, xs - 1], fast_score[ys, xs], fast_score[ys, xs + 1])
    dy = _parabolic_offset(fast_score[ys - 1, xs], fast_score[ys, xs], fast_score[ys + 1, xs])
    # refinement must not push a keypoint out of the describable region
    sub_x = np.clip(xs + dx, BORDER_MARGIN, w - 1 - BORDER_MARGIN)
    sub_y = np.clip(ys + dy, BORDER_MARGIN, h - 1 - BORDER_MARGIN)

    patch = arr[ys[:, None] + _ORIENT_DY[None, :], xs[:, None] + _ORIENT_DX[None, :]]
    m10 = (patch * _ORIENT_DX[None, :]).sum(axis=1)
    m01 = (patch * _ORIENT_DY[None, :]).sum(axis=1)
    angles = np.arctan2(m01.astype(np.float64), m10.astype(np.float64))
    angles = np.where(angles < 0.0, angles + 2.0 * np.pi, angles)

    order = np.lexsort((xs, ys, -responses))
    order = order[:max_count]
    return [
        Keypoint(float(sub_x[i]), float(sub_y[i]), float(responses[i]), float(angles[i]))
        for i in order
    ]


def compute_descriptors(gray: ImageBuffer, keypoints: Sequence[Keypoint]) -> np.ndarray:
    """Steered 256-bit descriptors, one row of 32 bytes per keypoint.

    Each bit compares two 5x5 box-smoothed samples whose offsets are the
    fixed pattern rotated by the keypoint angle and rounded to the nearest
    pixel.  Bit i of the descriptor is 1 when the first sample is darker.
    """
    if gray.channels != 1:
        raise ValueError("compute_descriptors expects a 1-channel image")
    if len(keypoints) == 0:
        return np.zeros((0, 32), dtype=np.uint8)

    w, h = gray.width, gray.height
    xs = np.array([k.x for k in keypoints])
    ys = np.array([k.y for k in keypoints])
    bad = (xs < BORDER_MARGIN) | (xs > w - 1 - BORDER_MARGIN) | (
        ys < BORDER_MARGIN
    ) | (ys > h - 1 - BORDER_MARGIN)
    if bad.any():
        i = int(np.nonzero(bad)[0][0])
        raise KeypointTooCloseToBorder(
            "keypoint %d at (%.1f, %.1f) is within %d px of a border"
            % (i, xs[i], ys[i], BORDER_MARGIN)
        )

    arr = gray.pixels[:, :, 0].astype(np.int64)
    ii = np.zeros((h + 1, w + 1), dtype=np.int64)
    ii[1:, 1:] = arr.cumsum(axis=0).cumsum(axis=1)

    cx = np.rint(xs).astype(np.intp)[:, None]
    cy = np.rint(ys).astype(np.intp)[:, None]
    ca = np.cos(np.array([k.angle for k in keypoints]))[:, None]
    sa = np.sin(np.array([k.angle for k in keypoints]))[:, None]

    def smoothed(px: np.ndarray, py: np.ndarray) -> np.ndarray:
        qx = cx + np.rint(ca * px - sa * py).astype(np.intp)
        qy = cy + np.rint(sa * px + ca * py).astype(np.intp)
        return (
            ii[qy + 3, qx + 3] - ii[qy - 2, qx + 3] - ii[qy + 3, qx - 2] + ii[qy - 2, qx - 2]
        )

    s1 = smoothed(_PATTERN[None, :, 0], _PATTERN[None, :, 1])
    s2 = smoothed(_PATTERN[None, :, 2], _PATTERN[None, :, 3])
    bits = (s1 < s2).astype(np.uint8)
    return np.packbits(bits, axis=1, bitorder="little")


def hamming_distance(a: np.ndarray, b: np.ndarray) -> int:
    return int(_POPCOUNT[np.bitwise_xor(a, b)].sum())


def _distance_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na, nb = a.shape[0], b.shape[0]
    out = np.empty((na, nb), dtype=np.int32)
    step = max(1, (1 << 22) // max(nb * 32, 1))
    for start in range(0, na, step):
        stop = min(start + step, na)
        xor = np.bitwise_xor(a[start:stop, None, :], b[None, :, :])
        out[start:stop] = _POPCOUNT[xor].sum(axis=2, dtype=np.int32)
    return out


def match_descriptors(
    a: np.ndarray,
    b: np.ndarray,
    max_distance: int = 64,
    cross_check: bool = True,
) -> list[Match]:
    """Nearest-neighbor Hamming matches from a to b.

    Distance ties pick the lowest index_b; with cross_check only mutual
    nearest pairs survive.  Output is sorted by ascending distance, then
    index_a, then index_b.
    """
    if max_distance < 0:
        raise ValueError("max_distance must be >= 0")
    a = np.asarray(a, dtype=np.uint8)
    b = np.asarray(b, dtype=np.uint8)
    if a.size == 0 or b.size == 0:
        return []
    if a.ndim != 2 or a.shape[1] != 32 or b.ndim != 2 or b.shape[1] != 32:
        raise ValueError("descriptors must be (N, 32) uint8 arrays")

    dist = _distance_matrix(a, b)
    nn_b = dist.argmin(axis=1)
    d = dist[np.arange(a.shape[0]), nn_b]
    keep = d <= max_distance
    if cross_check:
        nn_a = dist.argmin(axis=0)
        keep &= nn_a[nn_b] == np.arange(a.shape[0])

    matches = [
        Match(int(i), int(nn_b[i]), int(d[i])) for i in np.nonzero(keep)[0]
    ]
    matches.sort(key=lambda m: (m.distance, m.index_a, m.index_b))
    return matches
