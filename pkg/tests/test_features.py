import numpy as np
import pytest

from padbench import errors
from padbench.features import (
    BORDER_MARGIN,
    _PATTERN,
    _RING,
    Keypoint,
    compute_descriptors,
    detect_keypoints,
    hamming_distance,
    match_descriptors,
)
from padbench.imaging import ImageBuffer


def square_fixture():
    arr = np.zeros((100, 100), np.uint8)
    arr[40:45, 40:45] = 255
    return ImageBuffer(arr)


def segment_test_oracle(arr, x, y, threshold):
    """Brute-force FAST-9 check at one pixel."""
    c = int(arr[y, x])
    flags_bright = [int(arr[y + dy, x + dx]) > c + threshold for dx, dy in _RING]
    flags_dark = [int(arr[y + dy, x + dx]) < c - threshold for dx, dy in _RING]
    for flags in (flags_bright, flags_dark):
        doubled = flags + flags
        run = 0
        for f in doubled:
            run = run + 1 if f else 0
            if run >= 9:
                return True
    return False


def textured_patch(rng, size=64):
    base = rng.integers(0, 256, (size // 4, size // 4))
    return np.kron(base, np.ones((4, 4))).astype(np.uint8)


def centroid_angle(arr, cx, cy, radius=15):
    """Independent intensity-centroid orientation for a keypoint."""
    m10 = m01 = 0.0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            if dx * dx + dy * dy <= radius * radius:
                v = float(arr[cy + dy, cx + dx])
                m10 += dx * v
                m01 += dy * v
    a = np.arctan2(m01, m10)
    return a + 2 * np.pi if a < 0 else a


# detection ---------------------------------------------------------------------

def test_constant_image_has_no_keypoints():
    buf = ImageBuffer(np.full((64, 64), 128, np.uint8))
    assert detect_keypoints(buf, 20, 100) == []


def test_square_corners_detected():
    buf = square_fixture()
    kps = detect_keypoints(buf, 20, 100)
    assert len(kps) >= 4
    corners = [(40, 40), (44, 40), (40, 44), (44, 44)]
    arr = buf.pixels[:, :, 0]
    for k in kps:
        d = min(np.hypot(k.x - cx, k.y - cy) for cx, cy in corners)
        assert d <= 3.0
        assert segment_test_oracle(arr, int(round(k.x)), int(round(k.y)), 20)
        assert k.response > 0


def test_keypoint_count_monotone_in_threshold(rng):
    buf = ImageBuffer(textured_patch(rng, 128))
    n20 = len(detect_keypoints(buf, 20, 10000))
    n40 = len(detect_keypoints(buf, 40, 10000))
    assert n40 <= n20


def test_detection_deterministic(rng):
    buf = ImageBuffer(textured_patch(rng, 96))
    assert detect_keypoints(buf, 15, 500) == detect_keypoints(buf, 15, 500)


def test_detection_respects_max_count(rng):
    buf = ImageBuffer(textured_patch(rng, 128))
    full = detect_keypoints(buf, 10, 100000)
    top = detect_keypoints(buf, 10, 5)
    assert len(top) == min(5, len(full))
    assert top == full[:5]
    responses = [k.response for k in full]
    assert responses == sorted(responses, reverse=True)


def test_image_too_small():
    with pytest.raises(errors.ImageTooSmall):
        detect_keypoints(ImageBuffer(np.zeros((16, 16), np.uint8)), 20, 10)


def test_keypoints_inside_descriptor_margin(rng):
    buf = ImageBuffer(textured_patch(rng, 96))
    for k in detect_keypoints(buf, 10, 10000):
        assert BORDER_MARGIN <= k.x <= buf.width - 1 - BORDER_MARGIN
        assert BORDER_MARGIN <= k.y <= buf.height - 1 - BORDER_MARGIN


# descriptors ---------------------------------------------------------------------

def test_identical_patches_identical_descriptors(rng):
    patch = textured_patch(rng, 40)
    canvas = np.full((120, 160), 128, np.uint8)
    canvas[10:50, 10:50] = patch
    canvas[60:100, 100:140] = patch
    buf = ImageBuffer(canvas)
    kps = [Keypoint(30.0, 30.0, 1.0, 0.8), Keypoint(120.0, 80.0, 1.0, 0.8)]
    desc = compute_descriptors(buf, kps)
    assert hamming_distance(desc[0], desc[1]) == 0


def rot90_pair_distances(rng, steered):
    """Hamming distances between patches and their 90-degree rotations.

    np.rot90 sends pixel (x, y) of an NxN array to (y, N-1-x), so the
    keypoint planted at (cx, cy) reappears at (cy, N-1-cx)."""
    distances = []
    n = 96
    for _ in range(100):
        arr = textured_patch(rng, n)
        rot = np.rot90(arr).copy()
        cx, cy = 48, 46
        rx, ry = cy, n - 1 - cx
        a0 = centroid_angle(arr, cx, cy)
        a1 = centroid_angle(rot, rx, ry)
        kp0 = Keypoint(float(cx), float(cy), 1.0, a0 if steered else 0.0)
        kp1 = Keypoint(float(rx), float(ry), 1.0, a1 if steered else 0.0)
        d0 = compute_descriptors(ImageBuffer(arr), [kp0])
        d1 = compute_descriptors(ImageBuffer(rot), [kp1])
        distances.append(hamming_distance(d0[0], d1[0]))
    return distances


def test_rotation_steering_bounds_distance(rng):
    distances = rot90_pair_distances(rng, steered=True)
    assert max(distances) <= 64


def test_steering_beats_unsteered(rng):
    steered = rot90_pair_distances(np.random.default_rng(5), steered=True)
    plain = rot90_pair_distances(np.random.default_rng(5), steered=False)
    assert np.mean(steered) < np.mean(plain)


def test_descriptor_border_check():
    buf = ImageBuffer(np.zeros((64, 64), np.uint8))
    with pytest.raises(errors.KeypointTooCloseToBorder):
        compute_descriptors(buf, [Keypoint(5.0, 30.0, 1.0, 0.0)])


def test_pattern_is_stable():
    assert _PATTERN.shape == (256, 4)
    assert (np.abs(_PATTERN) <= 13).all()
    # frozen spot checks so the table can never drift silently
    assert _PATTERN[0].tolist() == [-10, -8, -11, 4]
    assert _PATTERN[255].tolist() == [1, 4, -2, -11]


# matching ------------------------------------------------------------------------

def random_descriptors(rng, n):
    return rng.integers(0, 256, (n, 32), dtype=np.uint8)


def brute_force_matches(a, b, max_distance):
    """Independent all-pairs oracle: per-row nearest neighbor in b."""
    out = []
    for i in range(len(a)):
        dists = [hamming_distance(a[i], b[j]) for j in range(len(b))]
        j = int(np.argmin(dists))
        if dists[j] <= max_distance:
            out.append((i, j, dists[j]))
    return out


def test_match_identity(rng):
    d = random_descriptors(rng, 15)
    matches = match_descriptors(d, d, max_distance=64, cross_check=True)
    assert len(matches) == 15
    assert all(m.index_a == m.index_b and m.distance == 0 for m in matches)


def test_match_distance_zero_on_disjoint_sets(rng):
    a = random_descriptors(rng, 10)
    b = random_descriptors(rng, 10)
    # rejection: ensure no identical rows across the two sets
    while min(hamming_distance(x, y) for x in a for y in b) == 0:
        b = random_descriptors(rng, 10)
    assert match_descriptors(a, b, max_distance=0, cross_check=False) == []


def test_match_recovers_shuffle(rng):
    a = random_descriptors(rng, 20)
    perm = rng.permutation(20)
    b = a[perm]
    matches = match_descriptors(a, b, max_distance=0, cross_check=True)
    oracle = brute_force_matches(a, b, 0)
    assert [(m.index_a, m.index_b, m.distance) for m in matches] == sorted(oracle)
    recovered = {m.index_a: m.index_b for m in matches}
    assert all(perm[v] == k for k, v in recovered.items())


def test_match_empty_inputs(rng):
    d = random_descriptors(rng, 4)
    assert match_descriptors(np.zeros((0, 32), np.uint8), d) == []
    assert match_descriptors(d, np.zeros((0, 32), np.uint8)) == []


def test_cross_check_partial_injection(rng):
    a = random_descriptors(rng, 40)
    b = random_descriptors(rng, 30)
    matches = match_descriptors(a, b, max_distance=256, cross_check=True)
    assert len({m.index_a for m in matches}) == len(matches)
    assert len({m.index_b for m in matches}) == len(matches)


def test_match_output_sorted(rng):
    a = random_descriptors(rng, 40)
    b = random_descriptors(rng, 40)
    matches = match_descriptors(a, b, max_distance=256, cross_check=False)
    keys = [(m.distance, m.index_a, m.index_b) for m in matches]
    assert keys == sorted(keys)


def test_hamming_is_a_metric(rng):
    d = random_descriptors(rng, 12)
    for i in range(12):
        assert hamming_distance(d[i], d[i]) == 0
        for j in range(12):
            assert hamming_distance(d[i], d[j]) == hamming_distance(d[j], d[i])
            for k in range(12):
                assert hamming_distance(d[i], d[k]) <= hamming_distance(
                    d[i], d[j]
                ) + hamming_distance(d[j], d[k])


def test_hamming_matches_popcount_definition(rng):
    d = random_descriptors(rng, 6)
    for i in range(6):
        for j in range(6):
            expected = bin(
                int.from_bytes(d[i].tobytes(), "big")
                ^ int.from_bytes(d[j].tobytes(), "big")
            ).count("1")
            assert hamming_distance(d[i], d[j]) == expected
