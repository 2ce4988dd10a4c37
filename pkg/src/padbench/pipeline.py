"""End-to-end image procedures.

Two pipelines built from the lower-level modules:

1. preprocess_presentation: raw frame -> rectified 464x744 document ->
   border mask -> 448x728 center crop, the geometry every presentation
   image shares downstream.
2. align_attack_to_bonafide: binary features on both images, mutual
   Hamming matching, RANSAC homography, and a warp of the attack into the
   bona fide frame.  Pairs that fail to align are reported so they can be
   excluded from paired training data.

Alignment operates on preprocessed presentations (not raw frames), since
generators consume preprocessed images and paired data must live in that
same geometry.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import features, geometry
from .dataset import FrameRecord, attack_class
from .errors import (
    AlignmentFailed,
    DegenerateConfiguration,
    DegenerateQuad,
    NoConsensus,
    NoPairableSubjects,
    QuadOutOfBounds,
)
from .imaging import (
    ImageBuffer,
    Quad,
    apply_background_mask,
    center_crop,
    to_grayscale,
    warp_perspective,
)
from .rng import SplitMix64

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PreprocessConfig:
    """Defaults encode the reference 464x744 projection with a 16 px border
    mask and 448x728 center crop."""

    rect_width: int = 464
    rect_height: int = 744
    mask_margin: int = 16
    crop_width: int = 448
    crop_height: int = 728

    def __post_init__(self):
        if self.crop_width > self.rect_width or self.crop_height > self.rect_height:
            raise ValueError("crop dimensions must not exceed rectified dimensions")
        if 2 * self.mask_margin >= min(self.rect_width, self.rect_height):
            raise ValueError("mask margin too large for rectified dimensions")


@dataclass(frozen=True)
class AlignParams:
    threshold: int = 20
    max_keypoints: int = 1000
    match_max_distance: int = 64
    cross_check: bool = True
    ransac_iterations: int = 2000
    ransac_threshold_px: float = 3.0
    seed: int = 0
    min_matches: int = 10
    min_inliers: int = 4
    max_mean_error_px: float = 5.0


@dataclass(frozen=True)
class AlignmentReport:
    matches: int
    inliers: int
    mean_error_px: float
    homography: np.ndarray
    # matched attack->bona point pairs (N, 4) and their RANSAC inlier flags
    pairs: np.ndarray = None
    inlier_flags: np.ndarray = None


def quad_to_rect_homography(quad: Quad, width: int, height: int) -> np.ndarray:
    """Homography sending quad corners onto the width x height rectangle
    corners (0,0), (w-1,0), (w-1,h-1), (0,h-1)."""
    src = quad.as_array()
    dst = np.array(
        [[0.0, 0.0], [width - 1.0, 0.0], [width - 1.0, height - 1.0], [0.0, height - 1.0]]
    )
    return geometry.estimate_homography_dlt(np.hstack([src, dst]))


def rectify_document(
    frame: ImageBuffer, quad: Quad, cfg: PreprocessConfig = PreprocessConfig()
) -> ImageBuffer:
    """Project the annotated document quadrilateral to the canonical
    upright rectangle."""
    if quad.min_triple_area() <= 1e-9:
        raise DegenerateQuad("quad corners are collinear")
    pts = quad.as_array()
    if (
        pts[:, 0].min() < 0
        or pts[:, 1].min() < 0
        or pts[:, 0].max() > frame.width - 1
        or pts[:, 1].max() > frame.height - 1
    ):
        raise QuadOutOfBounds(
            "quad %s outside %dx%d frame" % (pts.tolist(), frame.width, frame.height)
        )
    try:
        h = quad_to_rect_homography(quad, cfg.rect_width, cfg.rect_height)
    except DegenerateConfiguration as exc:
        raise DegenerateQuad(str(exc)) from exc
    return warp_perspective(frame, h, cfg.rect_width, cfg.rect_height)


def preprocess_presentation(
    frame: ImageBuffer, quad: Quad, cfg: PreprocessConfig = PreprocessConfig()
) -> ImageBuffer:
    """Rectify, mask the border, and center crop, in that order.

    Output is always 3-channel (grayscale frames are expanded), so every
    preprocessed presentation has identical shape."""
    if frame.channels == 1:
        frame = ImageBuffer(np.repeat(frame.pixels, 3, axis=2))
    rectified = rectify_document(frame, quad, cfg)
    masked = apply_background_mask(rectified, cfg.mask_margin)
    return center_crop(masked, cfg.crop_width, cfg.crop_height)


def _features_of(img: ImageBuffer, params: AlignParams):
    gray = to_grayscale(img)
    kps = features.detect_keypoints(gray, params.threshold, params.max_keypoints)
    desc = features.compute_descriptors(gray, kps)
    return kps, desc


def align_attack_to_bonafide(
    bona: ImageBuffer, attack: ImageBuffer, params: AlignParams = AlignParams()
) -> tuple[ImageBuffer, AlignmentReport]:
    """Warp the attack image into bona fide coordinates.

    Raises AlignmentFailed when fewer than ``min_matches`` descriptor
    matches or ``min_inliers`` RANSAC inliers are found, or when the mean
    inlier reprojection error exceeds ``max_mean_error_px``; such a pair
    must be excluded from paired training data.
    """
    if min(bona.width, bona.height, attack.width, attack.height) < 64:
        raise ValueError("both images must be at least 64x64")
    if bona.channels != attack.channels:
        raise ValueError("channel counts differ")

    bona_kps, bona_desc = _features_of(bona, params)
    attack_kps, attack_desc = _features_of(attack, params)
    matches = features.match_descriptors(
        attack_desc, bona_desc, params.match_max_distance, params.cross_check
    )
    if len(matches) < params.min_matches:
        raise AlignmentFailed(
            "%d matches, need %d" % (len(matches), params.min_matches)
        )

    pairs = np.array(
        [
            (
                attack_kps[m.index_a].x,
                attack_kps[m.index_a].y,
                bona_kps[m.index_b].x,
                bona_kps[m.index_b].y,
            )
            for m in matches
        ]
    )
    try:
        h, inliers = geometry.ransac_homography(
            pairs,
            iterations=params.ransac_iterations,
            inlier_threshold=params.ransac_threshold_px,
            seed=params.seed,
        )
    except NoConsensus as exc:
        raise AlignmentFailed(str(exc)) from exc

    n_inliers = int(inliers.sum())
    if n_inliers < params.min_inliers:
        raise AlignmentFailed("%d inliers, need %d" % (n_inliers, params.min_inliers))

    projected = geometry.project_points(h, pairs[inliers, :2])
    errors = np.sqrt(((projected - pairs[inliers, 2:]) ** 2).sum(axis=1))
    mean_error = float(errors.mean())
    if mean_error > params.max_mean_error_px:
        raise AlignmentFailed(
            "mean inlier reprojection error %.2f px exceeds %.2f"
            % (mean_error, params.max_mean_error_px)
        )

    warped = warp_perspective(attack, h, bona.width, bona.height)
    report = AlignmentReport(
        matches=len(matches),
        inliers=n_inliers,
        mean_error_px=mean_error,
        homography=h,
        pairs=pairs,
        inlier_flags=inliers,
    )
    return warped, report


def pair_presentations(
    manifest: list[FrameRecord], task: str, seed: int
) -> list[tuple[FrameRecord, FrameRecord]]:
    """Pair every bona fide frame with a random same-subject attack frame.

    Subjects are keyed by (doc_type, subject_id); only in-frame records
    participate.  The attack frame is drawn uniformly per bona fide frame
    from a SplitMix64(seed) stream, iterating subjects and frames in
    sorted order, so a seed replays to identical pairings.  Subjects with
    bona fide frames but no attack frames are skipped with a warning.
    """
    atk = attack_class(task)
    bona_by_subject: dict[tuple[str, str], list[FrameRecord]] = {}
    attack_by_subject: dict[tuple[str, str], list[FrameRecord]] = {}
    for r in manifest:
        if not r.in_frame:
            continue
        if r.class_label == "bonafide":
            bona_by_subject.setdefault(r.subject_key, []).append(r)
        elif r.class_label == atk:
            attack_by_subject.setdefault(r.subject_key, []).append(r)

    pairable = sorted(set(bona_by_subject) & set(attack_by_subject))
    if not pairable:
        raise NoPairableSubjects(
            "no subject holds both bonafide and %s frames" % atk
        )
    skipped = len(set(bona_by_subject) - set(attack_by_subject))
    if skipped:
        log.warning(
            "%d subject(s) with bona fide frames lack %s frames; skipped",
            skipped,
            atk,
        )

    rng = SplitMix64(seed)
    pairs: list[tuple[FrameRecord, FrameRecord]] = []
    for key in pairable:
        attacks = sorted(attack_by_subject[key], key=lambda r: r.frame_path)
        for bona in sorted(bona_by_subject[key], key=lambda r: r.frame_path):
            pairs.append((bona, attacks[rng.randbelow(len(attacks))]))
    return pairs
