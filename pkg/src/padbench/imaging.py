"""Raster container, PNG/JPEG decode/encode, and pixel-level geometry.

All operations are pure: they never mutate their inputs and return new
buffers, so they can be called freely from worker threads.  Coordinates
follow the pixel-center convention: integer (x, y) addresses the center of
pixel column x, row y, and the corners of a w x h image are (0, 0) and
(w - 1, h - 1).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import (
    CorruptImage,
    CropLargerThanSource,
    MarginTooLarge,
    SingularHomography,
    UnsupportedFormat,
)

# BT.601 luma weights, fixed so grayscale conversion is reproducible.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


class ImageBuffer:
    """8-bit raster with 1 (grayscale) or 3 (RGB) channels.

    Pixels are held as a read-only numpy array of shape (height, width,
    channels); ``data`` exposes the same samples as a flat row-major view.
    """

    __slots__ = ("_pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels, dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        if arr.ndim != 3 or arr.shape[2] not in (1, 3):
            raise ValueError("pixels must be HxW or HxWxC with C in {1, 3}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        self._pixels = arr

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def channels(self) -> int:
        return self._pixels.shape[2]

    @property
    def data(self) -> np.ndarray:
        return self._pixels.reshape(-1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return (
            self._pixels.shape == other._pixels.shape
            and bool(np.array_equal(self._pixels, other._pixels))
        )

    def __repr__(self) -> str:
        return "ImageBuffer(%dx%dx%d)" % (self.width, self.height, self.channels)


@dataclass(frozen=True)
class Quad:
    """Document corners in source-frame pixels: TL, TR, BR, BL."""

    tl: tuple[float, float]
    tr: tuple[float, float]
    br: tuple[float, float]
    bl: tuple[float, float]

    def as_array(self) -> np.ndarray:
        return np.array([self.tl, self.tr, self.br, self.bl], dtype=np.float64)

    @staticmethod
    def from_flat(values) -> "Quad":
        v = [float(x) for x in values]
        if len(v) != 8:
            raise ValueError("quad needs 8 numbers (TL,TR,BR,BL)")
        return Quad((v[0], v[1]), (v[2], v[3]), (v[4], v[5]), (v[6], v[7]))

    def min_triple_area(self) -> float:
        """Smallest triangle area over all corner triples; 0 means 3 corners collinear."""
        pts = self.as_array()
        best = np.inf
        for i in range(4):
            a, b, c = (pts[j] for j in range(4) if j != i)
            area = 0.5 * abs(
                (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            )
            best = min(best, area)
        return float(best)


def load_image(path) -> ImageBuffer:
    """Decode a PNG or JPEG file.

    JPEG decodes to 3 channels; grayscale PNG stays 1 channel; paletted or
    alpha-carrying PNGs are flattened to RGB.
    """
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    try:
        with Image.open(path) as im:
            if im.format not in ("PNG", "JPEG"):
                raise UnsupportedFormat(
                    "%s: %s is not PNG or JPEG" % (path, im.format)
                )
            try:
                if im.format == "JPEG":
                    decoded = im.convert("RGB")
                elif im.mode == "L":
                    decoded = im.copy()
                elif im.mode in ("I", "I;16"):
                    decoded = im.convert("L")
                else:
                    decoded = im.convert("RGB")
                arr = np.asarray(decoded, dtype=np.uint8)
            except OSError as exc:
                raise CorruptImage("%s: %s" % (path, exc)) from exc
    except UnidentifiedImageError as exc:
        raise UnsupportedFormat("%s: not a decodable image" % path) from exc
    return ImageBuffer(arr)


def save_image(buf: ImageBuffer, path) -> None:
    """Encode to PNG (lossless, canonical) or JPEG, chosen by extension.

    The file is written to a temporary sibling and renamed into place so
    concurrent writers never expose a partial file.
    """
    path = os.fspath(path)
    ext = os.path.splitext(path)[1].lower()
    if ext == ".png":
        fmt = "PNG"
    elif ext in (".jpg", ".jpeg"):
        fmt = "JPEG"
    else:
        raise UnsupportedFormat("%s: use a .png or .jpg extension" % path)
    arr = buf.pixels[:, :, 0] if buf.channels == 1 else buf.pixels
    tmp = "%s.tmp%d" % (path, os.getpid())
    Image.fromarray(arr).save(tmp, format=fmt)
    os.replace(tmp, path)


def to_grayscale(buf: ImageBuffer) -> ImageBuffer:
    """BT.601 luma conversion; 1-channel input passes through unchanged."""
    if buf.channels == 1:
        return buf
    luma = buf.pixels.astype(np.float64) @ _LUMA
    return ImageBuffer(np.clip(np.rint(luma), 0, 255).astype(np.uint8))


def warp_perspective(
    src: ImageBuffer, h: np.ndarray, out_width: int, out_height: int
) -> ImageBuffer:
    """Warp ``src`` by the homography ``h`` into an out_width x out_height buffer.

    ``h`` maps source coordinates to output coordinates; each output pixel
    is sampled from the source at h^-1 (x, y) with bilinear interpolation,
    and samples falling outside the source are filled with 0.
    """
    if out_width < 1 or out_height < 1:
        raise ValueError("output dimensions must be >= 1")
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (3, 3):
        raise ValueError("homography must be 3x3")
    det = np.linalg.det(h)
    if abs(det) <= 1e-12:
        raise SingularHomography("|det| = %.3e" % abs(det))
    hinv = np.linalg.inv(h)

    xs, ys = np.meshgrid(
        np.arange(out_width, dtype=np.float64),
        np.arange(out_height, dtype=np.float64),
    )
    denom = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        sx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / denom
        sy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / denom

    # a hair of slack so samples mapping exactly onto the border survive
    # floating rounding instead of falling into the zero fill
    eps = 1e-9
    w, hgt = src.width, src.height
    valid = (
        np.isfinite(sx)
        & np.isfinite(sy)
        & (sx >= -eps)
        & (sx <= w - 1.0 + eps)
        & (sy >= -eps)
        & (sy <= hgt - 1.0 + eps)
    )
    sxc = np.clip(np.where(valid, sx, 0.0), 0.0, w - 1.0)
    syc = np.clip(np.where(valid, sy, 0.0), 0.0, hgt - 1.0)

    x0 = np.floor(sxc).astype(np.intp)
    y0 = np.floor(syc).astype(np.intp)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, hgt - 1)
    fx = sxc - x0
    fy = syc - y0

    pix = src.pixels.astype(np.float64)
    out = (
        pix[y0, x0] * ((1.0 - fx) * (1.0 - fy))[:, :, None]
        + pix[y0, x1] * (fx * (1.0 - fy))[:, :, None]
        + pix[y1, x0] * ((1.0 - fx) * fy)[:, :, None]
        + pix[y1, x1] * (fx * fy)[:, :, None]
    )
    out[~valid] = 0.0
    return ImageBuffer(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def center_crop(src: ImageBuffer, w: int, h: int) -> ImageBuffer:
    """The w x h window centered in ``src``; odd remainders floor toward top-left."""
    if w > src.width or h > src.height:
        raise CropLargerThanSource(
            "crop %dx%d exceeds source %dx%d" % (w, h, src.width, src.height)
        )
    if w < 1 or h < 1:
        raise ValueError("crop dimensions must be >= 1")
    ox = (src.width - w) // 2
    oy = (src.height - h) // 2
    return ImageBuffer(src.pixels[oy : oy + h, ox : ox + w])


def apply_background_mask(src: ImageBuffer, margin: int) -> ImageBuffer:
    """Zero out every pixel within ``margin`` of any image edge."""
    if margin < 0:
        raise ValueError("margin must be >= 0")
    if 2 * margin >= min(src.width, src.height):
        raise MarginTooLarge(
            "margin %d too large for %dx%d" % (margin, src.width, src.height)
        )
    if margin == 0:
        return ImageBuffer(src.pixels)
    out = np.zeros_like(src.pixels)
    out[margin:-margin, margin:-margin] = src.pixels[margin:-margin, margin:-margin]
    return ImageBuffer(out)
