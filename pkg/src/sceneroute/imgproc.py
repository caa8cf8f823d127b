"""Grayscale image loading, bilinear resizing, and PGM debug output.

Pixel data is 8-bit and row-major throughout. Color inputs are reduced to
luma with BT.601 weights (0.299 R + 0.587 G + 0.114 B, rounded half up) so
repeated loads are bit-identical regardless of the decoding backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CorruptImageError, InvalidDimensionError, UnsupportedFormatError

# PIL format names for the formats this package accepts (PGM decodes as PPM).
_SUPPORTED_FORMATS = {"PNG", "PPM", "BMP", "JPEG"}

_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable 8-bit single-channel raster, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 2 or arr.size == 0:
            raise InvalidDimensionError("image must be a nonempty 2-D array")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError(f"intensities must be integers, got dtype {arr.dtype}")
            if arr.min() < 0 or arr.max() > 255:
                raise ValueError("intensities must lie in [0, 255]")
        arr = arr.astype(np.uint8, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def data(self) -> np.ndarray:
        """Flat row-major view of the intensities."""
        return self.pixels.reshape(-1)

    def same_pixels(self, other: "GrayImage") -> bool:
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


def _to_luma(im: Image.Image, path: Path) -> np.ndarray:
    if im.mode == "L":
        return np.asarray(im, dtype=np.uint8)
    if im.mode == "1":
        return np.asarray(im.convert("L"), dtype=np.uint8)
    if im.mode in ("I", "I;16", "I;16B", "I;16L", "F"):
        raise UnsupportedFormatError(f"only 8-bit channels are supported: {path}")
    rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    return np.floor(rgb @ _LUMA + 0.5).astype(np.uint8)


def load_grayscale(path) -> GrayImage:
    """Load a PNG, PGM (P5), BMP, or JPEG file as an 8-bit grayscale image.

    Multi-channel inputs are converted with BT.601 luma weights, rounded
    half up. Raises FileNotFoundError, UnsupportedFormatError, or
    CorruptImageError; every message names the offending path.
    """
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such image file: {p}")
    try:
        with Image.open(p) as im:
            if im.format not in _SUPPORTED_FORMATS:
                raise UnsupportedFormatError(
                    f"unsupported image format {im.format!r}: {p}"
                )
            im.load()
            return GrayImage(_to_luma(im, p))
    except UnidentifiedImageError as exc:
        raise UnsupportedFormatError(f"not a recognizable image file: {p}") from exc
    except (OSError, SyntaxError, ValueError) as exc:
        raise CorruptImageError(f"failed to decode image {p}: {exc}") from exc


def resize_to_canvas(img: GrayImage, c: int) -> GrayImage:
    """Resize to a c-by-c canvas with bilinear interpolation.

    Sample coordinates use the half-pixel-center convention and clamp at the
    borders. Matching input dimensions bypass interpolation entirely, so the
    identity case is bit-exact.
    """
    if c < 2:
        raise InvalidDimensionError(f"canvas side must be >= 2, got {c}")
    if img.width == c and img.height == c:
        return img
    src = img.pixels.astype(np.float64)
    h, w = src.shape
    sx = (np.arange(c) + 0.5) * (w / c) - 0.5
    sy = (np.arange(c) + 0.5) * (h / c) - 0.5
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0
    x0i = np.clip(x0.astype(np.int64), 0, w - 1)
    x1i = np.clip(x0.astype(np.int64) + 1, 0, w - 1)
    y0i = np.clip(y0.astype(np.int64), 0, h - 1)
    y1i = np.clip(y0.astype(np.int64) + 1, 0, h - 1)
    top = src[np.ix_(y0i, x0i)] * (1.0 - fx) + src[np.ix_(y0i, x1i)] * fx
    bot = src[np.ix_(y1i, x0i)] * (1.0 - fx) + src[np.ix_(y1i, x1i)] * fx
    out = top * (1.0 - fy)[:, None] + bot * fy[:, None]
    return GrayImage(np.floor(out + 0.5).astype(np.uint8))


def save_pgm(img: GrayImage, path) -> None:
    """Write a binary P5 PGM (maxval 255, row-major)."""
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + img.pixels.tobytes())
