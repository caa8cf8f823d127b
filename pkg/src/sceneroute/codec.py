"""Deterministic lossy DCT compression cycle for grayscale images.

This is a fixed reference pipeline, not a JPEG encoder: level shift by -128,
8x8 orthonormal DCT per block, division by the standard luminance
quantization table scaled for the requested quality, rounding half away from
zero, reconstruction, and clamping back to [0, 255]. No entropy coding or
bitstream is involved, so the reconstruction error is bit-identical across
platforms and safe to use as an image statistic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imgproc import GrayImage

DEFAULT_QUALITY = 50

# Standard luminance quantization table (row-major 8x8).
LUMINANCE_QUANT_TABLE = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.float64,
)


@dataclass(frozen=True)
class QualityFactor:
    """Quality knob for the lossy cycle, integer in [1, 100]."""

    q: int

    def __post_init__(self):
        if not isinstance(self.q, int) or not 1 <= self.q <= 100:
            raise ValueError(f"quality must be an integer in [1, 100], got {self.q!r}")


def _quality_value(quality) -> int:
    if isinstance(quality, QualityFactor):
        return quality.q
    return QualityFactor(int(quality)).q


def scaled_quant_table(quality) -> np.ndarray:
    """Luminance table scaled by quality: 5000/q below 50, else 200 - 2q."""
    q = _quality_value(quality)
    scale = 5000.0 / q if q < 50 else 200.0 - 2.0 * q
    table = np.floor(LUMINANCE_QUANT_TABLE * scale / 100.0 + 0.5)
    return np.maximum(table, 1.0)


def _dct_matrix() -> np.ndarray:
    n = np.arange(8)
    k = n[:, None]
    m = np.cos((2 * n[None, :] + 1) * k * np.pi / 16.0)
    m[0, :] *= np.sqrt(1.0 / 8.0)
    m[1:, :] *= np.sqrt(2.0 / 8.0)
    return m


_DCT_M = _dct_matrix()


def dct8_forward(block: np.ndarray) -> np.ndarray:
    """Orthonormal 2-D type-II DCT of one 8x8 block."""
    block = np.asarray(block, dtype=np.float64)
    if block.shape != (8, 8):
        raise ValueError(f"expected an 8x8 block, got shape {block.shape}")
    return _DCT_M @ block @ _DCT_M.T


def dct8_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Inverse (type-III) transform; exact inverse of dct8_forward."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape != (8, 8):
        raise ValueError(f"expected an 8x8 block, got shape {coeffs.shape}")
    return _DCT_M.T @ coeffs @ _DCT_M


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def lossy_cycle(img: GrayImage, quality=DEFAULT_QUALITY) -> GrayImage:
    """Run the compress-decompress cycle and return the reconstruction.

    The image is edge-replicated to block-aligned dimensions, processed
    blockwise, then cropped back, so any input size is accepted.
    """
    table = scaled_quant_table(quality)
    h, w = img.height, img.width
    pad_h = (-h) % 8
    pad_w = (-w) % 8
    field = img.pixels.astype(np.float64) - 128.0
    if pad_h or pad_w:
        field = np.pad(field, ((0, pad_h), (0, pad_w)), mode="edge")
    hb, wb = field.shape[0] // 8, field.shape[1] // 8
    blocks = field.reshape(hb, 8, wb, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)

    coeffs = _DCT_M @ blocks @ _DCT_M.T
    coeffs = _round_half_away(coeffs / table) * table
    recon = _DCT_M.T @ coeffs @ _DCT_M

    field = recon.reshape(hb, wb, 8, 8).transpose(0, 2, 1, 3).reshape(hb * 8, wb * 8)
    field = np.clip(field + 128.0, 0.0, 255.0)
    out = np.floor(field + 0.5).astype(np.uint8)
    return GrayImage(out[:h, :w])
