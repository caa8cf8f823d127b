"""Scene-complexity features and their weighted score.

Five statistics are computed on a fixed 192x192 analysis canvas:

  h_i         normalized histogram entropy in [0, 1]
  e_d         Canny edge-pixel fraction in [0, 1]
  lap_var     variance of the 4-neighbor Laplacian response
  sobel_mean  mean Sobel gradient magnitude
  r_j         normalized residual of a lossy compression cycle in [0, 1]

The score combines them as

  s_c = w1*h_i + w2*e_d + w3*ln(1 + lap_var)/8 + w4*sobel_mean/16 + w5*r_j

where the /8 and /16 divisors bring the unbounded terms onto roughly unit
range. Every constant of the Canny pipeline is pinned here (Gaussian sigma
1.4 on a 5x5 kernel, thresholds 50/150 on the clamped 8-bit magnitude,
4-sector non-maximum suppression, 8-connected hysteresis) so e_d is
reproducible bit for bit. All convolutions replicate the border pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codec import DEFAULT_QUALITY, lossy_cycle
from .errors import DimensionMismatchError
from .imgproc import GrayImage, resize_to_canvas

CANVAS_SIZE = 192
ENTROPY_EPS = 1e-12

CANNY_SIGMA = 1.4
CANNY_LOW = 50.0
CANNY_HIGH = 150.0

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)
LAPLACIAN = np.array([[0, 1, 0], [1, -4, 1], [0, 1, 0]], dtype=np.float64)

# Largest possible Sobel magnitude on 8-bit input: |gx|,|gy| <= 4*255.
SOBEL_MAGNITUDE_BOUND = 1020.0 * math.sqrt(2.0)


@dataclass(frozen=True)
class ComplexityWeights:
    """Nonnegative weights for the five features, at least one positive."""

    w1: float
    w2: float
    w3: float
    w4: float
    w5: float

    def __post_init__(self):
        ws = self.as_tuple()
        if any(w < 0 for w in ws):
            raise ValueError(f"weights must be nonnegative, got {ws}")
        if not any(w > 0 for w in ws):
            raise ValueError("at least one weight must be positive")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4, self.w5)


DEFAULT_WEIGHTS = ComplexityWeights(0.30, 0.25, 0.20, 0.15, 0.10)


@dataclass(frozen=True)
class ComplexityFeatures:
    """The five raw feature values; lap_var and sobel_mean are unscaled."""

    h_i: float
    e_d: float
    lap_var: float
    sobel_mean: float
    r_j: float

    def __post_init__(self):
        if not 0.0 <= self.h_i <= 1.0:
            raise ValueError(f"h_i out of [0, 1]: {self.h_i}")
        if not 0.0 <= self.e_d <= 1.0:
            raise ValueError(f"e_d out of [0, 1]: {self.e_d}")
        if not 0.0 <= self.r_j <= 1.0:
            raise ValueError(f"r_j out of [0, 1]: {self.r_j}")
        if self.lap_var < 0.0:
            raise ValueError(f"lap_var must be >= 0: {self.lap_var}")
        if not 0.0 <= self.sobel_mean <= SOBEL_MAGNITUDE_BOUND:
            raise ValueError(f"sobel_mean out of range: {self.sobel_mean}")


@dataclass(frozen=True)
class ComplexityScore:
    """Weighted score together with the features and weights it came from."""

    s_c: float
    features: ComplexityFeatures
    weights: ComplexityWeights

    def __post_init__(self):
        expected = weighted_score(self.features, self.weights)
        if abs(self.s_c - expected) > 1e-12:
            raise ValueError(
                f"s_c={self.s_c!r} does not match its features ({expected!r})"
            )


def weighted_score(features: ComplexityFeatures, weights: ComplexityWeights) -> float:
    return (
        weights.w1 * features.h_i
        + weights.w2 * features.e_d
        + weights.w3 * math.log1p(features.lap_var) / 8.0
        + weights.w4 * features.sobel_mean / 16.0
        + weights.w5 * features.r_j
    )


def _require_canvas(img: GrayImage) -> None:
    if img.width != CANVAS_SIZE or img.height != CANVAS_SIZE:
        raise DimensionMismatchError(
            f"expected {CANVAS_SIZE}x{CANVAS_SIZE} canvas, "
            f"got {img.width}x{img.height}"
        )


def _convolve_replicate(field: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    kh, kw = kernel.shape
    rh, rw = kh // 2, kw // 2
    padded = np.pad(field, ((rh, rh), (rw, rw)), mode="edge")
    out = np.zeros_like(field)
    h, w = field.shape
    for dy in range(kh):
        for dx in range(kw):
            k = kernel[dy, dx]
            if k != 0.0:
                out += k * padded[dy : dy + h, dx : dx + w]
    return out


def _gaussian_kernel(size: int, sigma: float) -> np.ndarray:
    r = size // 2
    ax = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


_GAUSS5 = _gaussian_kernel(5, CANNY_SIGMA)


def _shifted_views(field: np.ndarray):
    """Map (dr, dc) -> neighbor values, computed from one replicated pad."""
    h, w = field.shape
    padded = np.pad(field, 1, mode="edge")

    def view(dr: int, dc: int) -> np.ndarray:
        return padded[1 + dr : 1 + dr + h, 1 + dc : 1 + dc + w]

    return view


# Per-sector neighbor offsets for non-maximum suppression, as (dr, dc) along
# the quantized gradient direction (rows grow downward).
_SECTOR_OFFSETS = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}

_EIGHT_NEIGHBORS = [
    (dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)
]


def _canny_edges(pixels: np.ndarray) -> np.ndarray:
    field = _convolve_replicate(pixels.astype(np.float64), _GAUSS5)
    gx = _convolve_replicate(field, SOBEL_X)
    gy = _convolve_replicate(field, SOBEL_Y)
    mag = np.sqrt(gx * gx + gy * gy)

    angle = np.degrees(np.arctan2(gy, gx)) % 180.0
    sector = np.zeros(mag.shape, dtype=np.int8)
    sector[(angle >= 22.5) & (angle < 67.5)] = 1
    sector[(angle >= 67.5) & (angle < 112.5)] = 2
    sector[(angle >= 112.5) & (angle < 157.5)] = 3

    # Keep a pixel if it strictly beats the neighbor against the gradient and
    # at least ties the one along it; the asymmetry thins symmetric ridges to
    # a single pixel.
    neighbor = _shifted_views(mag)
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dr, dc) in _SECTOR_OFFSETS.items():
        mask = sector == s
        keep |= mask & (mag > neighbor(-dr, -dc)) & (mag >= neighbor(dr, dc))

    clamped = np.minimum(mag, 255.0)
    strong = keep & (clamped >= CANNY_HIGH)
    weak = keep & (clamped >= CANNY_LOW) & ~strong

    edges = strong
    while True:
        grown = np.zeros_like(edges)
        near = _shifted_views(edges)
        for dr, dc in _EIGHT_NEIGHBORS:
            grown |= near(dr, dc)
        nxt = edges | (grown & weak)
        if np.array_equal(nxt, edges):
            return edges
        edges = nxt


def intensity_entropy(img: GrayImage) -> float:
    """Normalized 256-bin histogram entropy, clamped to [0, 1]."""
    counts = np.bincount(img.data, minlength=256)
    p = counts / img.data.size
    h = -float(np.sum(p * np.log(p + ENTROPY_EPS))) / math.log(256.0)
    return min(max(h, 0.0), 1.0)


def edge_density(img: GrayImage) -> float:
    """Fraction of Canny edge pixels on the analysis canvas."""
    _require_canvas(img)
    return float(np.mean(_canny_edges(img.pixels)))


def laplacian_variance(img: GrayImage) -> float:
    """Population variance of the 4-neighbor Laplacian response."""
    resp = _convolve_replicate(img.pixels.astype(np.float64), LAPLACIAN)
    return float(resp.var())


def sobel_mean_magnitude(img: GrayImage) -> float:
    """Mean Sobel gradient magnitude over the analysis canvas."""
    _require_canvas(img)
    field = img.pixels.astype(np.float64)
    gx = _convolve_replicate(field, SOBEL_X)
    gy = _convolve_replicate(field, SOBEL_Y)
    return float(np.mean(np.sqrt(gx * gx + gy * gy)))


def jpeg_residual(img: GrayImage, quality=DEFAULT_QUALITY) -> float:
    """Mean absolute reconstruction error of the lossy cycle, over 255."""
    recon = lossy_cycle(img, quality)
    diff = np.abs(img.pixels.astype(np.float64) - recon.pixels.astype(np.float64))
    return float(diff.mean() / 255.0)


def compute_features(img: GrayImage, quality=DEFAULT_QUALITY) -> ComplexityFeatures:
    """All five features of an image already on the analysis canvas."""
    _require_canvas(img)
    return ComplexityFeatures(
        h_i=intensity_entropy(img),
        e_d=edge_density(img),
        lap_var=laplacian_variance(img),
        sobel_mean=sobel_mean_magnitude(img),
        r_j=jpeg_residual(img, quality),
    )


def complexity_score(
    img: GrayImage,
    weights: ComplexityWeights = DEFAULT_WEIGHTS,
    quality=DEFAULT_QUALITY,
) -> ComplexityScore:
    """Resize to the canvas, compute the features, and combine them."""
    canvas = resize_to_canvas(img, CANVAS_SIZE)
    features = compute_features(canvas, quality)
    return ComplexityScore(weighted_score(features, weights), features, weights)


CSV_HEADER = "path,h_i,e_d,lap_var,sobel_mean,r_j,s_c"


def csv_row(path: str, score: ComplexityScore) -> str:
    f = score.features
    return (
        f"{path},{f.h_i:.6f},{f.e_d:.6f},{f.lap_var:.6f},"
        f"{f.sobel_mean:.6f},{f.r_j:.6f},{score.s_c:.6f}"
    )
