"""Blockwise 4-bit codebook quantization, low-rank weight deltas, masked
log-likelihood evaluation, and the two-logit decision head.

Weights are flattened row-major and split into fixed-size groups. Each group
is standardized by its own mean and population standard deviation, and every
standardized value is snapped to the nearest entry of a 16-level codebook.
Reconstruction applies the inverse affine map, so constant groups (sigma 0)
come back exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from statistics import NormalDist
from typing import Iterator

import numpy as np

from .errors import (
    EmptyInputError,
    LengthMismatchError,
    NonFiniteLogitError,
    ShapeMismatchError,
)

DEFAULT_GROUP_SIZE = 64

QUANT_FILE_MAGIC = b"SAECQ1"


class Label(str, Enum):
    GOOD = "good"
    DEFECT = "defect"


@dataclass(frozen=True)
class Codebook:
    """16 strictly increasing quantization levels containing exact zero."""

    levels: tuple[float, ...]

    def __post_init__(self):
        if len(self.levels) != 16:
            raise ValueError(f"codebook must have 16 levels, got {len(self.levels)}")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ValueError("codebook levels must be strictly increasing")
        if 0.0 not in self.levels:
            raise ValueError("codebook must contain the exact value 0")

    @property
    def zero_index(self) -> int:
        return self.levels.index(0.0)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=np.float64)

    @property
    def half_max_gap(self) -> float:
        gaps = np.diff(self.as_array())
        return float(gaps.max()) / 2.0


def default_codebook() -> Codebook:
    """Normal-quantile 16-level codebook normalized to [-1, 1] with exact 0.

    The positive side takes 8 evenly spaced quantiles of the standard normal,
    the negative side 7, leaving one slot for the exact zero; the tail
    probability is the midpoint of the 16- and 15-step spacings.
    """
    nd = NormalDist()
    tail = ((1.0 - 1.0 / 32.0) + (1.0 - 1.0 / 30.0)) / 2.0
    pos = [nd.inv_cdf(p) for p in np.linspace(tail, 0.5, 9)[:-1]]
    neg = [-nd.inv_cdf(p) for p in np.linspace(tail, 0.5, 8)[:-1]]
    levels = sorted(neg + [0.0] + pos)
    top = max(levels)
    return Codebook(tuple(v / top for v in levels))


@dataclass(frozen=True)
class QuantGroup:
    """One group's statistics and its 4-bit code indices."""

    mu: float
    sigma: float
    codes: np.ndarray


@dataclass(frozen=True, eq=False)
class QuantizedTensor:
    """Blockwise-quantized matrix: per-group (mu, sigma) plus 4-bit codes."""

    shape: tuple[int, int]
    group_size: int
    mus: np.ndarray
    sigmas: np.ndarray
    codes: np.ndarray
    codebook: Codebook = field(default_factory=default_codebook)

    def __post_init__(self):
        rows, cols = self.shape
        total = rows * cols
        if self.codes.size != total:
            raise ValueError(
                f"code count {self.codes.size} does not match shape {self.shape}"
            )
        if self.codes.size and self.codes.max() > 15:
            raise ValueError("code indices must lie in [0, 15]")
        n_groups = -(-total // self.group_size)
        if self.mus.size != n_groups or self.sigmas.size != n_groups:
            raise ValueError("group statistics do not match the group count")
        if self.sigmas.size and self.sigmas.min() < 0:
            raise ValueError("sigma must be nonnegative for every group")

    @property
    def n_groups(self) -> int:
        return self.mus.size

    def groups(self) -> Iterator[QuantGroup]:
        total = self.shape[0] * self.shape[1]
        for g in range(self.n_groups):
            lo = g * self.group_size
            hi = min(lo + self.group_size, total)
            yield QuantGroup(float(self.mus[g]), float(self.sigmas[g]), self.codes[lo:hi])


def quantize(w, group_size: int = DEFAULT_GROUP_SIZE, codebook: Codebook | None = None) -> QuantizedTensor:
    """Quantize a real matrix blockwise against the codebook.

    Values are grouped row-major; the final group may be short. A group with
    zero spread stores sigma 0 and maps every element to the codebook's zero
    entry. Nearest-level ties break toward the smaller index.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.size == 0:
        raise EmptyInputError("cannot quantize an empty matrix")
    if w.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got ndim={w.ndim}")
    if group_size < 1:
        raise ValueError(f"group_size must be >= 1, got {group_size}")
    codebook = codebook or default_codebook()
    levels = codebook.as_array()

    flat = w.reshape(-1)
    total = flat.size
    n_groups = -(-total // group_size)
    mus = np.empty(n_groups)
    sigmas = np.empty(n_groups)
    codes = np.empty(total, dtype=np.uint8)
    for g in range(n_groups):
        lo = g * group_size
        hi = min(lo + group_size, total)
        vals = flat[lo:hi]
        mu = float(vals.mean())
        sigma = float(vals.std())
        mus[g] = mu
        sigmas[g] = sigma
        if sigma == 0.0:
            codes[lo:hi] = codebook.zero_index
        else:
            normalized = (vals - mu) / sigma
            codes[lo:hi] = np.abs(normalized[:, None] - levels[None, :]).argmin(axis=1)
    return QuantizedTensor(w.shape, group_size, mus, sigmas, codes, codebook)


def dequantize(qt: QuantizedTensor) -> np.ndarray:
    """Reconstruct the matrix: sigma_g * level[code] + mu_g elementwise."""
    total = qt.shape[0] * qt.shape[1]
    counts = np.full(qt.n_groups, qt.group_size, dtype=np.int64)
    counts[-1] = total - qt.group_size * (qt.n_groups - 1)
    per_mu = np.repeat(qt.mus, counts)
    per_sigma = np.repeat(qt.sigmas, counts)
    levels = qt.codebook.as_array()
    return (per_sigma * levels[qt.codes] + per_mu).reshape(qt.shape)


@dataclass(frozen=True, eq=False)
class LoraAdapter:
    """Low-rank delta (alpha/r) * A @ B with A (d_out, r) and B (r, d_in)."""

    a: np.ndarray
    b: np.ndarray
    alpha: float
    r: int

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.r < 1:
            raise ValueError(f"rank must be positive, got {self.r}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != self.r or b.shape[0] != self.r:
            raise ShapeMismatchError(
                f"adapter shapes {a.shape} x {b.shape} do not match rank {self.r}"
            )
        if self.r > min(a.shape[0], b.shape[1]):
            raise ValueError("rank exceeds min(d_out, d_in)")

    @property
    def d_out(self) -> int:
        return self.a.shape[0]

    @property
    def d_in(self) -> int:
        return self.b.shape[1]

    @property
    def param_count(self) -> int:
        return self.r * (self.d_out + self.d_in)

    def delta(self) -> np.ndarray:
        return (self.alpha / self.r) * (self.a @ self.b)


def effective_weight(qt: QuantizedTensor, adapter: LoraAdapter) -> np.ndarray:
    """Dequantized base plus the adapter's low-rank delta."""
    if (adapter.d_out, adapter.d_in) != qt.shape:
        raise ShapeMismatchError(
            f"adapter {adapter.d_out}x{adapter.d_in} does not match tensor {qt.shape}"
        )
    return dequantize(qt) + adapter.delta()


def masked_nll(log_probs, mask) -> float:
    """Negative sum of the masked per-token log-probabilities."""
    lp = np.asarray(log_probs, dtype=np.float64)
    m = np.asarray(mask, dtype=np.float64)
    if lp.shape != m.shape:
        raise LengthMismatchError(
            f"log_probs length {lp.size} != mask length {m.size}"
        )
    if not np.all((m == 0.0) | (m == 1.0)):
        raise ValueError("mask entries must be 0 or 1")
    return float(-(m * lp).sum())


@dataclass(frozen=True)
class DecisionHead:
    """Binary decision rule: defect iff softmax(l/T)[1] >= tau."""

    tau: float
    temperature: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must lie in [0, 1], got {self.tau}")
        if self.temperature <= 0.0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")


def decide(logits: tuple[float, float], head: DecisionHead) -> tuple[Label, float]:
    """Apply the decision head to a (good, defect) logit pair.

    Returns the label and the temperature-scaled defect probability. The
    softmax subtracts the max logit first, so extreme logits stay finite.
    """
    l0, l1 = float(logits[0]), float(logits[1])
    if not (np.isfinite(l0) and np.isfinite(l1)):
        raise NonFiniteLogitError(f"logits must be finite, got ({l0}, {l1})")
    z0 = l0 / head.temperature
    z1 = l1 / head.temperature
    m = max(z0, z1)
    e0 = np.exp(z0 - m)
    e1 = np.exp(z1 - m)
    p1 = float(e1 / (e0 + e1))
    label = Label.DEFECT if p1 >= head.tau else Label.GOOD
    return label, p1


def _pack_codes(codes: np.ndarray) -> bytes:
    c = codes.astype(np.uint8)
    if c.size % 2:
        c = np.concatenate([c, np.zeros(1, dtype=np.uint8)])
    return (c[0::2] | (c[1::2] << 4)).tobytes()


def _unpack_codes(raw: bytes, count: int) -> np.ndarray:
    packed = np.frombuffer(raw, dtype=np.uint8)
    lo = packed & 0x0F
    hi = packed >> 4
    out = np.empty(packed.size * 2, dtype=np.uint8)
    out[0::2] = lo
    out[1::2] = hi
    return out[:count]


def quantized_to_bytes(qt: QuantizedTensor) -> bytes:
    """Serialize: magic, u32 rows/cols/group_size, u8 level count, levels,
    then per group f64 mu, f64 sigma, and codes packed two per byte."""
    parts = [QUANT_FILE_MAGIC]
    parts.append(struct.pack("<III", qt.shape[0], qt.shape[1], qt.group_size))
    levels = qt.codebook.levels
    parts.append(struct.pack("<B", len(levels)))
    parts.append(struct.pack(f"<{len(levels)}d", *levels))
    for grp in qt.groups():
        parts.append(struct.pack("<dd", grp.mu, grp.sigma))
        parts.append(_pack_codes(grp.codes))
    return b"".join(parts)


def quantized_from_bytes(data: bytes) -> QuantizedTensor:
    if data[: len(QUANT_FILE_MAGIC)] != QUANT_FILE_MAGIC:
        raise ValueError("bad magic: not a serialized quantized tensor")
    off = len(QUANT_FILE_MAGIC)
    rows, cols, group_size = struct.unpack_from("<III", data, off)
    off += 12
    (n_levels,) = struct.unpack_from("<B", data, off)
    off += 1
    levels = struct.unpack_from(f"<{n_levels}d", data, off)
    off += 8 * n_levels
    codebook = Codebook(tuple(levels))

    total = rows * cols
    n_groups = -(-total // group_size)
    mus = np.empty(n_groups)
    sigmas = np.empty(n_groups)
    codes = np.empty(total, dtype=np.uint8)
    for g in range(n_groups):
        mus[g], sigmas[g] = struct.unpack_from("<dd", data, off)
        off += 16
        lo = g * group_size
        hi = min(lo + group_size, total)
        nbytes = -(-(hi - lo) // 2)
        codes[lo:hi] = _unpack_codes(data[off : off + nbytes], hi - lo)
        off += nbytes
    if off != len(data):
        raise ValueError("trailing bytes after the final group")
    return QuantizedTensor((rows, cols), group_size, mus, sigmas, codes, codebook)


def save_quantized(qt: QuantizedTensor, path) -> None:
    Path(path).write_bytes(quantized_to_bytes(qt))


def load_quantized(path) -> QuantizedTensor:
    return quantized_from_bytes(Path(path).read_bytes())
