"""Threshold and temperature fitting for the routing policy.

A held-out split supplies complexity scores, raw logits from both prediction
heads, and ground-truth labels. Calibration derives:

  tau_S    complexity threshold at the (1 - rho) nearest-rank percentile
  T_edge   temperature minimizing the edge head's NLL
  T_cloud  temperature minimizing the cloud head's NLL
  gates    (tau_s, tau_m, tau_h) and the cloud threshold tau, by exhaustive
           grid search maximizing held-out accuracy

The grid search is constrained so the fraction of samples the edge gate
rejects onward to the cloud stays within a configurable overflow allowance;
the complexity-routed fraction is already held near rho by tau_S itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateLabelsError, EmptySetError


@dataclass(frozen=True)
class RoutingPolicy:
    """Calibrated thresholds and temperatures driving the scheduler."""

    rho: float
    tau_s_complexity: float
    tau_conf: float
    tau_margin: float
    tau_entropy: float
    tau_cloud: float
    temperature_edge: float = 1.0
    temperature_cloud: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [0, 1], got {self.rho}")
        for name in ("tau_conf", "tau_margin", "tau_cloud"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.tau_entropy < 0.0:
            raise ValueError(f"tau_entropy must be >= 0, got {self.tau_entropy}")
        if self.temperature_edge <= 0.0 or self.temperature_cloud <= 0.0:
            raise ValueError("temperatures must be positive")


_POLICY_KEYS = ("rho", "tau_S", "tau_s", "tau_m", "tau_h", "tau", "T_edge", "T_cloud")


def policy_to_json(policy: RoutingPolicy) -> str:
    payload = {
        "rho": policy.rho,
        "tau_S": policy.tau_s_complexity,
        "tau_s": policy.tau_conf,
        "tau_m": policy.tau_margin,
        "tau_h": policy.tau_entropy,
        "tau": policy.tau_cloud,
        "T_edge": policy.temperature_edge,
        "T_cloud": policy.temperature_cloud,
    }
    return json.dumps(payload, indent=2) + "\n"


def policy_from_json(text: str) -> RoutingPolicy:
    payload = json.loads(text)
    missing = [k for k in _POLICY_KEYS if k not in payload]
    if missing:
        raise ValueError(f"policy file missing keys: {missing}")
    return RoutingPolicy(
        rho=float(payload["rho"]),
        tau_s_complexity=float(payload["tau_S"]),
        tau_conf=float(payload["tau_s"]),
        tau_margin=float(payload["tau_m"]),
        tau_entropy=float(payload["tau_h"]),
        tau_cloud=float(payload["tau"]),
        temperature_edge=float(payload["T_edge"]),
        temperature_cloud=float(payload["T_cloud"]),
    )


def save_policy(policy: RoutingPolicy, path) -> None:
    Path(path).write_text(policy_to_json(policy), encoding="ascii")


def load_policy(path) -> RoutingPolicy:
    return policy_from_json(Path(path).read_text(encoding="ascii"))


def percentile_threshold(scores, rho: float) -> float:
    """Nearest-rank percentile of the scores at level (1 - rho).

    Sort ascending and return the element at rank ceil((1 - rho) * N),
    1-indexed and clamped to [1, N]. Integer targets are snapped within 1e-9
    so float noise in (1 - rho) * N cannot move the rank.
    """
    s = np.sort(np.asarray(scores, dtype=np.float64).reshape(-1))
    if s.size == 0:
        raise EmptySetError("cannot take a percentile of an empty score set")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    rank = math.ceil((1.0 - rho) * s.size - 1e-9)
    rank = min(max(rank, 1), s.size)
    return float(s[rank - 1])


def _binary_nll(z: np.ndarray, y: np.ndarray, temperature: float) -> float:
    scaled = z / temperature
    losses = np.logaddexp(0.0, np.where(y == 1, -scaled, scaled))
    return float(losses.mean())


_LOG_T_LO = math.log(0.05)
_LOG_T_HI = math.log(20.0)
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def fit_temperature(logit_pairs, labels) -> float:
    """Temperature minimizing the mean NLL of softmax(logits / T).

    Golden-section search over ln T on [ln 0.05, ln 20] to 1e-4; the result
    never has higher NLL than T = 1. Raises DegenerateLabelsError when only
    one class is present.
    """
    pairs = np.asarray(logit_pairs, dtype=np.float64).reshape(-1, 2)
    y = np.asarray(labels, dtype=np.int64).reshape(-1)
    if pairs.shape[0] != y.size:
        raise ValueError("logit pairs and labels differ in length")
    if np.all(y == y[0]):
        raise DegenerateLabelsError("temperature fitting needs both classes")
    z = pairs[:, 1] - pairs[:, 0]

    def f(x: float) -> float:
        return _binary_nll(z, y, math.exp(x))

    a, b = _LOG_T_LO, _LOG_T_HI
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > 1e-4:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    t = math.exp((a + b) / 2.0)
    if _binary_nll(z, y, 1.0) < _binary_nll(z, y, t):
        return 1.0
    return t


@dataclass(frozen=True)
class CalibrationRecord:
    """One held-out sample: complexity score, raw logits, truth (0/1)."""

    s_c: float
    edge_logits: tuple[float, float]
    cloud_logits: tuple[float, float]
    label: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label}")


def _grid(lo: float, hi: float, step: float) -> tuple[float, ...]:
    n = int(round((hi - lo) / step))
    return tuple(round(lo + i * step, 10) for i in range(n + 1))


@dataclass(frozen=True)
class OperatingPointConfig:
    """Grids and constraints for the gate threshold search.

    tau_s values below 0.5 are vacuous for a two-class head (the max class
    probability is always at least 0.5), so its grid spans [0.5, 1.0].
    """

    max_reject_overflow: float = 0.10
    tau_s_grid: tuple[float, ...] = field(default_factory=lambda: _grid(0.5, 1.0, 0.05))
    tau_m_grid: tuple[float, ...] = field(default_factory=lambda: _grid(0.0, 1.0, 0.05))
    tau_h_grid: tuple[float, ...] = field(default_factory=lambda: _grid(0.1, 0.7, 0.1))
    tau_grid: tuple[float, ...] = field(default_factory=lambda: _grid(0.0, 1.0, 0.05))


DEFAULT_OPERATING_POINT = OperatingPointConfig()


def _stable_sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _binary_entropy(p: np.ndarray) -> np.ndarray:
    q = 1.0 - p
    out = np.zeros_like(p)
    pos = (p > 0.0) & (p < 1.0)
    out[pos] = -(p[pos] * np.log(p[pos]) + q[pos] * np.log(q[pos]))
    return out


def calibrate_policy(
    records: Sequence[CalibrationRecord],
    rho: float,
    targets: OperatingPointConfig = DEFAULT_OPERATING_POINT,
) -> RoutingPolicy:
    """Fit the full routing policy on a held-out split.

    tau_S comes from the score percentile at budget rho (for rho = 0 it is
    bumped one ulp above the maximum so the inclusive routing test routes
    nothing). Each head gets its own temperature. The gate thresholds are
    chosen by exhaustive grid search maximizing held-out accuracy subject to
    the reject-overflow cap, with ties broken toward larger tau_s, then
    larger tau_m, smaller tau_h, and larger tau.
    """
    if not records:
        raise EmptySetError("calibration requires a nonempty held-out split")
    scores = np.array([r.s_c for r in records])
    labels = np.array([r.label for r in records], dtype=np.int64)
    edge_logits = np.array([r.edge_logits for r in records])
    cloud_logits = np.array([r.cloud_logits for r in records])

    if rho > 0.0:
        tau_s_cpx = percentile_threshold(scores, rho)
    else:
        tau_s_cpx = float(np.nextafter(scores.max(), np.inf))
    t_edge = fit_temperature(edge_logits, labels)
    t_cloud = fit_temperature(cloud_logits, labels)

    z_edge = (edge_logits[:, 1] - edge_logits[:, 0]) / t_edge
    p_edge = _stable_sigmoid(z_edge)
    s_max = np.maximum(p_edge, 1.0 - p_edge)
    margin = 2.0 * s_max - 1.0
    h_p = _binary_entropy(p_edge)
    edge_correct = (p_edge >= 0.5) == (labels == 1)

    z_cloud = (cloud_logits[:, 1] - cloud_logits[:, 0]) / t_cloud
    p_cloud = _stable_sigmoid(z_cloud)

    cpx_routed = scores >= tau_s_cpx
    n = scores.size
    max_reject = targets.max_reject_overflow * n + 1e-9

    # cloud_correct[i, j]: sample j correct under tau_grid[i].
    tau_grid = np.asarray(targets.tau_grid)
    cloud_correct = (
        (p_cloud[None, :] >= tau_grid[:, None]) == (labels == 1)[None, :]
    ).astype(np.int64)

    best = (-1, None)
    for tau_s in sorted(targets.tau_s_grid, reverse=True):
        pass_s = s_max >= tau_s
        for tau_m in sorted(targets.tau_m_grid, reverse=True):
            pass_m = pass_s & (margin >= tau_m)
            for tau_h in sorted(targets.tau_h_grid):
                accepted = ~cpx_routed & pass_m & (h_p <= tau_h)
                rejected = ~cpx_routed & ~accepted
                if rejected.sum() > max_reject:
                    continue
                on_cloud = (~accepted).astype(np.int64)
                edge_hits = int((edge_correct & accepted).sum())
                cloud_hits = cloud_correct @ on_cloud
                for ti in np.argsort(-tau_grid, kind="stable"):
                    total = edge_hits + int(cloud_hits[ti])
                    if total > best[0]:
                        best = (total, (tau_s, tau_m, tau_h, float(tau_grid[ti])))
    tau_s, tau_m, tau_h, tau = best[1]
    return RoutingPolicy(
        rho=rho,
        tau_s_complexity=tau_s_cpx,
        tau_conf=tau_s,
        tau_margin=tau_m,
        tau_entropy=tau_h,
        tau_cloud=tau,
        temperature_edge=t_edge,
        temperature_cloud=t_cloud,
    )
