"""Per-sample edge/cloud routing and latency/energy accounting.

A sample whose complexity score reaches the calibrated threshold goes to the
cloud outright. Below it, the edge prediction is trusted only if all three
confidence gates pass; otherwise the sample escalates to the cloud as well.
All comparisons are inclusive. Wall time models the edge and cloud branches
as overlapping, so the total is the scoring time plus the slower branch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

from .calibration import RoutingPolicy
from .errors import (
    MissingConfidenceError,
    NegativeTimeError,
    NoCorrectDecisionsError,
)
from .quantkernel import Label

JOULES_PER_MWH = 3.6


class Site(str, Enum):
    EDGE = "edge"
    CLOUD = "cloud"


class Reason(str, Enum):
    COMPLEXITY_ROUTE = "complexity_route"
    EDGE_ACCEPT = "edge_accept"
    EDGE_REJECT = "edge_reject"


@dataclass(frozen=True)
class EdgeConfidence:
    """Selective-prediction trio of the edge head: max probability, top-1
    minus top-2 margin, and predictive entropy in nats."""

    s_max: float
    margin: float
    h_p: float

    def __post_init__(self):
        if not 0.0 <= self.margin <= self.s_max <= 1.0:
            raise ValueError(
                f"need 0 <= margin <= s_max <= 1, got ({self.s_max}, {self.margin})"
            )
        if self.h_p < 0.0:
            raise ValueError(f"entropy must be >= 0, got {self.h_p}")

    @classmethod
    def from_defect_probability(cls, p1: float) -> "EdgeConfidence":
        if not 0.0 <= p1 <= 1.0:
            raise ValueError(f"probability out of [0, 1]: {p1}")
        s_max = max(p1, 1.0 - p1)
        h = 0.0
        if 0.0 < p1 < 1.0:
            h = -(p1 * math.log(p1) + (1.0 - p1) * math.log(1.0 - p1))
        return cls(s_max=s_max, margin=2.0 * s_max - 1.0, h_p=h)

    @classmethod
    def from_logits(cls, l0: float, l1: float, temperature: float = 1.0) -> "EdgeConfidence":
        z = (l1 - l0) / temperature
        if z >= 0.0:
            p1 = 1.0 / (1.0 + math.exp(-z))
        else:
            e = math.exp(z)
            p1 = e / (1.0 + e)
        return cls.from_defect_probability(p1)


@dataclass(frozen=True)
class Decision:
    """Final outcome for one sample."""

    site: Site
    reason: Reason
    label: Label
    p_defect: float

    def __post_init__(self):
        if self.reason in (Reason.COMPLEXITY_ROUTE, Reason.EDGE_REJECT) and self.site != Site.CLOUD:
            raise ValueError(f"reason {self.reason.value} requires the cloud site")
        if self.reason == Reason.EDGE_ACCEPT and self.site != Site.EDGE:
            raise ValueError("edge_accept requires the edge site")
        if not 0.0 <= self.p_defect <= 1.0:
            raise ValueError(f"p_defect out of [0, 1]: {self.p_defect}")


@dataclass(frozen=True)
class DefectReport:
    """Normalized bounding boxes plus an opaque one-sentence description."""

    bboxes: tuple[tuple[float, float, float, float], ...]
    desc: str

    def __post_init__(self):
        boxes = tuple(tuple(float(v) for v in b) for b in self.bboxes)
        object.__setattr__(self, "bboxes", boxes)
        for x, y, w, h in boxes:
            if min(x, y, w, h) < 0.0 or max(x, y, w, h) > 1.0:
                raise ValueError(f"bbox coordinates out of [0, 1]: {(x, y, w, h)}")
            if x + w > 1.0 or y + h > 1.0:
                raise ValueError(f"bbox exceeds the unit square: {(x, y, w, h)}")

    def to_json(self) -> str:
        return json.dumps({"bboxes": [list(b) for b in self.bboxes], "desc": self.desc})

    @classmethod
    def from_json(cls, text: str) -> "DefectReport":
        payload = json.loads(text)
        return cls(tuple(tuple(b) for b in payload["bboxes"]), payload["desc"])


@dataclass(frozen=True)
class CostModel:
    """Per-image latency constants and average tier power in watts."""

    t_cpx_per_image: float
    t_edge_per_image: float
    t_cloud_per_image: float
    p_edge_w: float
    p_cloud_w: float

    def __post_init__(self):
        for name in (
            "t_cpx_per_image",
            "t_edge_per_image",
            "t_cloud_per_image",
            "p_edge_w",
            "p_cloud_w",
        ):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")


def edge_accept(conf: EdgeConfidence, policy: RoutingPolicy) -> bool:
    """All three confidence gates, inclusive at the boundaries."""
    return (
        conf.s_max >= policy.tau_conf
        and conf.margin >= policy.tau_margin
        and conf.h_p <= policy.tau_entropy
    )


def route(
    s_c: float,
    conf: EdgeConfidence | None,
    policy: RoutingPolicy,
) -> tuple[Site, Reason]:
    """Pick the execution site for one sample.

    Scores at or above tau_S go to the cloud without consulting the edge
    confidence; anything else needs the confidence trio and escalates when
    a gate fails.
    """
    if s_c >= policy.tau_s_complexity:
        return Site.CLOUD, Reason.COMPLEXITY_ROUTE
    if conf is None:
        raise MissingConfidenceError(
            "edge confidence required for scores below the complexity threshold"
        )
    if edge_accept(conf, policy):
        return Site.EDGE, Reason.EDGE_ACCEPT
    return Site.CLOUD, Reason.EDGE_REJECT


def latency_total(t_cpx: float, t_edge: float, t_cloud: float) -> float:
    """Scoring time plus the slower of the two overlapping branches."""
    if min(t_cpx, t_edge, t_cloud) < 0.0:
        raise NegativeTimeError("latency components must be nonnegative")
    return t_cpx + max(t_edge, t_cloud)


def energy_per_correct(total_energy_mwh: float, correct_count: int) -> float:
    """Total energy in mWh divided by the number of correct decisions."""
    if total_energy_mwh < 0.0:
        raise ValueError("total energy must be nonnegative")
    if correct_count == 0:
        raise NoCorrectDecisionsError(
            "energy per correct decision is undefined with zero correct decisions"
        )
    return total_energy_mwh / correct_count


TRACE_CSV_HEADER = "path,s_c,site,reason,label,truth,p_defect,t_contrib_s,energy_mwh"


@dataclass(frozen=True)
class TraceRow:
    """One line of the per-sample decision trace."""

    path: str
    s_c: float
    site: Site
    reason: Reason
    label: Label
    truth: Label
    p_defect: float
    t_contrib_s: float
    energy_mwh: float

    def to_csv(self) -> str:
        return (
            f"{self.path},{self.s_c:.6f},{self.site.value},{self.reason.value},"
            f"{self.label.value},{self.truth.value},{self.p_defect:.6f},"
            f"{self.t_contrib_s:.6f},{self.energy_mwh:.6f}"
        )


def joules_to_mwh(joules: float) -> float:
    return joules / JOULES_PER_MWH
