"""Dataset ingestion, synthetic classifier stubs, and experiment execution.

The stubs replace real edge/cloud models with seeded Bernoulli behavior:
each sample is classified correctly with a probability that depends on which
side of a complexity knee its score falls. Randomness comes from a keyed,
counter-based hash stream, so results are identical regardless of evaluation
order or thread count, and reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .calibration import RoutingPolicy
from .complexity import ComplexityWeights, DEFAULT_WEIGHTS, complexity_score
from .errors import ConfigSchemaError, EmptyDatasetError, MissingClassDirError
from .imgproc import load_grayscale
from .quantkernel import DecisionHead, Label, decide
from .scheduler import (
    TRACE_CSV_HEADER,
    CostModel,
    DefectReport,
    EdgeConfidence,
    Reason,
    Site,
    TraceRow,
    energy_per_correct,
    joules_to_mwh,
    route,
)

IMAGE_EXTENSIONS = {".png", ".pgm", ".bmp", ".jpg", ".jpeg"}

MODES = ("hybrid", "edge_only", "cloud_only")

_STUB_DESC = "Synthetic defect flagged by the stub classifier."


@dataclass(frozen=True)
class Dataset:
    """Binary-labeled image collection; paths are relative to root."""

    root: Path
    samples: tuple[tuple[str, Label], ...]

    def __post_init__(self):
        if not self.samples:
            raise EmptyDatasetError(f"dataset at {self.root} has no samples")

    def __len__(self) -> int:
        return len(self.samples)

    def absolute(self, rel_path: str) -> Path:
        return self.root / rel_path


def load_dataset(root) -> Dataset:
    """Enumerate root/{good,defect} (or root/val/{good,defect}) images.

    Files are listed in lexicographic order of their relative paths, and the
    label of every sample is its parent directory's name.
    """
    base = Path(root)
    if (base / "val" / "good").is_dir() or (base / "val" / "defect").is_dir():
        base = base / "val"
    for cls in ("good", "defect"):
        if not (base / cls).is_dir():
            raise MissingClassDirError(f"missing class directory: {base / cls}")
    samples = []
    for cls, label in (("defect", Label.DEFECT), ("good", Label.GOOD)):
        for p in sorted((base / cls).iterdir()):
            if p.is_file() and p.suffix.lower() in IMAGE_EXTENSIONS:
                samples.append((f"{cls}/{p.name}", label))
    samples.sort(key=lambda s: s[0])
    if not samples:
        raise EmptyDatasetError(f"no image files under {base}")
    return Dataset(base, tuple(samples))


@dataclass(frozen=True)
class StubModelSpec:
    """Synthetic backend: accuracy per complexity regime plus a confidence
    sharpness that controls how peaked the emitted logits are."""

    role: Site
    acc_low_complexity: float
    acc_high_complexity: float
    complexity_knee: float
    confidence_sharpness: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.acc_low_complexity <= 1.0:
            raise ValueError("acc_low_complexity must lie in [0, 1]")
        if not 0.0 <= self.acc_high_complexity <= 1.0:
            raise ValueError("acc_high_complexity must lie in [0, 1]")
        if self.confidence_sharpness <= 0.0:
            raise ValueError("confidence_sharpness must be positive")


@dataclass(frozen=True)
class StubPrediction:
    logits: tuple[float, float]
    latency_s: float
    report: DefectReport | None


def _stream_u01(seed: int, path: str, role: str, counter: int) -> float:
    """Uniform [0, 1) draw from a keyed counter-based hash stream."""
    digest = hashlib.sha256(path.encode("utf-8")).digest()[:16]
    h = hashlib.blake2b(
        digest + counter.to_bytes(4, "little"),
        digest_size=8,
        key=(seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little"),
        person=role.encode("ascii"),
    )
    return int.from_bytes(h.digest(), "little") / 2.0**64


def stub_predict(
    spec: StubModelSpec,
    sample: tuple[str, Label],
    s_c: float,
    cost: CostModel,
) -> StubPrediction:
    """Emit logits, latency, and (for cloud defect predictions) a report.

    The prediction equals the truth with probability acc_low below the knee
    and acc_high at or above it. Logits are symmetric around zero with
    top-class probability 0.5 + 0.5*tanh(sharpness * u), pointed at the
    predicted label.
    """
    rel_path, truth = sample
    acc = spec.acc_low_complexity if s_c < spec.complexity_knee else spec.acc_high_complexity
    u_correct = _stream_u01(spec.seed, rel_path, spec.role.value, 0)
    correct = u_correct < acc
    predicted = truth if correct else (Label.GOOD if truth == Label.DEFECT else Label.DEFECT)

    u_conf = _stream_u01(spec.seed, rel_path, spec.role.value, 1)
    p_top = 0.5 + 0.5 * math.tanh(spec.confidence_sharpness * u_conf)
    p_top = min(p_top, 1.0 - 1e-12)
    z = math.log(p_top / (1.0 - p_top))
    logits = (-z / 2.0, z / 2.0) if predicted == Label.DEFECT else (z / 2.0, -z / 2.0)

    latency = (
        cost.t_edge_per_image if spec.role == Site.EDGE else cost.t_cloud_per_image
    )

    report = None
    if spec.role == Site.CLOUD and predicted == Label.DEFECT:
        w = 0.3 * _stream_u01(spec.seed, rel_path, spec.role.value, 2)
        h = 0.3 * _stream_u01(spec.seed, rel_path, spec.role.value, 3)
        x = (1.0 - w) * _stream_u01(spec.seed, rel_path, spec.role.value, 4)
        y = (1.0 - h) * _stream_u01(spec.seed, rel_path, spec.role.value, 5)
        report = DefectReport(bboxes=((x, y, w, h),), desc=_STUB_DESC)
    return StubPrediction(logits=logits, latency_s=latency, report=report)


@dataclass(frozen=True)
class RunReport:
    """Aggregate metrics of one experiment run."""

    accuracy: float
    total_time_s: float
    avg_time_per_image_s: float
    cloud_fraction: float
    total_energy_mwh: float
    energy_per_correct_mwh: float
    n_samples: int
    edge_accept_count: int
    edge_reject_count: int
    complexity_route_count: int


@dataclass(frozen=True)
class ExperimentResult:
    report: RunReport
    trace: tuple[TraceRow, ...]
    defects: tuple[DefectReport, ...]


def run_experiment(
    dataset: Dataset,
    policy: RoutingPolicy,
    edge: StubModelSpec,
    cloud: StubModelSpec,
    cost: CostModel,
    weights: ComplexityWeights = DEFAULT_WEIGHTS,
    quality: int = 50,
    mode: str = "hybrid",
) -> ExperimentResult:
    """Score, route, and classify every sample, then aggregate.

    Wall time applies the parallel-branch model at run scope: the scoring
    time for all samples plus the larger of the two tiers' busy times.
    Scoring time and energy are charged only in hybrid mode; the baseline
    modes have no estimator in the loop. Complexity scoring draws edge-tier
    power.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    edge_head = DecisionHead(tau=0.5, temperature=policy.temperature_edge)
    cloud_head = DecisionHead(tau=policy.tau_cloud, temperature=policy.temperature_cloud)
    charge_cpx = mode == "hybrid"

    trace: list[TraceRow] = []
    defects: list[DefectReport] = []
    n_ran_edge = 0
    n_ran_cloud = 0
    n_correct = 0
    counts = {Reason.COMPLEXITY_ROUTE: 0, Reason.EDGE_ACCEPT: 0, Reason.EDGE_REJECT: 0}

    for rel_path, truth in dataset.samples:
        img = load_grayscale(dataset.absolute(rel_path))
        s_c = complexity_score(img, weights, quality).s_c

        pred_edge = None
        if mode == "edge_only":
            site, reason = Site.EDGE, Reason.EDGE_ACCEPT
            pred_edge = stub_predict(edge, (rel_path, truth), s_c, cost)
        elif mode == "cloud_only":
            site, reason = Site.CLOUD, Reason.COMPLEXITY_ROUTE
        elif s_c >= policy.tau_s_complexity:
            site, reason = route(s_c, None, policy)
        else:
            pred_edge = stub_predict(edge, (rel_path, truth), s_c, cost)
            conf = EdgeConfidence.from_logits(*pred_edge.logits, policy.temperature_edge)
            site, reason = route(s_c, conf, policy)

        ran_edge = pred_edge is not None
        ran_cloud = site == Site.CLOUD

        if site == Site.EDGE:
            label, p_defect = decide(pred_edge.logits, edge_head)
            report = None
        else:
            pred_cloud = stub_predict(cloud, (rel_path, truth), s_c, cost)
            label, p_defect = decide(pred_cloud.logits, cloud_head)
            report = pred_cloud.report

        if report is not None and label == Label.DEFECT:
            defects.append(report)

        counts[reason] += 1
        n_ran_edge += ran_edge
        n_ran_cloud += ran_cloud
        n_correct += label == truth

        t_contrib = (
            (cost.t_cpx_per_image if charge_cpx else 0.0)
            + (cost.t_edge_per_image if ran_edge else 0.0)
            + (cost.t_cloud_per_image if ran_cloud else 0.0)
        )
        e_joules = cost.p_edge_w * (
            (cost.t_cpx_per_image if charge_cpx else 0.0)
            + (cost.t_edge_per_image if ran_edge else 0.0)
        ) + cost.p_cloud_w * (cost.t_cloud_per_image if ran_cloud else 0.0)
        trace.append(
            TraceRow(
                path=rel_path,
                s_c=s_c,
                site=site,
                reason=reason,
                label=label,
                truth=truth,
                p_defect=p_defect,
                t_contrib_s=t_contrib,
                energy_mwh=joules_to_mwh(e_joules),
            )
        )

    n = len(dataset)
    cpx_time = cost.t_cpx_per_image * n if charge_cpx else 0.0
    edge_busy = cost.t_edge_per_image * n_ran_edge
    cloud_busy = cost.t_cloud_per_image * n_ran_cloud
    total_time = cpx_time + max(edge_busy, cloud_busy)
    energy_j = cost.p_edge_w * (cpx_time + edge_busy) + cost.p_cloud_w * cloud_busy
    energy_mwh = joules_to_mwh(energy_j)

    report = RunReport(
        accuracy=n_correct / n,
        total_time_s=total_time,
        avg_time_per_image_s=total_time / n,
        cloud_fraction=(counts[Reason.COMPLEXITY_ROUTE] + counts[Reason.EDGE_REJECT]) / n,
        total_energy_mwh=energy_mwh,
        energy_per_correct_mwh=energy_per_correct(energy_mwh, n_correct),
        n_samples=n,
        edge_accept_count=counts[Reason.EDGE_ACCEPT],
        edge_reject_count=counts[Reason.EDGE_REJECT],
        complexity_route_count=counts[Reason.COMPLEXITY_ROUTE],
    )
    return ExperimentResult(report, tuple(trace), tuple(defects))


_REPORT_FLOAT_FIELDS = (
    "accuracy",
    "total_time_s",
    "avg_time_per_image_s",
    "cloud_fraction",
    "total_energy_mwh",
    "energy_per_correct_mwh",
)
_REPORT_INT_FIELDS = (
    "n_samples",
    "edge_accept_count",
    "edge_reject_count",
    "complexity_route_count",
)

REPORT_CSV_HEADER = ",".join(_REPORT_FLOAT_FIELDS)


def emit_report(report: RunReport, fmt: str, config_echo: dict | None = None) -> bytes:
    """Serialize a report with stable field order and 6-decimal floats."""
    if fmt == "json":
        payload: dict = {}
        for name in _REPORT_FLOAT_FIELDS:
            payload[name] = round(getattr(report, name), 6)
        for name in _REPORT_INT_FIELDS:
            payload[name] = getattr(report, name)
        if config_echo is not None:
            payload["config"] = config_echo
        return (json.dumps(payload, indent=2) + "\n").encode("ascii")
    if fmt == "csv":
        row = ",".join(f"{getattr(report, name):.6f}" for name in _REPORT_FLOAT_FIELDS)
        return (REPORT_CSV_HEADER + "\n" + row + "\n").encode("ascii")
    raise ValueError(f"format must be 'json' or 'csv', got {fmt!r}")


def parse_report(data: bytes) -> RunReport:
    """Parse the JSON serialization back into a RunReport."""
    payload = json.loads(data.decode("ascii"))
    kwargs = {name: float(payload[name]) for name in _REPORT_FLOAT_FIELDS}
    kwargs.update({name: int(payload[name]) for name in _REPORT_INT_FIELDS})
    return RunReport(**kwargs)


def trace_to_csv(trace) -> bytes:
    lines = [TRACE_CSV_HEADER]
    lines.extend(row.to_csv() for row in trace)
    return ("\n".join(lines) + "\n").encode("ascii")


def defects_to_jsonl(defects) -> bytes:
    return ("".join(r.to_json() + "\n" for r in defects)).encode("ascii")


_STUB_KEYS = (
    "acc_low_complexity",
    "acc_high_complexity",
    "complexity_knee",
    "confidence_sharpness",
)
_COST_KEYS = (
    "t_cpx_per_image",
    "t_edge_per_image",
    "t_cloud_per_image",
    "p_edge_w",
    "p_cloud_w",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parsed and validated simulate configuration."""

    dataset_root: str
    weights: ComplexityWeights
    quality: int
    policy_path: str
    edge_stub: StubModelSpec
    cloud_stub: StubModelSpec
    cost_model: CostModel
    seed: int
    mode: str
    raw: dict = field(repr=False, default_factory=dict)


def _require(payload: dict, key: str, kind, where: str = "config"):
    if key not in payload:
        raise ConfigSchemaError(key, f"{where} is missing required key '{key}'")
    value = payload[key]
    if kind is float:
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigSchemaError(key, f"{where} key '{key}' must be a number")
        return float(value)
    if kind is int:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigSchemaError(key, f"{where} key '{key}' must be an integer")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigSchemaError(key, f"{where} key '{key}' must be a string")
        return value
    if kind is dict:
        if not isinstance(value, dict):
            raise ConfigSchemaError(key, f"{where} key '{key}' must be an object")
        return value
    raise AssertionError(kind)


def _parse_stub(payload: dict, key: str, role: Site, default_seed: int) -> StubModelSpec:
    obj = _require(payload, key, dict)
    fields = {k: _require(obj, k, float, where=f"'{key}'") for k in _STUB_KEYS}
    seed = obj.get("seed", default_seed)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigSchemaError("seed", f"'{key}' key 'seed' must be an integer")
    try:
        return StubModelSpec(role=role, seed=seed, **fields)
    except ValueError as exc:
        raise ConfigSchemaError(key, f"invalid '{key}': {exc}") from exc


def parse_experiment_config(payload: dict, seed_override: int | None = None) -> ExperimentConfig:
    """Validate the simulate config schema, naming the offending key."""
    if not isinstance(payload, dict):
        raise ConfigSchemaError("", "config must be a JSON object")
    dataset_root = _require(payload, "dataset_root", str)
    if "weights" not in payload:
        raise ConfigSchemaError("weights", "config is missing required key 'weights'")
    weights_raw = payload["weights"]
    if not isinstance(weights_raw, list) or len(weights_raw) != 5 or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in weights_raw
    ):
        raise ConfigSchemaError("weights", "config key 'weights' must be 5 numbers")
    try:
        weights = ComplexityWeights(*[float(v) for v in weights_raw])
    except ValueError as exc:
        raise ConfigSchemaError("weights", f"invalid 'weights': {exc}") from exc
    quality = _require(payload, "quality", int)
    if not 1 <= quality <= 100:
        raise ConfigSchemaError("quality", "config key 'quality' must be in [1, 100]")
    policy_path = _require(payload, "policy_path", str)
    seed = _require(payload, "seed", int) if seed_override is None else seed_override
    mode = _require(payload, "mode", str)
    if mode not in MODES:
        raise ConfigSchemaError("mode", f"config key 'mode' must be one of {MODES}")
    cost_obj = _require(payload, "cost_model", dict)
    cost_fields = {k: _require(cost_obj, k, float, where="'cost_model'") for k in _COST_KEYS}
    try:
        cost = CostModel(**cost_fields)
    except ValueError as exc:
        raise ConfigSchemaError("cost_model", f"invalid 'cost_model': {exc}") from exc
    edge_stub = _parse_stub(payload, "edge_stub", Site.EDGE, seed)
    cloud_stub = _parse_stub(payload, "cloud_stub", Site.CLOUD, seed)
    return ExperimentConfig(
        dataset_root=dataset_root,
        weights=weights,
        quality=quality,
        policy_path=policy_path,
        edge_stub=edge_stub,
        cloud_stub=cloud_stub,
        cost_model=cost,
        seed=seed,
        mode=mode,
        raw=dict(payload),
    )
