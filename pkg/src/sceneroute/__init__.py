"""Scene-complexity scoring, calibrated thresholding, and budgeted
edge-cloud routing with a deterministic simulation harness."""

from .calibration import (
    CalibrationRecord,
    OperatingPointConfig,
    RoutingPolicy,
    calibrate_policy,
    fit_temperature,
    load_policy,
    percentile_threshold,
    save_policy,
)
from .codec import QualityFactor, dct8_forward, dct8_inverse, lossy_cycle
from .complexity import (
    ComplexityFeatures,
    ComplexityScore,
    ComplexityWeights,
    DEFAULT_WEIGHTS,
    complexity_score,
    edge_density,
    intensity_entropy,
    jpeg_residual,
    laplacian_variance,
    sobel_mean_magnitude,
)
from .errors import SceneRouteError
from .imgproc import GrayImage, load_grayscale, resize_to_canvas, save_pgm
from .quantkernel import (
    Codebook,
    DecisionHead,
    Label,
    LoraAdapter,
    QuantizedTensor,
    decide,
    default_codebook,
    dequantize,
    effective_weight,
    load_quantized,
    masked_nll,
    quantize,
    save_quantized,
)
from .scheduler import (
    CostModel,
    Decision,
    DefectReport,
    EdgeConfidence,
    Reason,
    Site,
    edge_accept,
    energy_per_correct,
    latency_total,
    route,
)
from .simharness import (
    Dataset,
    ExperimentConfig,
    RunReport,
    StubModelSpec,
    emit_report,
    load_dataset,
    run_experiment,
    stub_predict,
)

__all__ = [
    "CalibrationRecord",
    "Codebook",
    "ComplexityFeatures",
    "ComplexityScore",
    "ComplexityWeights",
    "CostModel",
    "Dataset",
    "Decision",
    "DecisionHead",
    "DefectReport",
    "DEFAULT_WEIGHTS",
    "EdgeConfidence",
    "ExperimentConfig",
    "GrayImage",
    "Label",
    "LoraAdapter",
    "OperatingPointConfig",
    "QualityFactor",
    "QuantizedTensor",
    "Reason",
    "RoutingPolicy",
    "RunReport",
    "SceneRouteError",
    "Site",
    "StubModelSpec",
    "calibrate_policy",
    "complexity_score",
    "decide",
    "default_codebook",
    "dequantize",
    "dct8_forward",
    "dct8_inverse",
    "edge_accept",
    "edge_density",
    "effective_weight",
    "emit_report",
    "energy_per_correct",
    "fit_temperature",
    "intensity_entropy",
    "jpeg_residual",
    "laplacian_variance",
    "latency_total",
    "load_dataset",
    "load_grayscale",
    "load_policy",
    "load_quantized",
    "lossy_cycle",
    "masked_nll",
    "percentile_threshold",
    "quantize",
    "resize_to_canvas",
    "route",
    "run_experiment",
    "save_pgm",
    "save_policy",
    "save_quantized",
    "sobel_mean_magnitude",
    "stub_predict",
]
