"""Command-line entry point.

Subcommands: score, calibrate, route, simulate, quant, codec. Exit codes:
0 success, 2 input error, 3 calibration degeneracy, 4 config schema error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import calibration, codec, complexity, quantkernel, simharness
from .errors import (
    ConfigSchemaError,
    DegenerateLabelsError,
    SceneRouteError,
)
from .imgproc import load_grayscale, save_pgm
from .scheduler import EdgeConfidence, route as route_sample
from .simharness import IMAGE_EXTENSIONS

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3
EXIT_CONFIG = 4


def _parse_weights(text: str) -> complexity.ComplexityWeights:
    parts = text.split(",")
    if len(parts) != 5:
        raise argparse.ArgumentTypeError("expected 5 comma-separated weights")
    try:
        return complexity.ComplexityWeights(*[float(p) for p in parts])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _collect_images(inputs: list[str]) -> list[tuple[str, Path]]:
    """Expand files and directories into (display name, path) pairs."""
    found: list[tuple[str, Path]] = []
    for item in inputs:
        p = Path(item)
        if p.is_dir():
            files = sorted(
                f for f in p.rglob("*")
                if f.is_file() and f.suffix.lower() in IMAGE_EXTENSIONS
            )
            found.extend((f.relative_to(p).as_posix(), f) for f in files)
        else:
            found.append((item, p))
    return found


def _add_weight_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--weights",
        type=_parse_weights,
        default=complexity.DEFAULT_WEIGHTS,
        help="five comma-separated feature weights (default 0.30,0.25,0.20,0.15,0.10)",
    )
    p.add_argument("--quality", type=int, default=codec.DEFAULT_QUALITY,
                   help="lossy-cycle quality for the residual feature (default 50)")


def cmd_score(args) -> int:
    images = _collect_images(args.inputs)
    if not images:
        print("error: no images found", file=sys.stderr)
        return EXIT_INPUT
    out = open(args.out, "w", encoding="ascii") if args.out else sys.stdout
    failed = False
    try:
        print(complexity.CSV_HEADER, file=out)
        for name, path in images:
            try:
                img = load_grayscale(path)
            except (FileNotFoundError, SceneRouteError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                failed = True
                continue
            score = complexity.complexity_score(img, args.weights, args.quality)
            print(complexity.csv_row(name, score), file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_INPUT if failed else EXIT_OK


def _read_logits_csv(path: Path) -> dict[str, tuple[float, float]]:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["path", "l0", "l1"]:
            raise SceneRouteError(f"logit file {path} must start with 'path,l0,l1'")
        return {row[0]: (float(row[1]), float(row[2])) for row in reader if row}


def cmd_calibrate(args) -> int:
    dataset = simharness.load_dataset(args.heldout)
    edge_logits = _read_logits_csv(Path(args.edge_logits))
    cloud_logits = _read_logits_csv(Path(args.cloud_logits))
    records = []
    for rel_path, truth in dataset.samples:
        if rel_path not in edge_logits:
            raise SceneRouteError(f"no edge logits for {rel_path} in {args.edge_logits}")
        if rel_path not in cloud_logits:
            raise SceneRouteError(f"no cloud logits for {rel_path} in {args.cloud_logits}")
        img = load_grayscale(dataset.absolute(rel_path))
        s_c = complexity.complexity_score(img, args.weights, args.quality).s_c
        records.append(
            calibration.CalibrationRecord(
                s_c=s_c,
                edge_logits=edge_logits[rel_path],
                cloud_logits=cloud_logits[rel_path],
                label=1 if truth == quantkernel.Label.DEFECT else 0,
            )
        )
    policy = calibration.calibrate_policy(records, args.rho)
    calibration.save_policy(policy, args.policy)
    print(f"tau_S={policy.tau_s_complexity:.6f}")
    print(f"T_edge={policy.temperature_edge:.6f}")
    print(f"T_cloud={policy.temperature_cloud:.6f}")
    print(f"policy written to {args.policy}")
    return EXIT_OK


def cmd_route(args) -> int:
    policy = calibration.load_policy(args.policy)
    images = _collect_images(args.inputs)
    if not images:
        print("error: no images found", file=sys.stderr)
        return EXIT_INPUT
    logits = _read_logits_csv(Path(args.edge_logits)) if args.edge_logits else {}
    out = open(args.out, "w", encoding="ascii") if args.out else sys.stdout
    failed = False
    try:
        print("path,s_c,site,reason", file=out)
        for name, path in images:
            try:
                img = load_grayscale(path)
            except (FileNotFoundError, SceneRouteError) as exc:
                print(f"error: {exc}", file=sys.stderr)
                failed = True
                continue
            s_c = complexity.complexity_score(img, args.weights, args.quality).s_c
            conf = None
            if name in logits:
                l0, l1 = logits[name]
                conf = EdgeConfidence.from_logits(l0, l1, policy.temperature_edge)
            if s_c < policy.tau_s_complexity and conf is None:
                print(f"error: no edge logits for {name}", file=sys.stderr)
                failed = True
                continue
            site, reason = route_sample(s_c, conf, policy)
            print(f"{name},{s_c:.6f},{site.value},{reason.value}", file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_INPUT if failed else EXIT_OK


def cmd_simulate(args) -> int:
    cfg_path = Path(args.config)
    if not cfg_path.is_file():
        print(f"error: no such config file: {cfg_path}", file=sys.stderr)
        return EXIT_INPUT
    try:
        payload = json.loads(cfg_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        print(f"error: config is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.mode is not None:
        payload = dict(payload)
        payload["mode"] = args.mode
    config = simharness.parse_experiment_config(payload, seed_override=args.seed)

    dataset = simharness.load_dataset(config.dataset_root)
    policy = calibration.load_policy(config.policy_path)
    result = simharness.run_experiment(
        dataset,
        policy,
        config.edge_stub,
        config.cloud_stub,
        config.cost_model,
        config.weights,
        config.quality,
        config.mode,
    )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    echo = dict(config.raw)
    echo["seed"] = config.seed
    (out_dir / "report.json").write_bytes(
        simharness.emit_report(result.report, "json", config_echo=echo)
    )
    (out_dir / "trace.csv").write_bytes(simharness.trace_to_csv(result.trace))
    if result.defects:
        (out_dir / "defects.jsonl").write_bytes(
            simharness.defects_to_jsonl(result.defects)
        )

    r = result.report
    print(f"mode={config.mode} n={r.n_samples}")
    print(f"accuracy={r.accuracy:.6f}")
    print(f"total_time_s={r.total_time_s:.6f} avg_time_per_image_s={r.avg_time_per_image_s:.6f}")
    print(f"cloud_fraction={r.cloud_fraction:.6f}")
    print(f"total_energy_mwh={r.total_energy_mwh:.6f} energy_per_correct_mwh={r.energy_per_correct_mwh:.6f}")
    print(f"outputs in {out_dir}")
    return EXIT_OK


def cmd_quant(args) -> int:
    path = Path(args.matrix)
    if not path.is_file():
        print(f"error: no such matrix file: {path}", file=sys.stderr)
        return EXIT_INPUT
    try:
        rows = []
        with open(path, newline="", encoding="ascii") as fh:
            for row in csv.reader(fh):
                if row:
                    rows.append([float(v) for v in row])
        matrix = np.array(rows, dtype=np.float64)
        if matrix.ndim != 2 or matrix.size == 0:
            raise ValueError("matrix must be a nonempty rectangle of numbers")
    except ValueError as exc:
        print(f"error: cannot parse matrix {path}: {exc}", file=sys.stderr)
        return EXIT_INPUT

    qt = quantkernel.quantize(matrix, args.group_size)
    recon = quantkernel.dequantize(qt)
    err = np.abs(matrix - recon)
    for i, grp in enumerate(qt.groups()):
        print(f"group {i}: mu={grp.mu:.6f} sigma={grp.sigma:.6f}")
    print(f"max_error={err.max():.12e}")
    print(f"rms_error={math.sqrt(float((err ** 2).mean())):.12e}")
    if args.out:
        quantkernel.save_quantized(qt, args.out)
        print(f"quantized tensor written to {args.out}")
    return EXIT_OK


def cmd_codec_roundtrip(args) -> int:
    img = load_grayscale(args.input)
    recon = codec.lossy_cycle(img, args.quality)
    save_pgm(recon, args.output)
    diff = np.abs(
        img.pixels.astype(np.float64) - recon.pixels.astype(np.float64)
    )
    print(f"mean_abs_residual={diff.mean():.6f}")
    print(f"reconstruction written to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sceneroute",
        description="Scene-complexity scoring and budgeted edge-cloud routing tools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="complexity CSV for images or directories")
    p.add_argument("inputs", nargs="+", help="image files or directories")
    _add_weight_args(p)
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("calibrate", help="fit a routing policy on a held-out split")
    p.add_argument("heldout", help="held-out dataset root with good/ and defect/")
    p.add_argument("--edge-logits", required=True, help="CSV path,l0,l1 for the edge head")
    p.add_argument("--cloud-logits", required=True, help="CSV path,l0,l1 for the cloud head")
    p.add_argument("--rho", type=float, required=True, help="cloud budget fraction in [0, 1]")
    p.add_argument("--policy", required=True, help="output policy JSON path")
    _add_weight_args(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("route", help="routing decisions for images under a policy")
    p.add_argument("inputs", nargs="+", help="image files or directories")
    p.add_argument("--policy", required=True, help="policy JSON from calibrate")
    p.add_argument("--edge-logits", help="CSV path,l0,l1 for sub-threshold samples")
    _add_weight_args(p)
    p.add_argument("--out", help="write decisions here instead of stdout")
    p.set_defaults(func=cmd_route)

    p = sub.add_parser("simulate", help="run an experiment from a config JSON")
    p.add_argument("config", help="experiment config JSON")
    p.add_argument("--out", default=".", help="output directory (default .)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument(
        "--mode",
        choices=simharness.MODES,
        help="override the config mode",
    )
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("quant", help="quantization demo on a CSV matrix")
    p.add_argument("matrix", help="CSV file of floats")
    p.add_argument("--group-size", type=int, default=quantkernel.DEFAULT_GROUP_SIZE)
    p.add_argument("--out", help="write the serialized quantized tensor here")
    p.set_defaults(func=cmd_quant)

    p = sub.add_parser("codec", help="lossy-cycle debugging")
    codec_sub = p.add_subparsers(dest="codec_command", required=True)
    rt = codec_sub.add_parser("roundtrip", help="run the cycle on one image")
    rt.add_argument("input", help="input image")
    rt.add_argument("output", help="output PGM path")
    rt.add_argument("--quality", type=int, default=codec.DEFAULT_QUALITY)
    rt.set_defaults(func=cmd_codec_roundtrip)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigSchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateLabelsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (FileNotFoundError, SceneRouteError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
