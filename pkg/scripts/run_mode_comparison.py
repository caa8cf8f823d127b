#!/usr/bin/env python3
"""End-to-end comparison of hybrid, edge-only, and cloud-only execution.

Builds a synthetic corpus plus a disjoint held-out split, calibrates a
routing policy at the requested budget, runs all three modes (and a rho=1
no-routing ablation), and prints one summary row per run. Everything is
seeded, so two invocations with the same arguments print identical numbers.

Usage:
    python3 scripts/run_mode_comparison.py --workdir /tmp/sceneroute-exp --n 500
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sceneroute.calibration import CalibrationRecord, calibrate_policy
from sceneroute.complexity import complexity_score
from sceneroute.imgproc import load_grayscale
from sceneroute.quantkernel import Label
from sceneroute.scheduler import CostModel, Site
from sceneroute.simharness import StubModelSpec, load_dataset, run_experiment, stub_predict
from sceneroute.synthetic import generate_synthetic_corpus

COST = CostModel(
    t_cpx_per_image=0.002,
    t_edge_per_image=0.05,
    t_cloud_per_image=0.2,
    p_edge_w=15.0,
    p_cloud_w=300.0,
)
KNEE = 1.0


def calibration_records(root, edge, cloud):
    ds = load_dataset(root)
    records = []
    for rel, truth in ds.samples:
        s_c = complexity_score(load_grayscale(ds.absolute(rel))).s_c
        pe = stub_predict(edge, (rel, truth), s_c, COST)
        pc = stub_predict(cloud, (rel, truth), s_c, COST)
        records.append(
            CalibrationRecord(
                s_c=s_c,
                edge_logits=pe.logits,
                cloud_logits=pc.logits,
                label=1 if truth is Label.DEFECT else 0,
            )
        )
    return records


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="mode_comparison_out")
    parser.add_argument("--n", type=int, default=500, help="eval images per class")
    parser.add_argument("--rho", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=20240)
    args = parser.parse_args()

    work = Path(args.workdir)
    eval_root = generate_synthetic_corpus(work / "eval", args.n, seed=args.seed + 1)
    held_root = generate_synthetic_corpus(work / "held", max(args.n // 5, 20), seed=args.seed + 2)

    edge = StubModelSpec(
        role=Site.EDGE,
        acc_low_complexity=0.60,
        acc_high_complexity=0.40,
        complexity_knee=KNEE,
        confidence_sharpness=4.0,
        seed=args.seed,
    )
    cloud = StubModelSpec(
        role=Site.CLOUD,
        acc_low_complexity=0.90,
        acc_high_complexity=0.90,
        complexity_knee=KNEE,
        confidence_sharpness=4.0,
        seed=args.seed,
    )

    records = calibration_records(held_root, edge, cloud)
    policy = calibrate_policy(records, rho=args.rho)
    policy_rho1 = calibrate_policy(records, rho=1.0)
    print(
        f"policy: tau_S={policy.tau_s_complexity:.4f} tau_s={policy.tau_conf:.2f} "
        f"tau_m={policy.tau_margin:.2f} tau_h={policy.tau_entropy:.2f} "
        f"tau={policy.tau_cloud:.2f} T_edge={policy.temperature_edge:.3f} "
        f"T_cloud={policy.temperature_cloud:.3f}"
    )

    dataset = load_dataset(eval_root)
    runs = [
        ("hybrid", policy, "hybrid"),
        ("edge_only", policy, "edge_only"),
        ("cloud_only", policy, "cloud_only"),
        ("no_routing (rho=1)", policy_rho1, "hybrid"),
    ]
    header = f"{'run':<20}{'accuracy':>10}{'T_total_s':>12}{'cloud_frac':>12}{'energy_mwh':>12}{'mwh/correct':>13}"
    print(header)
    print("-" * len(header))
    for name, pol, mode in runs:
        r = run_experiment(dataset, pol, edge, cloud, COST, mode=mode).report
        print(
            f"{name:<20}{r.accuracy:>10.4f}{r.total_time_s:>12.2f}"
            f"{r.cloud_fraction:>12.3f}{r.total_energy_mwh:>12.1f}"
            f"{r.energy_per_correct_mwh:>13.3f}"
        )
    return 0


if __name__ == "__main__":
    sys.exit(main())
