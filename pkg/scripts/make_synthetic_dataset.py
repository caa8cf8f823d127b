#!/usr/bin/env python3
"""Generate a synthetic good/defect PGM corpus for experiments.

Usage:
    python3 scripts/make_synthetic_dataset.py OUT_DIR --n-per-class 500 --seed 101
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from sceneroute.synthetic import generate_synthetic_corpus


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", help="target directory (good/ and defect/ created)")
    parser.add_argument("--n-per-class", type=int, default=500)
    parser.add_argument("--seed", type=int, default=101)
    parser.add_argument("--size", type=int, default=64, help="image side length")
    args = parser.parse_args()

    root = generate_synthetic_corpus(args.out_dir, args.n_per_class, args.seed, args.size)
    print(f"wrote {2 * args.n_per_class} images under {root}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
