"""Head-to-head optimizer comparison with repeated training runs.

Compares the two evolved update rules (ades, sign) against the standard
baselines under one of three preset regimes:

  I    100 epochs, early stopping on validation loss
  II    20 epochs, no early stopping
  III  100 epochs, no early stopping

Quick mode uses a synthetic task; full mode expects idx files under
$OPTEVO_DATA_DIR. Emits a per-repetition CSV and an aligned summary table
with mean ± std validation/test accuracy and the generalization rate.
"""

import argparse
import json
import sys
from pathlib import Path

from optevo.cli import main as cli_main

DEFAULT_LINEUP = ["sgd", "momentum", "nesterov", "rmsprop", "adam", "ades", "sign"]


def build_config(args) -> dict:
    if args.full:
        task = {
            "dataset": {
                "kind": "idx",
                "images": "train-images-idx3-ubyte",
                "labels": "train-labels-idx1-ubyte",
                "name": "fashion",
            },
            "split": {
                "train_total": 5_000,
                "per_trial": 5_000,
                "trial_count": 1,
                "validation": 1_000,
                "test": 1_000,
            },
            "layer_sizes": [784, 64, 10],
            "batch_size": 1000,
        }
    else:
        task = {
            "dataset": {"kind": "xor_blobs", "n": 2000, "noise": 0.08, "seed": 1},
            "split": {
                "train_total": 1200,
                "per_trial": 1200,
                "trial_count": 1,
                "validation": 400,
                "test": 400,
            },
            "layer_sizes": [2, 16, 2],
            "batch_size": 200,
        }
    steppers = list(args.optimizers) if args.optimizers else list(DEFAULT_LINEUP)
    for spec_file in args.spec_file or []:
        steppers.append({"spec_file": spec_file})
    return {
        "seed": args.seed,
        "name": f"scenario_{args.preset}",
        "preset": args.preset,
        "repetitions": args.repetitions,
        "steppers": steppers,
        "task": task,
        "out": args.out,
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--preset", choices=["I", "II", "III"], default="II")
    ap.add_argument("--repetitions", type=int, default=5)
    ap.add_argument("--optimizers", nargs="*", default=None,
                    help=f"names to compare (default: {' '.join(DEFAULT_LINEUP)})")
    ap.add_argument("--spec-file", action="append",
                    help="add an evolved optimizer from a best_spec.json")
    ap.add_argument("--out", default="runs/benchmark")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--full", action="store_true",
                    help="run at dataset scale instead of the synthetic smoke task")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(build_config(args), indent=2), encoding="utf-8")
    print(f"config: {cfg_path}")

    argv = ["benchmark", str(cfg_path)]
    if args.workers is not None:
        argv += ["--workers", str(args.workers)]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
