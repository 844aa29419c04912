"""Bayesian hyperparameter search for one optimizer family.

Runs Sobol-seeded Gaussian-process search (expected improvement) over the
family's box: learning rate on a log scale, decay coefficients linear.
Quick mode uses a synthetic task; full mode expects idx files under
$OPTEVO_DATA_DIR.
"""

import argparse
import json
import sys
from pathlib import Path

from optevo.cli import main as cli_main
from optevo.hyperopt import FAMILY_SPACES


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
            "max_epochs": 20,
            "early_stop": False,
        }
    else:
        task = {
            "dataset": {"kind": "two_gaussians", "n": 1500, "noise": 0.1, "seed": 1},
            "split": {
                "train_total": 900,
                "per_trial": 900,
                "trial_count": 1,
                "validation": 300,
                "test": 300,
            },
            "layer_sizes": [2, 16, 2],
            "batch_size": 300,
            "max_epochs": 8,
            "early_stop": False,
        }
    return {
        "seed": args.seed,
        "optimizer": args.optimizer,
        "budget": args.budget,
        "random_search": args.random_search,
        "task": task,
        "out": args.out,
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--optimizer", choices=sorted(FAMILY_SPACES), default="adam")
    ap.add_argument("--budget", type=int, default=25)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--random-search", action="store_true",
                    help="skip the surrogate model and sample uniformly")
    ap.add_argument("--out", default="runs/tune")
    ap.add_argument("--full", action="store_true",
                    help="run at dataset scale instead of the synthetic smoke task")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(build_config(args), indent=2), encoding="utf-8")
    print(f"config: {cfg_path}")

    return cli_main(["tune", str(cfg_path)])


if __name__ == "__main__":
    sys.exit(main())
