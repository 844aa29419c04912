"""Evolve learning-rate schedules (if/else trees over epoch and current lr).

Candidates drive a plain SGD stepper whose rate is re-decided every epoch.
Quick mode uses a synthetic task; full mode expects idx files under
$OPTEVO_DATA_DIR and uses a single 7k training block with 1.5k validation
and 1.5k test examples.
"""

import argparse
import json
import sys
from pathlib import Path

from optevo.cli import main as cli_main


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
                "train_total": 7_000,
                "per_trial": 7_000,
                "trial_count": 1,
                "validation": 1_500,
                "test": 1_500,
            },
            "layer_sizes": [784, 100, 10],
            "batch_size": 1000,
            "max_epochs": 100,
            "early_stop": True,
            "patience": 5,
            "initial_lr": 0.01,
        }
        generations = args.generations or 1500
    else:
        task = {
            "dataset": {"kind": "spiral", "n": 1500, "noise": 0.05, "seed": 1},
            "split": {
                "train_total": 900,
                "per_trial": 900,
                "trial_count": 1,
                "validation": 300,
                "test": 300,
            },
            "layer_sizes": [2, 24, 2],
            "batch_size": 300,
            "max_epochs": 15,
            "early_stop": False,
            "initial_lr": 0.01,
        }
        generations = args.generations or 30
    return {
        "seed": args.seed,
        "evo": {"population": 20, "generations": generations},
        "grammar": "dlr",
        "task": task,
        "out": args.out,
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--generations", type=int, default=None)
    ap.add_argument("--out", default="runs/evolve_dlr")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--full", action="store_true",
                    help="run at dataset scale instead of the synthetic smoke task")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(build_config(args), indent=2), encoding="utf-8")
    print(f"config: {cfg_path}")

    argv = ["dlr-evolve", str(cfg_path)]
    if args.workers is not None:
        argv += ["--workers", str(args.workers)]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
