"""Evolve weight-update rules end to end.

Quick mode (default) runs on a synthetic blob task in a couple of minutes and
is the fastest way to watch the whole loop work. Full mode expects the
four standard idx files (train/t10k images+labels) under $OPTEVO_DATA_DIR and
uses the published data plan: 53k-example training pool cut into five
disjoint 10.6k trials, 3.5k validation, 3.5k test.
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
                "train_total": 53_000,
                "per_trial": 10_600,
                "trial_count": 5,
                "validation": 3_500,
                "test": 3_500,
            },
            "layer_sizes": [784, 100, 10],
            "batch_size": 1000,
            "max_epochs": 100,
            "early_stop": True,
            "patience": 5,
        }
        evo = {"population": 20, "generations": args.generations or 1500}
        trials = 5
    else:
        task = {
            "dataset": {"kind": "two_gaussians", "n": 2000, "noise": 0.1, "seed": 1},
            "split": {
                "train_total": 1200,
                "per_trial": 240,
                "trial_count": 5,
                "validation": 400,
                "test": 400,
            },
            "layer_sizes": [2, 16, 2],
            "batch_size": 200,
            "max_epochs": 10,
            "early_stop": False,
        }
        evo = {"population": 20, "generations": args.generations or 30}
        trials = 5
    return {
        "seed": args.seed,
        "evo": evo,
        "grammar": "alr",
        "trials": trials,
        "threshold": 0.8,
        "task": task,
        "out": args.out,
    }


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--generations", type=int, default=None)
    ap.add_argument("--out", default="runs/evolve_alr")
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--full", action="store_true",
                    help="run at dataset scale instead of the synthetic smoke task")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(build_config(args), indent=2), encoding="utf-8")
    print(f"config: {cfg_path}")

    argv = ["evolve", str(cfg_path)]
    if args.workers is not None:
        argv += ["--workers", str(args.workers)]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
