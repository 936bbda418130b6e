"""Error against two-qubit depolarizing strength, per recorded VITE step, with a trend test.

    python scripts/noise_table.py --seed 0
"""
import argparse
from pathlib import Path

import numpy as np

from driftspec import pipeline
from driftspec.config import load_config

DEFAULT_CONFIG = Path(__file__).parent / "configs" / "heisenberg4.toml"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=DEFAULT_CONFIG)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--family", help="override the ansatz family, e.g. c1")
    args = ap.parse_args()

    cfg = load_config(args.config)
    if args.family:
        cfg = cfg.replace("ansatz", family=args.family)
    study = pipeline.noise_study(cfg, sweep_seed=args.seed)
    print("p2     " + "".join(f"step {s:<4}" for s in study.steps))
    for p2, errs, ks in zip(study.p2_levels, study.errors, study.cluster_counts):
        cells = "".join("   -     " if np.isnan(e) else f"{e:.3f}({k:>2})" for e, k in zip(errs, ks))
        print(f"{p2:<6.3f} {cells}")
    for step in study.steps:
        if step in study.trend_p:
            print(f"step {step}: Kendall tau {study.trend_tau[step]:+.2f}, p={study.trend_p[step]:.3f}")
    print("no significant trend at the final step" if study.robust else "significant trend at the final step")


if __name__ == "__main__":
    main()
