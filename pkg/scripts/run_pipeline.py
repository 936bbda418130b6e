"""Run exact -> sweep -> cluster -> refine for one config and print a short summary.

    python scripts/run_pipeline.py scripts/configs/heisenberg4.toml
"""
import argparse
import time
from pathlib import Path

from driftspec import pipeline
from driftspec.config import load_config
from driftspec.ite import spectrum


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config", type=Path)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    cfg = load_config(args.config)
    out = args.out or Path(cfg.run.out_dir)
    start = time.perf_counter()
    pipeline.run_exact(cfg, out / "spectrum.csv")
    sweeps = pipeline.run_sweep(cfg, out)
    report, best = pipeline.run_cluster([s.records for s in sweeps], cfg, out)
    rows = pipeline.run_refine(report, cfg, out / "refined.csv")

    ham = pipeline.build_hamiltonian(cfg)
    eig = spectrum(ham)
    grid = pipeline.drift_grid(cfg, eig)
    score = pipeline.score_report(report, eig.eigenvalues, (grid[0], grid[-1]))
    print(f"{len(grid)} drift values, {cfg.run.inits} initial draws, kept draw {best}")
    print(f"k={report.k}  silhouette={report.mean_silhouette:.3f}  "
          f"Hopkins={report.hopkins_mean:.3f} (p={report.hopkins_p:.3g})")
    print(f"medians inside their drift interval: {int(score.inside.sum())}/{report.k}")
    print("lowest-level errors:", " ".join(f"{e:.3f}" for e in score.level_errors),
          f"(mean {score.mean_error:.3f})")
    for r in rows:
        print(f"  cluster {r.cluster}: s={r.s:+.3f} -> {r.eigenvalue:+.10f}  "
              f"iterations to 1e-8: warm {r.iters_to_target}, uniform {r.baseline_iters_to_target}")
    print(f"outputs in {out} ({time.perf_counter() - start:.0f}s)")


if __name__ == "__main__":
    main()
