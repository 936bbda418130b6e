"""Mean error of the lowest four estimates against chain length (c0_hat, one layer).

    python scripts/scaling_table.py --sizes 4 6 8
"""
import argparse
import time
from pathlib import Path

from driftspec import pipeline
from driftspec.config import load_config
from driftspec.ite import spectrum

DEFAULT_CONFIG = Path(__file__).parent / "configs" / "heisenberg4.toml"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=DEFAULT_CONFIG)
    ap.add_argument("--sizes", type=int, nargs="+", default=[4, 6, 8])
    ap.add_argument("--family", default="c0_hat")
    args = ap.parse_args()

    base = load_config(args.config)
    print(f"{'n':>3} {'params':>6} {'grid':>5} {'k':>3} {'error':>7} {'time':>6}")
    for n in args.sizes:
        start = time.perf_counter()
        cfg = base.replace("hamiltonian", n=n).replace("ansatz", family=args.family)
        cfg = cfg.replace("vite", record_at=(cfg.vite.steps,))
        ham = pipeline.build_hamiltonian(cfg)
        eig = spectrum(ham)
        grid = pipeline.drift_grid(cfg, eig)
        sweeps = pipeline.run_sweep(cfg)
        report, _ = pipeline.run_cluster([s.records for s in sweeps], cfg)
        score = pipeline.score_report(report, eig.eigenvalues, (grid[0], grid[-1]))
        n_params = pipeline.build_circuit(cfg, n).n_params
        print(f"{n:>3} {n_params:>6} {len(grid):>5} {report.k:>3} {score.mean_error:>7.3f} "
              f"{time.perf_counter() - start:>5.0f}s")


if __name__ == "__main__":
    main()
