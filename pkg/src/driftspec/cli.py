"""Command line entry point: ``driftspec <exact|sweep|cluster|refine|noise-study>``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .clustering import ClusterReport
from .config import PipelineConfig, load_config
from .errors import DriftSpecError
from . import pipeline


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML pipeline config (defaults are used when omitted)")
    common.add_argument("--seed", type=int, help="override run.base_seed")
    common.add_argument("--out", type=Path, help="override run.out_dir")
    common.add_argument("--step", type=float, help="override grid.step")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="driftspec", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("exact", parents=[common], help="dense spectrum and drift intervals -> spectrum.csv")
    p = sub.add_parser("sweep", parents=[common], help="VITE over the drift grid -> records_XX.csv")
    p.add_argument("--warm-start", type=Path, metavar="REPORT",
                   help="start each drift value from the nearest cluster median of a previous report")
    p = sub.add_parser("cluster", parents=[common], help="cluster records -> report.json, boxplot.csv")
    p.add_argument("records", nargs="*", type=Path, help="records files (default: out_dir/records_*.csv)")
    p = sub.add_parser("refine", parents=[common], help="refine cluster medians -> refined.csv")
    p.add_argument("--report", type=Path, help="cluster report (default: out_dir/report.json)")
    sub.add_parser("noise-study", parents=[common], help="error against two-qubit noise + trend test")
    return ap


def _resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = cfg.replace("run", base_seed=args.seed)
    if args.out is not None:
        cfg = cfg.replace("run", out_dir=str(args.out))
    if args.step is not None:
        cfg = cfg.replace("grid", step=args.step)
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve_config(args)
        out_dir = Path(cfg.run.out_dir)
        if args.command == "exact":
            rows = pipeline.run_exact(cfg, out_dir / "spectrum.csv")
            print(f"{len(rows)} eigenvalues -> {out_dir / 'spectrum.csv'}")
        elif args.command == "sweep":
            theta0 = None
            if args.warm_start:
                prior = ClusterReport.from_json(args.warm_start.read_text())
                ham = pipeline.build_hamiltonian(cfg)
                eig = pipeline.spectrum(ham) if cfg.grid.start is None or cfg.grid.stop is None else None
                theta0 = pipeline.warm_start_angles(prior, pipeline.drift_grid(cfg, eig))
            results = pipeline.run_sweep(cfg, out_dir, theta0)
            for j, res in enumerate(results):
                print(f"init {j}: seed {res.sweep_seed}, {len(res.records)} records, {len(res.skipped)} skipped")
        elif args.command == "cluster":
            paths = args.records or sorted(out_dir.glob("records_*.csv"))
            if not paths:
                raise DriftSpecError(f"no records files found in {out_dir}")
            report, best = pipeline.run_cluster(pipeline.load_record_sets(paths), cfg, out_dir)
            print(f"k={report.k} silhouette={report.mean_silhouette:.3f} hopkins={report.hopkins_mean:.3f} "
                  f"(from {paths[best]})")
            for c in report.clusters:
                print(f"  cluster {c.cluster_id}: median s = {c.median_s:.4f}, {len(c.members)} members")
            for w in report.warnings:
                print(f"  warning: {w}")
        elif args.command == "refine":
            report_path = args.report or out_dir / "report.json"
            report = ClusterReport.from_json(report_path.read_text())
            rows = pipeline.run_refine(report, cfg, out_dir / "refined.csv")
            for r in rows:
                print(f"  cluster {r.cluster}: {r.eigenvalue:.10f} in {r.iterations} its "
                      f"(uniform start: {r.baseline_iterations})")
        elif args.command == "noise-study":
            res = pipeline.run_noise_study(cfg, out_dir)
            for row in res.rows():
                print(f"  p2={row['p2']:.3f} step={row['step']:2d} k={row['k']:2d} error={row['mean_error']:.4f}")
            verdict = "no significant trend" if res.robust else "significant trend"
            print(f"Mann-Kendall at step {res.final_step}: p={res.trend_p.get(res.final_step, float('nan')):.3f} "
                  f"({verdict})")
    except (DriftSpecError, OSError, ValueError) as exc:
        print(f"driftspec: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
