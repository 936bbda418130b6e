"""Share of the Fisher score carried by each rotation type after clustering a sweep.

    python scripts/fisher_contributions.py --n 6 --family c0
"""
import argparse
from collections import defaultdict
from pathlib import Path

from driftspec import pipeline
from driftspec.clustering import embed_angles
from driftspec.config import load_config
from driftspec.stats import fisher_score

DEFAULT_CONFIG = Path(__file__).parent / "configs" / "heisenberg4.toml"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=DEFAULT_CONFIG)
    ap.add_argument("--n", type=int, default=6)
    ap.add_argument("--family", default="c0")
    args = ap.parse_args()

    cfg = load_config(args.config).replace("hamiltonian", n=args.n).replace("ansatz", family=args.family)
    sweeps = pipeline.run_sweep(cfg)
    report, best = pipeline.run_cluster([s.records for s in sweeps], cfg)
    records = pipeline.snapshot(sweeps[best].records, cfg.clustering.snapshot_step)
    circuit = pipeline.build_circuit(cfg, args.n)

    # classes with a single member carry no within-class spread; drop them
    sizes = defaultdict(int)
    for label in report.assignment:
        sizes[label] += 1
    keep = [i for i, label in enumerate(report.assignment) if sizes[label] >= 2]
    data = embed_angles([records[i] for i in keep])
    scores = fisher_score(data.points, [report.assignment[i] for i in keep])
    fractions = scores.slot_fractions(circuit.n_params)

    by_kind = defaultdict(float)
    for gate in circuit.gates:
        if gate.slot is not None:
            by_kind[gate.kind] += fractions[gate.slot]
    print(f"n={args.n} {args.family}: k={report.k}, {len(keep)} records in classes of size >= 2")
    for kind, share in sorted(by_kind.items()):
        print(f"  {kind:<4} {share:6.1%}")
    if scores.infinite.any():
        print(f"  ({int(scores.infinite.sum())} features separate the classes perfectly and are left out)")


if __name__ == "__main__":
    main()
