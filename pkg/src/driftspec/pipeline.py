"""End-to-end stages: exact spectrum, drift sweep, clustering, refinement, noise study."""
from __future__ import annotations

import csv
import io
import json
import logging
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import ClusterReport, boxplot_rows, embed_angles, select_k_and_cluster
from .config import PipelineConfig, derive_seed, initial_angles
from .errors import DriftSpecError, SingularShift
from .hamiltonian import PauliSumHamiltonian, build_heisenberg_1d, load_hamiltonian
from .ite import (ParameterRecord, VITEConfig, distinct_levels, nearest_eigenvalue, records_from_csv,
                  records_to_csv, spectrum, vite_run)
from .numerics import EigenDecomposition
from .refine import inverse_power_iterate, polynomial_inverse_power, reconstruct_state_from_params
from .simulator import AnsatzCircuit, NoiseModel, build_ansatz, uniform_state
from .stats import mann_kendall

log = logging.getLogger(__name__)

N_SCORED_LEVELS = 4
SHIFT_NUDGE = 1e-7


# ---------------------------------------------------------------------------
# building blocks

def build_hamiltonian(cfg: PipelineConfig) -> PauliSumHamiltonian:
    hc = cfg.hamiltonian
    if hc.file:
        return load_hamiltonian(hc.file)
    return build_heisenberg_1d(hc.n, hc.jx, hc.jy, hc.jz, hc.h, field_on_all_sites=hc.field_on_all_sites)


def build_circuit(cfg: PipelineConfig, n_qubits: int) -> AnsatzCircuit:
    return build_ansatz(cfg.ansatz.family, n_qubits, cfg.ansatz.layers)


def vite_config(cfg: PipelineConfig) -> VITEConfig:
    v = cfg.vite
    return VITEConfig(dt=v.dt, steps=v.steps, lambda_reg=v.lambda_reg, record_at=tuple(v.record_at),
                      max_angle_step=v.max_angle_step)


def drift_grid(cfg: PipelineConfig, eig: EigenDecomposition | None) -> np.ndarray:
    g = cfg.grid
    if (g.start is None or g.stop is None) and eig is None:
        raise ValueError("grid bounds are required when the spectrum is not available")
    lam = eig.eigenvalues if eig is not None else (None, None)
    return g.points(lam[0], lam[-1])


@dataclass(frozen=True)
class LevelIntervals:
    """Drift ranges mapping to each distinct eigenvalue, clipped to the sweep window."""

    levels: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_levels(cls, levels, window: tuple[float, float]) -> "LevelIntervals":
        levels = np.asarray(levels, dtype=float)
        mids = 0.5 * (levels[1:] + levels[:-1])
        lower = np.concatenate([[min(window[0], levels[0])], mids])
        upper = np.concatenate([mids, [max(window[1], levels[-1])]])
        return cls(levels, lower, upper)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def level_of(self, s: float) -> int:
        return nearest_eigenvalue(self.levels, s).index


# ---------------------------------------------------------------------------
# exact

def spectrum_rows(eig: EigenDecomposition, window: tuple[float, float]) -> list[dict]:
    iv = LevelIntervals.from_levels(distinct_levels(eig.eigenvalues), window)
    rows = []
    for i, lam in enumerate(eig.eigenvalues):
        j = iv.level_of(lam)
        rows.append({"index": i, "eigenvalue": float(lam), "level": j, "interval_lo": float(iv.lower[j]),
                     "interval_hi": float(iv.upper[j]), "theoretical_median": float(iv.centers[j])})
    return rows


def run_exact(cfg: PipelineConfig, out: Path | None = None) -> list[dict]:
    ham = build_hamiltonian(cfg)
    eig = spectrum(ham)
    grid = drift_grid(cfg, eig)
    rows = spectrum_rows(eig, (grid[0], grid[-1]))
    if out is not None:
        _write_csv(out, rows, cfg.manifest_hash())
    return rows


# ---------------------------------------------------------------------------
# sweep

@dataclass
class SweepResult:
    records: list[ParameterRecord]
    grid: np.ndarray
    sweep_seed: int
    theta0: np.ndarray
    skipped: list[tuple[float, str]] = field(default_factory=list)


def _sweep_point(args):
    ham, s, circuit, theta0, vcfg, noise, seed = args
    try:
        return vite_run(ham, s, circuit, theta0, vcfg, noise, seed), None
    except (DriftSpecError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def sweep(ham: PauliSumHamiltonian, circuit: AnsatzCircuit, grid, vcfg: VITEConfig, sweep_seed: int,
          noise: NoiseModel | None = None, theta0=None, workers: int = 1) -> SweepResult:
    """One VITE run per drift value.

    ``theta0`` is either one angle vector shared by every point (drawn from
    ``sweep_seed`` when omitted) or a (len(grid), n_params) array of per-point
    starts, as produced by :func:`warm_start_angles`.
    """
    grid = np.asarray(grid, dtype=float)
    theta0 = initial_angles(sweep_seed, circuit.n_params) if theta0 is None else np.asarray(theta0, dtype=float)
    starts = theta0 if theta0.ndim == 2 else np.broadcast_to(theta0, (len(grid), theta0.size))
    if starts.shape != (len(grid), circuit.n_params):
        raise ValueError(f"initial angles have shape {theta0.shape}, expected ({circuit.n_params},) "
                         f"or ({len(grid)}, {circuit.n_params})")
    jobs = [(ham, float(s), circuit, starts[i], vcfg, noise, derive_seed(sweep_seed, i))
            for i, s in enumerate(grid)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_sweep_point, jobs))
    else:
        outcomes = [_sweep_point(j) for j in jobs]
    records, skipped = [], []
    for s, (recs, err) in zip(grid, outcomes):
        if err is None:
            records.extend(recs)
        else:
            log.warning("drift %.6g skipped: %s", s, err)
            skipped.append((float(s), err))
    records.sort(key=lambda r: (r.step, r.s))
    return SweepResult(records, grid, sweep_seed, theta0, skipped)


def warm_start_angles(report: ClusterReport, grid) -> np.ndarray:
    """Per grid point, the median angles of the cluster whose median s is closest."""
    medians = np.array([c.median_s for c in report.clusters])
    thetas = np.array([c.median_theta for c in report.clusters])
    return np.array([thetas[np.argmin(np.abs(medians - s))] for s in np.asarray(grid, dtype=float)])


def sweep_seeds(cfg: PipelineConfig) -> list[int]:
    return [cfg.run.base_seed + j for j in range(cfg.run.inits)]


def run_sweep(cfg: PipelineConfig, out_dir: Path | None = None, theta0=None) -> list[SweepResult]:
    ham = build_hamiltonian(cfg)
    circuit = build_circuit(cfg, ham.n_qubits)
    eig = spectrum(ham) if cfg.grid.start is None or cfg.grid.stop is None else None
    grid = drift_grid(cfg, eig)
    noise = NoiseModel(cfg.noise.p1, cfg.noise.p2)
    results = [sweep(ham, circuit, grid, vite_config(cfg), seed, noise, theta0, cfg.run.workers)
               for seed in sweep_seeds(cfg)]
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        digest = cfg.manifest_hash()
        for j, res in enumerate(results):
            (out_dir / records_name(j)).write_text(records_to_csv(res.records, digest))
        write_manifest(out_dir / "manifest.json", cfg, extra={
            "sweep_seeds": [r.sweep_seed for r in results],
            "grid": [float(s) for s in grid],
            "skipped": [len(r.skipped) for r in results],
        })
    return results


def records_name(init_index: int) -> str:
    return f"records_{init_index:02d}.csv"


# ---------------------------------------------------------------------------
# cluster

def snapshot(records: list[ParameterRecord], step: int | None = None) -> list[ParameterRecord]:
    """Records of one VITE step; default is the last recorded step."""
    if not records:
        return []
    step = max(r.step for r in records) if step is None else step
    return sorted((r for r in records if r.step == step), key=lambda r: r.s)


def cluster_records(records: list[ParameterRecord], cfg: PipelineConfig, seed: int | None = None) -> ClusterReport:
    cc = cfg.clustering
    data = embed_angles(snapshot(records, cc.snapshot_step))
    n = len(data)
    k_range = range(cc.k_min, min(cc.k_max, n - 1) + 1)
    return select_k_and_cluster(data, k_range, cc.restarts, cfg.run.base_seed if seed is None else seed,
                                hopkins_repeats=cc.hopkins_repeats, hopkins_fraction=cc.hopkins_fraction,
                                iqr_multiplier=cc.iqr_multiplier)


def selection_key(report: ClusterReport) -> tuple:
    """Prefer more clusters, then a larger mean silhouette."""
    return (0 if report.degenerate else 1, report.k, round(report.mean_silhouette, 12))


def choose_report(reports: list[ClusterReport]) -> int:
    return max(range(len(reports)), key=lambda j: (selection_key(reports[j]), -j))


def run_cluster(record_sets: list[list[ParameterRecord]], cfg: PipelineConfig,
                out_dir: Path | None = None) -> tuple[ClusterReport, int]:
    reports = [cluster_records(recs, cfg) for recs in record_sets]
    best = choose_report(reports)
    report = reports[best]
    if len(reports) > 1:
        report.warnings.append(f"selected initialisation {best} of {len(reports)} by cluster count and silhouette")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        digest = cfg.manifest_hash()
        (out_dir / "report.json").write_text(report.to_json(digest) + "\n")
        _write_csv(out_dir / "boxplot.csv", boxplot_rows(report), digest)
    return report, best


# ---------------------------------------------------------------------------
# scoring against the exact spectrum

@dataclass
class SpectrumScore:
    medians: np.ndarray
    assigned_level: np.ndarray
    inside: np.ndarray
    level_errors: np.ndarray
    intervals: LevelIntervals

    @property
    def all_inside(self) -> bool:
        return bool(np.all(self.inside))

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.level_errors))


def score_report(report: ClusterReport, eigenvalues, window: tuple[float, float],
                 n_levels: int = N_SCORED_LEVELS) -> SpectrumScore:
    """Compare cluster medians with the drift intervals of the exact spectrum.

    A cluster is matched to the level that most of its filtered members map
    to; each of the lowest ``n_levels`` levels is scored by the closest median.
    """
    iv = LevelIntervals.from_levels(distinct_levels(eigenvalues), window)
    medians, levels, inside = [], [], []
    for c in report.clusters:
        votes = np.bincount([iv.level_of(s) for s in c.filtered], minlength=len(iv.levels))
        j = int(np.argmax(votes))
        medians.append(c.median_s)
        levels.append(j)
        inside.append(iv.lower[j] - 1e-12 <= c.median_s <= iv.upper[j] + 1e-12)
    medians = np.array(medians)
    n_levels = min(n_levels, len(iv.levels))
    errors = np.array([np.min(np.abs(medians - iv.centers[i])) for i in range(n_levels)])
    return SpectrumScore(medians, np.array(levels), np.array(inside), errors, iv)


# ---------------------------------------------------------------------------
# refine

@dataclass
class RefineRow:
    cluster: int
    method: str
    s: float
    target: float
    eigenvalue: float
    iterations: int
    residual: float
    converged: bool
    iters_to_target: int | None
    baseline_eigenvalue: float
    baseline_iterations: int
    baseline_iters_to_target: int | None


def refine_clusters(report: ClusterReport, ham: PauliSumHamiltonian, circuit: AnsatzCircuit,
                    cfg: PipelineConfig, eig: EigenDecomposition | None = None,
                    threshold: float = 1e-8) -> list[RefineRow]:
    """Refine each cluster median from its warm-start state and from |+...+>."""
    eig = eig or spectrum(ham)
    rc = cfg.refinement
    baseline_state = uniform_state(ham.n_qubits)

    def run(s, v0):
        if rc.method == "poly_inverse":
            return polynomial_inverse_power(eig, s, v0, rc.degree, rc.max_iters, rc.tol)
        return inverse_power_iterate(eig, s, v0, rc.tol, rc.max_iters)

    rows = []
    for c in report.clusters:
        s = c.median_s
        target = nearest_eigenvalue(eig.eigenvalues, s).value
        if abs(s - target) < SHIFT_NUDGE:
            # a median on an eigenvalue makes H - sI singular; step just off it
            log.info("cluster %d: median %.6g sits on an eigenvalue, shifting by %g", c.cluster_id, s, SHIFT_NUDGE)
            s = target + SHIFT_NUDGE
        warm = reconstruct_state_from_params(circuit, c.median_theta)
        try:
            res, base = run(s, warm), run(s, baseline_state)
        except (SingularShift, DriftSpecError) as exc:
            log.warning("cluster %d not refined: %s", c.cluster_id, exc)
            continue
        rows.append(RefineRow(c.cluster_id, res.method, s, target, res.eigenvalue_estimate, res.iterations,
                              res.residual, res.converged, res.iterations_to(target, threshold),
                              base.eigenvalue_estimate, base.iterations, base.iterations_to(target, threshold)))
    return rows


def run_refine(report: ClusterReport, cfg: PipelineConfig, out: Path | None = None) -> list[RefineRow]:
    ham = build_hamiltonian(cfg)
    rows = refine_clusters(report, ham, build_circuit(cfg, ham.n_qubits), cfg)
    if out is not None:
        _write_csv(out, [r.__dict__ for r in rows], cfg.manifest_hash())
    return rows


# ---------------------------------------------------------------------------
# noise study

@dataclass
class NoiseStudyResult:
    p2_levels: list[float]
    steps: list[int]
    errors: np.ndarray  # (len(p2_levels), len(steps)); nan where clustering failed
    cluster_counts: np.ndarray
    trend_p: dict[int, float]
    trend_tau: dict[int, float]

    @property
    def final_step(self) -> int:
        return self.steps[-1]

    @property
    def robust(self) -> bool:
        """No significant monotone trend of error against noise at the final step."""
        p = self.trend_p.get(self.final_step, float("nan"))
        return bool(p >= 0.05)

    def rows(self) -> list[dict]:
        out = []
        for i, p2 in enumerate(self.p2_levels):
            for j, step in enumerate(self.steps):
                out.append({"p2": p2, "step": step, "mean_error": float(self.errors[i, j]),
                            "k": int(self.cluster_counts[i, j])})
        return out


def noise_study(cfg: PipelineConfig, p2_levels=None, sweep_seed: int | None = None) -> NoiseStudyResult:
    ns = cfg.noise_study
    levels = list(ns.p2_levels if p2_levels is None else p2_levels)
    if ns.baseline and 0.0 not in levels:
        levels = [0.0] + levels
    ham = build_hamiltonian(cfg)
    eig = spectrum(ham)
    grid = drift_grid(cfg, eig)
    circuit = build_circuit(cfg, ham.n_qubits)
    vcfg = vite_config(cfg)
    seed = cfg.run.base_seed if sweep_seed is None else sweep_seed
    steps = list(vcfg.record_at)
    errors = np.full((len(levels), len(steps)), np.nan)
    counts = np.zeros((len(levels), len(steps)), dtype=int)
    for i, p2 in enumerate(levels):
        noise = NoiseModel(ns.p1 if p2 > 0 else 0.0, p2)
        res = sweep(ham, circuit, grid, vcfg, seed, noise, workers=cfg.run.workers)
        for j, step in enumerate(steps):
            try:
                report = cluster_records(snapshot(res.records, step), cfg)
            except DriftSpecError as exc:
                log.warning("p2=%g step %d: clustering failed: %s", p2, step, exc)
                continue
            counts[i, j] = report.k
            errors[i, j] = score_report(report, eig.eigenvalues, (grid[0], grid[-1])).mean_error
    trend_p, trend_tau = {}, {}
    for j, step in enumerate(steps):
        col = errors[:, j]
        if np.all(np.isfinite(col)) and len(col) >= 4:
            mk = mann_kendall(col)
            trend_p[step], trend_tau[step] = mk.p_value, mk.tau
    return NoiseStudyResult(levels, steps, errors, counts, trend_p, trend_tau)


def run_noise_study(cfg: PipelineConfig, out_dir: Path | None = None) -> NoiseStudyResult:
    result = noise_study(cfg)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        digest = cfg.manifest_hash()
        _write_csv(out_dir / "noise_errors.csv", result.rows(), digest)
        verdict = {"manifest_sha256": digest, "robust": result.robust,
                   "trend_p": {str(k): v for k, v in result.trend_p.items()},
                   "trend_tau": {str(k): v for k, v in result.trend_tau.items()}}
        (out_dir / "noise_verdict.json").write_text(json.dumps(verdict, indent=2, sort_keys=True) + "\n")
    return result


# ---------------------------------------------------------------------------
# output helpers

def _write_csv(path: Path, rows: list[dict], manifest_hash: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write(f"# manifest_sha256={manifest_hash}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    path.write_text(buf.getvalue())


def read_csv_rows(path: Path) -> list[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(lines))


def write_manifest(path: Path, cfg: PipelineConfig, extra: dict | None = None) -> None:
    import scipy

    payload = {
        "manifest_sha256": cfg.manifest_hash(),
        "config": cfg.to_dict(),
        "versions": {"driftspec": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
    }
    payload.update(extra or {})
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_record_sets(paths) -> list[list[ParameterRecord]]:
    return [records_from_csv(Path(p).read_text()) for p in paths]
