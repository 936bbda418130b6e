"""End-to-end acceptance checks A1-A10.

Each test records a one-line detail; conftest prints a PASS/FAIL line per
criterion in the terminal summary.  Pipeline settings come from the shipped
config ``scripts/configs/heisenberg4.toml`` (base seed 0, eight initial angle
draws, best draw chosen by cluster count then silhouette).
"""
import math
import time
from pathlib import Path

import numpy as np
import pytest

from driftspec import pipeline
from driftspec.clustering import embed_angles, hopkins_statistic
from driftspec.config import load_config
from driftspec.hamiltonian import PauliSumHamiltonian, build_heisenberg_1d, shift_and_square, to_dense
from driftspec.ite import ParameterRecord, distinct_levels, exact_ite_energy, exact_ite_trajectory, spectrum
from driftspec.numerics import hermitian_eigendecomposition
from driftspec.refine import inverse_power_iterate, polynomial_inverse_power
from driftspec.stats import tau_save, tau_weakest

from conftest import random_state

CONFIG = Path(__file__).resolve().parents[1] / "scripts" / "configs" / "heisenberg4.toml"
# primary sweep seed for the noise study, then the two documented alternates
NOISE_SEED_SETS = (0, 101, 202)

pytestmark = pytest.mark.slow


def random_pauli_sum(rng, n, terms=5):
    strings = ["".join(rng.choice(list("IXYZ"), n)) for _ in range(terms)]
    return PauliSumHamiltonian.from_terms(n, zip(rng.normal(size=terms), strings))


@pytest.fixture(scope="module")
def heisenberg4_run():
    cfg = load_config(CONFIG)
    start = time.perf_counter()
    ham = pipeline.build_hamiltonian(cfg)
    eig = spectrum(ham)
    grid = pipeline.drift_grid(cfg, eig)
    sweeps = pipeline.run_sweep(cfg)
    report, best = pipeline.run_cluster([r.records for r in sweeps], cfg)
    score = pipeline.score_report(report, eig.eigenvalues, (grid[0], grid[-1]))
    elapsed = time.perf_counter() - start
    snapshot = pipeline.snapshot(sweeps[best].records, cfg.clustering.snapshot_step)
    return {"cfg": cfg, "ham": ham, "eig": eig, "grid": grid, "report": report, "score": score,
            "snapshot": snapshot, "elapsed": elapsed}


def test_a1_exact_ite_reaches_nearest_eigenvalue(record_property):
    start = time.perf_counter()
    ham = build_heisenberg_1d(4, 0.5, 0.5, 0.6, 1.0)
    eig = spectrum(ham)
    levels = distinct_levels(eig.eigenvalues)
    mids = 0.5 * (levels[1:] + levels[:-1])
    rng = np.random.default_rng(2024)
    v0 = random_state(rng, 16)
    worst, samples = 0.0, 0
    while samples < 50:
        s = rng.uniform(levels[0] - 0.5, levels[-1] + 0.5)
        if np.min(np.abs(mids - s)) < 1e-3:
            continue
        dist = np.sort(np.abs(levels - s))
        gap = dist[1] - dist[0]
        energy = exact_ite_energy(ham, s, 10.0 / gap ** 2, v0, eig)
        worst = max(worst, abs(energy - levels[np.argmin(np.abs(levels - s))]))
        samples += 1
    elapsed = time.perf_counter() - start
    record_property("detail", f"max |E - lambda| = {worst:.2e} over 50 drifts, {elapsed:.2f}s")
    assert worst < 1e-6
    assert elapsed < 10.0


def test_a2_exact_ite_descent(record_property):
    rng = np.random.default_rng(7)
    worst = -np.inf
    for _ in range(20):
        n = int(rng.integers(1, 4))
        ham = random_pauli_sum(rng, n)
        s = float(rng.uniform(-2, 2))
        traj = exact_ite_trajectory(ham, s, np.linspace(0.0, 6.0, 61), random_state(rng, 2 ** n))
        worst = max(worst, float(np.max(np.diff(traj.shifted_energies))))
    record_property("detail", f"largest step increase of <(H-s)^2> = {worst:.1e} over 20 draws")
    assert worst <= 1e-10


def test_a3_pipeline_recovers_spectrum(heisenberg4_run, record_property):
    report, score = heisenberg4_run["report"], heisenberg4_run["score"]
    outside = [f"{m:.3f}" for m, ok in zip(score.medians, score.inside) if not ok]
    record_property("detail", f"k={report.k}, inside {int(score.inside.sum())}/{report.k} "
                              f"(outside: {', '.join(outside) or 'none'}), lowest-four mean error "
                              f"{score.mean_error:.3f}, {heisenberg4_run['elapsed']:.0f}s")
    assert report.k >= 4
    assert score.mean_error <= 0.15
    assert heisenberg4_run["elapsed"] < 300
    assert score.all_inside, f"cluster medians outside their drift interval: {outside}"


def test_a4_parameters_are_clusterable(heisenberg4_run, record_property):
    report = heisenberg4_run["report"]
    data = embed_angles(heisenberg4_run["snapshot"])
    rng = np.random.default_rng(3)
    n_params = len(heisenberg4_run["snapshot"][0].theta)
    control = embed_angles([ParameterRecord(0.0, rng.uniform(0, 2 * np.pi, n_params), 0.0, "c0", 25, 0)
                            for _ in range(len(data))])
    cc = heisenberg4_run["cfg"].clustering
    ctrl = hopkins_statistic(control, cc.hopkins_fraction, cc.hopkins_repeats, seed=0)
    record_property("detail", f"Hopkins {report.hopkins_mean:.3f} (p={report.hopkins_p:.3g}, "
                              f"m={math.ceil(cc.hopkins_fraction * len(data))}); uniform control {ctrl.mean:.3f}")
    assert 0.4 <= ctrl.mean <= 0.6
    assert report.hopkins_p < 0.05
    assert report.hopkins_mean > 0.75


def test_a5_scaling_with_system_size(record_property):
    base = load_config(CONFIG)
    errors, params, times = {}, {}, {}
    for n in (6, 8):
        start = time.perf_counter()
        cfg = base.replace("hamiltonian", n=n).replace("ansatz", family="c0_hat").replace("vite", record_at=(25,))
        ham = pipeline.build_hamiltonian(cfg)
        eig = spectrum(ham)
        grid = pipeline.drift_grid(cfg, eig)
        params[n] = pipeline.build_circuit(cfg, n).n_params
        sweeps = pipeline.run_sweep(cfg)
        report, _ = pipeline.run_cluster([r.records for r in sweeps], cfg)
        errors[n] = pipeline.score_report(report, eig.eigenvalues, (grid[0], grid[-1])).mean_error
        times[n] = time.perf_counter() - start
    record_property("detail", f"errors n=6: {errors[6]:.3f}, n=8: {errors[8]:.3f}; "
                              f"params {params[6]}/{params[8]}; n=8 took {times[8]:.0f}s")
    assert params == {6: 10, 8: 14}
    assert errors[6] <= 0.25 and errors[8] <= 0.25
    assert times[8] < 1800
    assert errors[8] <= errors[6], "error grew with system size"


def test_a6_noise_robustness(record_property):
    cfg = load_config(CONFIG)
    attempts = []
    for seed in NOISE_SEED_SETS:
        study = pipeline.noise_study(cfg, sweep_seed=seed)
        final = study.steps.index(study.final_step)
        noisy = [i for i, p2 in enumerate(study.p2_levels) if p2 > 0]
        min_k = int(study.cluster_counts[noisy, final].min())
        p = study.trend_p.get(study.final_step, float("nan"))
        attempts.append(f"seed {seed}: min k {min_k}, MK p={p:.3f}")
        if min_k >= 3 and study.robust:
            break
    record_property("detail", "; ".join(attempts))
    assert min_k >= 3 and study.robust


def test_a7_warm_start_speeds_refinement(heisenberg4_run, record_property):
    cfg, ham = heisenberg4_run["cfg"], heisenberg4_run["ham"]
    rows = pipeline.refine_clusters(heisenberg4_run["report"], ham, pipeline.build_circuit(cfg, 4), cfg,
                                    heisenberg4_run["eig"])
    big = 10 ** 9
    warm = np.array([r.iters_to_target or big for r in rows])
    cold = np.array([r.baseline_iters_to_target or big for r in rows])
    le, lt = float(np.mean(warm <= cold)), float(np.mean(warm < cold))
    record_property("detail", f"{len(rows)} clusters: warm <= uniform {le:.0%}, strictly fewer {lt:.0%}")
    assert len(rows) == len(heisenberg4_run["report"].clusters)
    assert le >= 0.8 and lt >= 0.5


def test_a8_polynomial_surrogate_agrees(record_property):
    worst = 0.0
    diag = np.diag([1.0, 2.0, 4.0])
    for s in (0.3, 1.2, 1.9, 3.3, 5.0):
        v0 = np.ones(3) / np.sqrt(3)
        exact = inverse_power_iterate(diag, s, v0).eigenvalue_estimate
        poly = polynomial_inverse_power(diag, s, v0, degree=31).eigenvalue_estimate
        worst = max(worst, abs(exact - poly))
    eig = hermitian_eigendecomposition(to_dense(build_heisenberg_1d(4, 0.5, 0.5, 0.6, 1.0)))
    lam = eig.eigenvalues
    rng = np.random.default_rng(8)
    checked = 0
    while checked < 10:
        s = float(rng.uniform(lam[0] - 0.25, lam[-1] + 0.25))
        if np.min(np.abs(lam - s)) < 0.02:
            continue
        v0 = random_state(rng, 16)
        exact = inverse_power_iterate(eig, s, v0).eigenvalue_estimate
        poly = polynomial_inverse_power(eig, s, v0, degree=31).eigenvalue_estimate
        worst = max(worst, abs(exact - poly))
        checked += 1
    record_property("detail", f"max |poly - exact| = {worst:.1e} (5 diagonal, 10 Heisenberg shifts)")
    assert worst < 1e-6


def test_a9_shift_and_square_oracle(record_property):
    rng = np.random.default_rng(9)
    worst_sq = worst_eig = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 4))
        ham = random_pauli_sum(rng, n, terms=int(rng.integers(1, 7)))
        s = float(rng.uniform(-3, 3))
        dense = to_dense(ham)
        shifted = dense - s * np.eye(2 ** n)
        worst_sq = max(worst_sq, float(np.max(np.abs(to_dense(shift_and_square(ham, s)) - shifted @ shifted))))
        eig = hermitian_eigendecomposition(dense)
        u = eig.eigenvectors
        worst_eig = max(worst_eig,
                        float(np.max(np.abs(u @ np.diag(eig.eigenvalues) @ u.conj().T - dense))),
                        float(np.max(np.abs(u.conj().T @ u - np.eye(2 ** n)))))
    record_property("detail", f"max squaring error {worst_sq:.1e}, eigen round-trip {worst_eig:.1e}")
    assert worst_sq < 1e-10
    assert worst_eig < 1e-10


def test_a10_speed_limit_calculators(record_property):
    first = abs(tau_weakest(0.0, 1.0, 0.724) - 1 / 0.724)
    worst = 0.0
    for f in np.linspace(0.0, 1.0, 100):
        for excess in (0.5, 1.0, 3.0):
            worst = max(worst, abs(tau_save(math.acos(math.sqrt(f)), excess) - tau_weakest(f, excess)))
    record_property("detail", f"|tau_weakest(0,1) - 1/0.724| = {first:.1e}, identity gap {worst:.1e}")
    assert first < 1e-12
    assert worst < 1e-12
