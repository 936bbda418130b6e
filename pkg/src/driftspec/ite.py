"""Exact imaginary-time evolution under (H - sI)^2 and its variational (McLachlan) version."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import EmptySpectrum, ShapeMismatch, TooLarge, ZeroNorm
from .hamiltonian import PauliSumHamiltonian, shift_and_square, to_dense
from .numerics import DEFAULT_LAMBDA_REG, EigenDecomposition, hermitian_eigendecomposition, solve_regularized
from .simulator import (AnsatzCircuit, NoiseModel, apply_circuit, expectation, noisy_energy_gradient,
                        state_and_gradient)

MAX_EXACT_QUBITS = 10
MIDPOINT_TOL = 1e-12
TWO_PI = 2.0 * math.pi


def spectrum(ham: PauliSumHamiltonian) -> EigenDecomposition:
    if ham.n_qubits > MAX_EXACT_QUBITS:
        raise TooLarge(f"exact evolution is capped at {MAX_EXACT_QUBITS} qubits")
    return hermitian_eigendecomposition(to_dense(ham))


def exact_ite_state(ham: PauliSumHamiltonian, s: float, t: float, v0: np.ndarray,
                    eig: EigenDecomposition | None = None) -> np.ndarray:
    """exp(-(H - sI)^2 t) v0, normalised.

    The exponent is shifted by its minimum over the spectrum; the shift is a
    scalar factor that normalisation removes, and it keeps large t finite.
    """
    eig = eig or spectrum(ham)
    v0 = np.asarray(v0, dtype=complex)
    if v0.shape != (eig.dim,):
        raise ShapeMismatch(f"initial state has shape {v0.shape}, expected ({eig.dim},)")
    sq = (eig.eigenvalues - s) ** 2
    weights = np.exp(-(sq - sq.min()) * t)
    u = eig.eigenvectors
    evolved = u @ (weights * (u.conj().T @ v0))
    norm = np.linalg.norm(evolved)
    if norm < 1e-300 or not np.isfinite(norm):
        raise ZeroNorm("A(s,t) v0 vanished; the initial state has no weight near s")
    return evolved / norm


def exact_ite_energy(ham: PauliSumHamiltonian, s: float, t: float, v0: np.ndarray,
                     eig: EigenDecomposition | None = None) -> float:
    eig = eig or spectrum(ham)
    state = exact_ite_state(ham, s, t, v0, eig)
    u = eig.eigenvectors
    amps = u.conj().T @ state
    return float(np.sum(eig.eigenvalues * np.abs(amps) ** 2))


@dataclass(frozen=True)
class ITETrajectory:
    s: float
    times: np.ndarray
    energies: np.ndarray
    shifted_energies: np.ndarray
    final_state: np.ndarray


def exact_ite_trajectory(ham: PauliSumHamiltonian, s: float, times: Sequence[float], v0: np.ndarray,
                         eig: EigenDecomposition | None = None) -> ITETrajectory:
    """f(s, t) and <(H - sI)^2> sampled at increasing times."""
    eig = eig or spectrum(ham)
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    energies, shifted = [], []
    state = None
    for t in times:
        state = exact_ite_state(ham, s, t, v0, eig)
        probs = np.abs(eig.eigenvectors.conj().T @ state) ** 2
        energies.append(float(np.sum(eig.eigenvalues * probs)))
        shifted.append(float(np.sum((eig.eigenvalues - s) ** 2 * probs)))
    return ITETrajectory(s, times, np.array(energies), np.array(shifted), state)


class NearestEigenvalue(NamedTuple):
    value: float
    index: int
    ambiguous: bool


def nearest_eigenvalue(eigenvalues: Sequence[float], s: float, tol: float = MIDPOINT_TOL) -> NearestEigenvalue:
    """The eigenvalue closest to s; exact midpoints resolve to the lower index."""
    vals = np.asarray(eigenvalues, dtype=float)
    if vals.size == 0:
        raise EmptySpectrum("no eigenvalues given")
    dist = np.abs(vals - s)
    k = int(np.argmin(dist))
    close = np.flatnonzero(dist <= dist[k] + tol)
    distinct = np.unique(np.round(vals[close], 12))
    ambiguous = len(distinct) > 1
    k = int(close[0])
    return NearestEigenvalue(float(vals[k]), k, ambiguous)


def distinct_levels(eigenvalues: Sequence[float], tol: float = 1e-8) -> np.ndarray:
    """Ascending eigenvalues with degenerate copies merged."""
    vals = np.sort(np.asarray(eigenvalues, dtype=float))
    out = [vals[0]]
    for v in vals[1:]:
        if v - out[-1] > tol:
            out.append(v)
    return np.array(out)


# ---------------------------------------------------------------------------
# variational ITE

@dataclass(frozen=True)
class VITEConfig:
    dt: float = 0.1
    steps: int = 25
    lambda_reg: float = DEFAULT_LAMBDA_REG
    record_at: tuple[int, ...] = (5, 10, 15, 20, 25)
    max_angle_step: float | None = None

    def __post_init__(self):
        if self.max_angle_step is not None and self.max_angle_step <= 0:
            raise ValueError("max_angle_step must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if any(r < 1 or r > self.steps for r in self.record_at):
            raise ValueError(f"record_at must lie in [1, {self.steps}]")


@dataclass(frozen=True)
class ParameterRecord:
    s: float
    theta: np.ndarray = field(compare=False)
    energy: float
    ansatz_tag: str
    step: int
    seed: int


def reduce_angles(theta: np.ndarray, ansatz: AnsatzCircuit | None = None) -> np.ndarray:
    """Wrap angles into [0, 2 pi); slots of controlled rotations wrap modulo 4 pi.

    RY(theta + 2 pi) = -RY(theta) is only a global phase when uncontrolled; a
    controlled rotation picks up a relative phase, so its period is 4 pi.
    """
    theta = np.asarray(theta, dtype=float)
    period = np.full(theta.shape, TWO_PI)
    if ansatz is not None:
        for k in ansatz.controlled_slots:
            period[k] = 2.0 * TWO_PI
    return np.mod(theta, period)


def mclachlan_system(hs: PauliSumHamiltonian, ansatz: AnsatzCircuit, theta: np.ndarray,
                     noise: NoiseModel | None = None, initial=None) -> tuple[np.ndarray, np.ndarray]:
    """A_kl = Re<d_k psi|d_l psi>, C_k = Re<d_k psi|Hs|psi>.

    With noise, C_k = 1/2 d/dtheta_k Tr(Hs rho(theta)) from the noisy density
    matrix; A stays noiseless.
    """
    psi, grads = state_and_gradient(ansatz, theta, initial)
    a = np.real(grads.conj() @ grads.T)
    if noise is None or noise.is_noiseless:
        c = np.real(grads.conj() @ hs.apply(psi))
    else:
        rho0 = None if initial is None else np.outer(initial, np.conj(initial))
        _, grad_e, _ = noisy_energy_gradient(ansatz, theta, noise, hs, rho0)
        c = 0.5 * grad_e
    return a, c


def vite_step(hs: PauliSumHamiltonian, ansatz: AnsatzCircuit, theta, dt: float,
              lambda_reg: float = DEFAULT_LAMBDA_REG, noise: NoiseModel | None = None,
              initial=None, reduce: bool = True, max_angle_step: float | None = None) -> np.ndarray:
    """One explicit-Euler step of the projected flow A theta_dot = -C.

    With ``max_angle_step`` the update is rescaled so no angle moves further
    than that in one step; direction is kept, only the length is capped.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ansatz.n_params,):
        raise ShapeMismatch(f"expected {ansatz.n_params} parameters, got shape {theta.shape}")
    a, c = mclachlan_system(hs, ansatz, theta, noise, initial)
    theta_dot = solve_regularized(a, -c, lambda_reg)
    delta = dt * theta_dot
    if max_angle_step is not None:
        largest = float(np.max(np.abs(delta)))
        if largest > max_angle_step:
            delta *= max_angle_step / largest
    new = theta + delta
    return reduce_angles(new, ansatz) if reduce else new


def vite_run(ham: PauliSumHamiltonian, s: float, ansatz: AnsatzCircuit, theta0,
             config: VITEConfig = VITEConfig(), noise: NoiseModel | None = None,
             seed: int = 0, initial=None) -> list[ParameterRecord]:
    """Iterate vite_step on (H - sI)^2 and snapshot theta and <H> at config.record_at."""
    hs = shift_and_square(ham, s)
    theta = reduce_angles(np.asarray(theta0, dtype=float), ansatz)
    if theta.shape != (ansatz.n_params,):
        raise ShapeMismatch(f"expected {ansatz.n_params} parameters, got shape {theta.shape}")
    wanted = set(config.record_at)
    records = []
    for step in range(1, config.steps + 1):
        theta = vite_step(hs, ansatz, theta, config.dt, config.lambda_reg, noise, initial,
                          max_angle_step=config.max_angle_step)
        if step in wanted:
            if noise is None or noise.is_noiseless:
                energy = expectation(apply_circuit(ansatz, theta, initial), ham)
            else:
                from .simulator import density_expectation, evolve_density_with_noise
                rho0 = None if initial is None else np.outer(initial, np.conj(initial))
                energy = density_expectation(evolve_density_with_noise(ansatz, theta, noise, rho0), ham)
            records.append(ParameterRecord(float(s), np.mod(theta, TWO_PI), energy,
                                           ansatz.family, step, int(seed)))
    return records


# ---------------------------------------------------------------------------
# records CSV

def records_header(n_params: int) -> list[str]:
    return ["s", "ansatz_tag", "seed", "step", "energy"] + [f"theta_{k}" for k in range(n_params)]


def records_to_csv(records: Iterable[ParameterRecord], manifest_hash: str | None = None) -> str:
    records = list(records)
    buf = io.StringIO()
    if manifest_hash:
        buf.write(f"# manifest_sha256={manifest_hash}\n")
    writer = csv.writer(buf, lineterminator="\n")
    n_params = len(records[0].theta) if records else 0
    writer.writerow(records_header(n_params))
    for r in records:
        writer.writerow([repr(float(r.s)), r.ansatz_tag, r.seed, r.step, repr(float(r.energy))]
                        + [repr(float(x)) for x in r.theta])
    return buf.getvalue()


def records_from_csv(text: str) -> list[ParameterRecord]:
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        return []
    n_params = len(header) - 5
    out = []
    for row in reader:
        if len(row) != 5 + n_params:
            raise ValueError(f"records row has {len(row)} fields, expected {5 + n_params}")
        out.append(ParameterRecord(float(row[0]), np.array([float(x) for x in row[5:]]), float(row[4]),
                                   row[1], int(row[3]), int(row[2])))
    return out
