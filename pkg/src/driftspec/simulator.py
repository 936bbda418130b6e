"""Parameterized-circuit simulation on statevectors and density matrices.

Rotations follow R_G(theta) = exp(-i theta G / 2). Qubit q is bit q of the
basis index, so in a C-ordered ``reshape([2] * n)`` it lives on axis n-1-q.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidProbability, ShapeMismatch, TooLarge, UnsupportedFamily
from .hamiltonian import PauliSumHamiltonian

MAX_STATE_QUBITS = 13
MAX_DENSITY_QUBITS = 8

ROTATIONS = {"RX", "RY", "RZ"}
PARAMETRIC = {"RX", "RY", "RZ", "CRY"}
CONTROLLED = {"CX", "CRY"}
KINDS = {"RX", "RY", "RZ", "H", "CX", "CRY"}
FAMILIES = ("c0", "c0_hat", "c1")

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
GENERATORS = {"RX": _X, "RY": _Y, "RZ": _Z, "CRY": _Y}


def rotation(kind: str, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind in ("RY", "CRY"):
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "RZ":
        return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)
    raise ValueError(f"{kind} is not a rotation")


@dataclass(frozen=True)
class GateOp:
    kind: str
    target: int
    control: int | None = None
    slot: int | None = None
    moment: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown gate kind {self.kind}")
        if (self.control is not None) != (self.kind in CONTROLLED):
            raise ValueError(f"{self.kind}: control qubit must be given iff the gate is controlled")
        if (self.slot is not None) != (self.kind in PARAMETRIC):
            raise ValueError(f"{self.kind}: parameter slot must be given iff the gate is parametric")
        if self.control is not None and self.control == self.target:
            raise ValueError("control and target coincide")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,) if self.control is None else (self.control, self.target)

    def matrix(self, theta: Sequence[float] | None = None) -> np.ndarray:
        """2x2 matrix applied to the target (on the control-1 subspace if controlled)."""
        if self.kind == "H":
            return _H
        if self.kind == "CX":
            return _X
        return rotation(self.kind, theta[self.slot])


@dataclass(frozen=True)
class AnsatzCircuit:
    n_qubits: int
    gates: tuple[GateOp, ...]
    n_params: int
    family: str = "custom"
    layers: int = 1

    def __post_init__(self):
        used = sorted({g.slot for g in self.gates if g.slot is not None})
        if used != list(range(self.n_params)):
            raise ValueError("parameter slots must be exactly 0..n_params-1, each used")
        for g in self.gates:
            if any(q < 0 or q >= self.n_qubits for q in g.qubits):
                raise ValueError(f"gate {g} acts outside {self.n_qubits} qubits")

    @property
    def two_qubit_count(self) -> int:
        return sum(1 for g in self.gates if g.control is not None)

    @property
    def depth(self) -> int:
        return len({g.moment for g in self.gates})

    @property
    def controlled_slots(self) -> frozenset[int]:
        return frozenset(g.slot for g in self.gates if g.kind == "CRY")

    def inverse_gates(self) -> list[tuple[GateOp, float]]:
        """Reversed gates with sign flips, for round-trip checks."""
        return [(g, -1.0) for g in reversed(self.gates)]


def build_ansatz(family: str, n: int, layers: int = 1) -> AnsatzCircuit:
    """Ansatz families c0 (hardware-efficient 'circuit 11'), c0_hat (c0 without RZ), c1."""
    if family not in FAMILIES:
        raise UnsupportedFamily(f"unknown ansatz family {family!r}")
    if n < 2:
        raise UnsupportedFamily("ansatz needs at least two qubits")
    if layers < 1:
        raise ValueError("layers must be positive")
    if family == "c1" and n != 4:
        raise UnsupportedFamily("c1 is defined for exactly four qubits")
    gates: list[GateOp] = []
    slot = 0
    moment = 0

    def rot(kind, qubits):
        nonlocal slot, moment
        if not qubits:
            return
        for q in qubits:
            gates.append(GateOp(kind, q, slot=slot, moment=moment))
            slot += 1
        moment += 1

    def entangle(kind, pairs, parametric=False):
        nonlocal slot, moment
        if not pairs:
            return
        for c, t in pairs:
            if parametric:
                gates.append(GateOp(kind, t, control=c, slot=slot, moment=moment))
                slot += 1
            else:
                gates.append(GateOp(kind, t, control=c, moment=moment))
        moment += 1

    inner = list(range(1, n - 1))
    even_pairs = [(q, q + 1) for q in range(0, n - 1, 2)]
    odd_pairs = [(q, q + 1) for q in range(1, n - 1, 2)]
    for _ in range(layers):
        if family == "c1":
            rot("RY", list(range(4)))
            entangle("CRY", [(0, 1), (2, 3)], parametric=True)
            continue
        rot("RY", list(range(n)))
        if family == "c0":
            rot("RZ", list(range(n)))
        entangle("CX", even_pairs)
        rot("RY", inner)
        if family == "c0":
            rot("RZ", inner)
        entangle("CX", odd_pairs)
    return AnsatzCircuit(n, tuple(gates), slot, family, layers)


def ansatz_to_text(ansatz: AnsatzCircuit) -> str:
    lines = [f"ansatz family={ansatz.family} n_qubits={ansatz.n_qubits} "
             f"layers={ansatz.layers} n_params={ansatz.n_params}"]
    for g in ansatz.gates:
        parts = [g.kind, f"target={g.target}"]
        if g.control is not None:
            parts.append(f"control={g.control}")
        if g.slot is not None:
            parts.append(f"slot={g.slot}")
        parts.append(f"moment={g.moment}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def ansatz_from_text(text: str) -> AnsatzCircuit:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = dict(kv.split("=") for kv in lines[0].split()[1:])
    gates = []
    for ln in lines[1:]:
        kind, *rest = ln.split()
        fields = {k: int(v) for k, v in (kv.split("=") for kv in rest)}
        gates.append(GateOp(kind, fields["target"], fields.get("control"), fields.get("slot"),
                            fields.get("moment", 0)))
    return AnsatzCircuit(int(header["n_qubits"]), tuple(gates), int(header["n_params"]),
                         header["family"], int(header["layers"]))


# ---------------------------------------------------------------------------
# statevectors

def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    return psi


def uniform_state(n: int) -> np.ndarray:
    return np.full(1 << n, (1 << n) ** -0.5, dtype=complex)


def _apply_1q(state: np.ndarray, u: np.ndarray, q: int, n: int) -> np.ndarray:
    """Apply a 2x2 matrix to qubit q of an array of shape (2^n, ...)."""
    tail = state.shape[1:]
    psi = state.reshape((1 << (n - 1 - q), 2, 1 << q) + tail)
    out = np.einsum("ab,ibj...->iaj...", u, psi)
    return out.reshape(state.shape)


def _control_mask(n: int, control: int) -> np.ndarray:
    return ((np.arange(1 << n) >> control) & 1).astype(bool)


def apply_gate(state: np.ndarray, gate: GateOp, u: np.ndarray, n: int) -> np.ndarray:
    applied = _apply_1q(state, u, gate.target, n)
    if gate.control is None:
        return applied
    mask = _control_mask(n, gate.control).reshape((-1,) + (1,) * (state.ndim - 1))
    return np.where(mask, applied, state)


def _check_theta(ansatz: AnsatzCircuit, theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (ansatz.n_params,):
        raise ShapeMismatch(f"expected {ansatz.n_params} parameters, got shape {theta.shape}")
    return theta


def _check_state(state, n: int) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != 1 << n:
        raise ShapeMismatch(f"state of length {state.shape[0]} does not match {n} qubits")
    return state


def apply_circuit(ansatz: AnsatzCircuit, theta, initial=None) -> np.ndarray:
    n = ansatz.n_qubits
    if n > MAX_STATE_QUBITS:
        raise TooLarge(f"statevectors are capped at {MAX_STATE_QUBITS} qubits")
    theta = _check_theta(ansatz, theta)
    psi = zero_state(n) if initial is None else _check_state(initial, n).copy()
    for g in ansatz.gates:
        psi = apply_gate(psi, g, g.matrix(theta), n)
    return psi


def apply_inverse_circuit(ansatz: AnsatzCircuit, theta, state) -> np.ndarray:
    n = ansatz.n_qubits
    theta = _check_theta(ansatz, theta)
    psi = _check_state(state, n).copy()
    for g in reversed(ansatz.gates):
        psi = apply_gate(psi, g, g.matrix(theta).conj().T, n)
    return psi


def _generator_action(state: np.ndarray, gate: GateOp, n: int) -> np.ndarray:
    """-(i/2) G |state> for the gate's generator (projected onto control=1 for CRY)."""
    out = -0.5j * _apply_1q(state, GENERATORS[gate.kind], gate.target, n)
    if gate.control is not None:
        mask = _control_mask(n, gate.control).reshape((-1,) + (1,) * (state.ndim - 1))
        out = np.where(mask, out, 0.0)
    return out


def state_and_gradient(ansatz: AnsatzCircuit, theta, initial=None) -> tuple[np.ndarray, np.ndarray]:
    """Return psi(theta) and the (n_params, 2^n) array of exact derivatives."""
    n = ansatz.n_qubits
    theta = _check_theta(ansatz, theta)
    psi = zero_state(n) if initial is None else _check_state(initial, n).copy()
    mats = [g.matrix(theta) for g in ansatz.gates]
    # forward pass, then carry each derivative branch through the remaining gates
    dim = 1 << n
    grads = np.zeros((ansatz.n_params, dim), dtype=complex)
    branches: list[tuple[int, np.ndarray]] = []
    for g, u in zip(ansatz.gates, mats):
        psi = apply_gate(psi, g, u, n)
        if branches:
            stack = np.stack([b for _, b in branches], axis=1)
            stack = apply_gate(stack, g, u, n)
            branches = [(k, stack[:, i]) for i, (k, _) in enumerate(branches)]
        if g.slot is not None:
            branches.append((g.slot, _generator_action(psi, g, n)))
    for k, b in branches:
        grads[k] += b
    return psi, grads


def state_gradient(ansatz: AnsatzCircuit, theta, initial=None) -> np.ndarray:
    return state_and_gradient(ansatz, theta, initial)[1]


def expectation(state: np.ndarray, ham: PauliSumHamiltonian) -> float:
    state = _check_state(state, ham.n_qubits)
    if state.ndim != 1:
        raise ShapeMismatch("expected a single statevector")
    return float(np.real(np.vdot(state, ham.apply(state))))


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2)


# ---------------------------------------------------------------------------
# density matrices

@dataclass(frozen=True)
class NoiseModel:
    p1: float = 0.0
    p2: float = 0.0

    def __post_init__(self):
        for p in (self.p1, self.p2):
            if not 0.0 <= p <= 1.0:
                raise InvalidProbability(f"depolarizing probability {p} outside [0, 1]")

    def probability(self, gate: GateOp) -> float:
        return self.p2 if gate.control is not None else self.p1

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0


def pure_density(state: np.ndarray) -> np.ndarray:
    return np.outer(state, state.conj())


def _conjugate(rho: np.ndarray, gate: GateOp, u: np.ndarray, n: int) -> np.ndarray:
    left = apply_gate(rho, gate, u, n)
    return apply_gate(left.conj().T, gate, u, n).conj().T


def _replace_with_mixed(rho: np.ndarray, q: int, n: int) -> np.ndarray:
    """Tr_q(rho) tensor I/2 on qubit q."""
    a, b = 1 << (n - 1 - q), 1 << q
    t = rho.reshape(a, 2, b, a, 2, b)
    reduced = t[:, 0, :, :, 0, :] + t[:, 1, :, :, 1, :]
    out = np.zeros_like(t)
    out[:, 0, :, :, 0, :] = 0.5 * reduced
    out[:, 1, :, :, 1, :] = 0.5 * reduced
    return out.reshape(rho.shape)


def depolarize(rho: np.ndarray, qubits: Sequence[int], p: float, n: int) -> np.ndarray:
    if p == 0.0:
        return rho
    mixed = rho
    for q in qubits:
        mixed = _replace_with_mixed(mixed, q, n)
    return (1.0 - p) * rho + p * mixed


def _check_density(rho, n: int) -> np.ndarray:
    if n > MAX_DENSITY_QUBITS:
        raise TooLarge(f"density matrices are capped at {MAX_DENSITY_QUBITS} qubits")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (1 << n, 1 << n):
        raise ShapeMismatch(f"density matrix shape {rho.shape} does not match {n} qubits")
    return rho


def evolve_density_with_noise(ansatz: AnsatzCircuit, theta, noise: NoiseModel,
                              initial=None) -> np.ndarray:
    """Unitary conjugation then support-local depolarization after every gate."""
    n = ansatz.n_qubits
    rho = _check_density(pure_density(zero_state(n)) if initial is None else initial, n).copy()
    theta = _check_theta(ansatz, theta)
    for g in ansatz.gates:
        rho = _conjugate(rho, g, g.matrix(theta), n)
        rho = depolarize(rho, g.qubits, noise.probability(g), n)
    return rho


def noisy_energy_gradient(ansatz: AnsatzCircuit, theta, noise: NoiseModel,
                          ham: PauliSumHamiltonian, initial=None) -> tuple[float, np.ndarray, np.ndarray]:
    """Tr(H rho(theta)), its exact parameter gradient, and rho(theta).

    Forward-mode: each derivative d rho / d theta_k is carried through the
    remaining gates and channels, which act linearly on it.
    """
    n = ansatz.n_qubits
    rho = _check_density(pure_density(zero_state(n)) if initial is None else initial, n).copy()
    theta = _check_theta(ansatz, theta)
    drho = np.zeros((ansatz.n_params,) + rho.shape, dtype=complex)
    touched: set[int] = set()
    for g in ansatz.gates:
        u = g.matrix(theta)
        p = noise.probability(g)
        rho = _conjugate(rho, g, u, n)
        for k in touched:
            drho[k] = _conjugate(drho[k], g, u, n)
        if g.slot is not None:
            # d(U rho U^dag) = -(i/2)[G, U rho U^dag]
            gen_rho = _generator_action(rho, g, n)
            drho[g.slot] += gen_rho + gen_rho.conj().T
            touched.add(g.slot)
        for k in touched:
            drho[k] = depolarize(drho[k], g.qubits, p, n)
        rho = depolarize(rho, g.qubits, p, n)
    h_mat = ham.apply(np.eye(1 << n, dtype=complex))
    energy = float(np.real(np.trace(h_mat @ rho)))
    grad = np.array([np.real(np.trace(h_mat @ drho[k])) for k in range(ansatz.n_params)])
    return energy, grad, rho


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.trace(rho @ rho)))


def density_expectation(rho: np.ndarray, ham: PauliSumHamiltonian) -> float:
    h_mat = ham.apply(np.eye(rho.shape[0], dtype=complex))
    return float(np.real(np.trace(h_mat @ rho)))
