"""Pauli-sum Hamiltonians: construction, algebra, dense realisation, file I/O.

Convention: character q of a Pauli string acts on qubit q, and qubit q is
bit q of the computational-basis index (little-endian).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import InvalidSize, LengthMismatch, NonHermitian, ParseError, TooLarge

PRUNE_TOL = 1e-12
MAX_DENSE_QUBITS = 13
PAULI_LETTERS = "IXYZ"

# single-qubit products: (a, b) -> (phase, a*b)
_PRODUCT = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}


def multiply_pauli_strings(p: str, q: str) -> tuple[complex, str]:
    """Return (phase, r) with p . q = phase * r."""
    if len(p) != len(q):
        raise LengthMismatch(f"cannot multiply strings of length {len(p)} and {len(q)}")
    phase = 1 + 0j
    out = []
    for a, b in zip(p, q):
        ph, c = _PRODUCT[(a, b)]
        phase *= ph
        out.append(c)
    return phase, "".join(out)


def pauli_masks(string: str) -> tuple[int, int, int]:
    """(x_mask, z_mask, y_count) describing the action on basis states."""
    x_mask = z_mask = 0
    n_y = 0
    for q, ch in enumerate(string):
        if ch in "XY":
            x_mask |= 1 << q
        if ch in "ZY":
            z_mask |= 1 << q
        if ch == "Y":
            n_y += 1
    return x_mask, z_mask, n_y


def _parity(values: np.ndarray) -> np.ndarray:
    v = values.copy()
    out = np.zeros_like(v)
    while np.any(v):
        out ^= v & 1
        v >>= 1
    return out


@dataclass(frozen=True)
class PauliSumHamiltonian:
    """Real-weighted sum of n-qubit Pauli strings with distinct, unpruned terms."""

    n_qubits: int
    terms: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise InvalidSize("need at least one qubit")
        for string in self.terms:
            if len(string) != self.n_qubits or any(c not in PAULI_LETTERS for c in string):
                raise LengthMismatch(f"bad Pauli string {string!r} for {self.n_qubits} qubits")

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[tuple[complex, str]],
                   prune_tol: float = PRUNE_TOL) -> "PauliSumHamiltonian":
        """Merge duplicate strings, prune small coefficients, require real weights."""
        merged: dict[str, complex] = {}
        for coeff, string in terms:
            merged[string] = merged.get(string, 0.0) + complex(coeff)
        real = {}
        for string, coeff in merged.items():
            if abs(coeff.imag) > prune_tol:
                raise NonHermitian(f"term {string} has imaginary coefficient {coeff}")
            if abs(coeff) >= prune_tol:
                real[string] = float(coeff.real)
        return cls(n_qubits, real)

    def __len__(self):
        return len(self.terms)

    def items(self):
        return self.terms.items()

    def scaled(self, factor: float) -> "PauliSumHamiltonian":
        return PauliSumHamiltonian.from_terms(self.n_qubits, ((factor * c, p) for p, c in self.items()))

    def __add__(self, other: "PauliSumHamiltonian") -> "PauliSumHamiltonian":
        if other.n_qubits != self.n_qubits:
            raise LengthMismatch("qubit counts differ")
        return PauliSumHamiltonian.from_terms(
            self.n_qubits, [(c, p) for p, c in self.items()] + [(c, p) for p, c in other.items()])

    def __matmul__(self, other: "PauliSumHamiltonian") -> "PauliSumHamiltonian":
        if other.n_qubits != self.n_qubits:
            raise LengthMismatch("qubit counts differ")
        products = []
        for p, a in self.items():
            for q, b in other.items():
                phase, r = multiply_pauli_strings(p, q)
                products.append((phase * a * b, r))
        return PauliSumHamiltonian.from_terms(self.n_qubits, products)

    @cached_property
    def _compiled(self) -> list[tuple[int, np.ndarray]]:
        # group terms by bit-flip mask; each group acts as diag(d) followed by i -> i ^ x
        if self.n_qubits > MAX_DENSE_QUBITS + 3:
            raise TooLarge(f"{self.n_qubits} qubits exceeds the statevector cap")
        idx = np.arange(1 << self.n_qubits)
        groups: dict[int, np.ndarray] = {}
        for string, coeff in self.items():
            x, z, n_y = pauli_masks(string)
            sign = 1 - 2 * _parity(idx & z)
            d = coeff * (1j ** n_y) * sign
            groups[x] = groups.get(x, 0) + d
        return sorted(groups.items())

    def apply(self, state: np.ndarray) -> np.ndarray:
        """H|state> without forming the matrix; works on (2^n,) or (2^n, k) arrays."""
        state = np.asarray(state)
        idx = np.arange(1 << self.n_qubits)
        out = np.zeros(state.shape, dtype=complex)
        for x, d in self._compiled:
            contrib = d.reshape((-1,) + (1,) * (state.ndim - 1)) * state
            out[idx ^ x] += contrib
        return out


def identity(n_qubits: int, coeff: float = 1.0) -> PauliSumHamiltonian:
    return PauliSumHamiltonian.from_terms(n_qubits, [(coeff, "I" * n_qubits)])


def _place(n: int, ops: dict[int, str]) -> str:
    return "".join(ops.get(q, "I") for q in range(n))


def build_heisenberg_1d(n: int, jx: float, jy: float, jz: float, h: float,
                        *, field_on_all_sites: bool = False) -> PauliSumHamiltonian:
    """Open-chain Heisenberg model -1/2 sum_j (Jx XX + Jy YY + Jz ZZ + h Z_j).

    The field sits on sites 0..n-2 only, unless ``field_on_all_sites``.
    """
    if n < 2:
        raise InvalidSize("Heisenberg chain needs at least two qubits")
    terms = []
    for j in range(n - 1):
        terms.append((-0.5 * jx, _place(n, {j: "X", j + 1: "X"})))
        terms.append((-0.5 * jy, _place(n, {j: "Y", j + 1: "Y"})))
        terms.append((-0.5 * jz, _place(n, {j: "Z", j + 1: "Z"})))
        terms.append((-0.5 * h, _place(n, {j: "Z"})))
    if field_on_all_sites:
        terms.append((-0.5 * h, _place(n, {n - 1: "Z"})))
    return PauliSumHamiltonian.from_terms(n, terms)


def shift_and_square(ham: PauliSumHamiltonian, s: float) -> PauliSumHamiltonian:
    """Symbolic (H - sI)^2."""
    shifted = ham + identity(ham.n_qubits, -s) if s != 0 else ham
    return shifted @ shifted


def to_dense(ham: PauliSumHamiltonian) -> np.ndarray:
    if ham.n_qubits > MAX_DENSE_QUBITS:
        raise TooLarge(f"dense matrices are capped at {MAX_DENSE_QUBITS} qubits")
    dim = 1 << ham.n_qubits
    idx = np.arange(dim)
    m = np.zeros((dim, dim), dtype=complex)
    for x, d in ham._compiled:
        m[idx ^ x, idx] += d
    return m


def expectation_dense(ham: PauliSumHamiltonian, state: np.ndarray) -> float:
    return float(np.real(np.vdot(state, ham.apply(state))))


def parse_hamiltonian_file(text: str) -> PauliSumHamiltonian:
    """Parse ``<coefficient> <pauli string>`` lines; '#' starts a comment."""
    terms = []
    n_qubits = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected '<coefficient> <pauli string>', got {raw!r}", lineno)
        coeff_text, string = parts
        coeff_text = coeff_text.replace("−", "-")
        try:
            coeff = float(coeff_text)
        except ValueError:
            try:
                coeff = complex(coeff_text)
            except ValueError:
                raise ParseError(f"bad coefficient {coeff_text!r}", lineno) from None
        string = string.upper()
        bad = [c for c in string if c not in PAULI_LETTERS]
        if bad:
            raise ParseError(f"invalid Pauli letter {bad[0]!r}", lineno)
        if n_qubits is None:
            n_qubits = len(string)
        elif len(string) != n_qubits:
            raise ParseError(f"string {string!r} has length {len(string)}, expected {n_qubits}", lineno)
        terms.append((coeff, string))
    if n_qubits is None:
        raise ParseError("no terms found")
    return PauliSumHamiltonian.from_terms(n_qubits, terms)


def serialize_hamiltonian(ham: PauliSumHamiltonian) -> str:
    lines = [f"# {ham.n_qubits} qubits, {len(ham)} terms"]
    lines += [f"{coeff!r} {string}" for string, coeff in ham.items()]
    return "\n".join(lines) + "\n"


def load_hamiltonian(path) -> PauliSumHamiltonian:
    with open(path, encoding="utf-8") as fh:
        return parse_hamiltonian_file(fh.read())
