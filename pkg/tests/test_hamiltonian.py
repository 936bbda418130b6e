from functools import reduce

import numpy as np
import pytest
from hypothesis import given, strategies as st

from driftspec.errors import LengthMismatch, NonHermitian, ParseError, TooLarge
from driftspec.hamiltonian import (PauliSumHamiltonian, build_heisenberg_1d, identity, multiply_pauli_strings,
                                   parse_hamiltonian_file, serialize_hamiltonian, shift_and_square, to_dense)

from conftest import HEISENBERG4_SPECTRUM, random_state

PAULI = {"I": np.eye(2), "X": np.array([[0, 1], [1, 0]]), "Y": np.array([[0, -1j], [1j, 0]]),
         "Z": np.diag([1.0, -1.0])}


def kron_string(p: str) -> np.ndarray:
    # character q acts on bit q of the index, so the last character is the leftmost factor
    return reduce(np.kron, [PAULI[c] for c in reversed(p)])


pauli_strings = lambda n: st.text("IXYZ", min_size=n, max_size=n)


def random_hamiltonian(draw_terms, n):
    return PauliSumHamiltonian.from_terms(n, draw_terms)


hamiltonians = st.integers(1, 3).flatmap(
    lambda n: st.lists(st.tuples(st.floats(-2, 2, allow_nan=False), pauli_strings(n)), min_size=1, max_size=6)
    .map(lambda terms: (n, terms)))


def test_product_table_examples():
    assert multiply_pauli_strings("X", "Y") == (1j, "Z")
    assert multiply_pauli_strings("Z", "Z") == (1, "I")
    phase, r = multiply_pauli_strings("XY", "YX")
    assert r == "ZZ" and phase == 1


@given(st.integers(1, 3).flatmap(lambda n: st.tuples(pauli_strings(n), pauli_strings(n))))
def test_product_matches_matrices(pq):
    p, q = pq
    phase, r = multiply_pauli_strings(p, q)
    np.testing.assert_allclose(kron_string(p) @ kron_string(q), phase * kron_string(r), atol=1e-14)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        multiply_pauli_strings("XX", "X")


def test_merge_and_prune():
    h = PauliSumHamiltonian.from_terms(2, [(0.5, "XZ"), (0.25, "XZ"), (1e-14, "ZZ"), (-1.0, "IY")])
    assert dict(h.terms) == {"XZ": 0.75, "IY": -1.0}


def test_imaginary_weight_rejected():
    with pytest.raises(NonHermitian):
        PauliSumHamiltonian.from_terms(1, [(1j, "X")])


def test_dense_little_endian():
    # Z on qubit 0 flips the sign of odd indices
    np.testing.assert_allclose(to_dense(PauliSumHamiltonian(2, {"ZI": 1.0})).diagonal(), [1, -1, 1, -1])


@given(hamiltonians)
def test_dense_matches_kron(case):
    n, terms = case
    h = PauliSumHamiltonian.from_terms(n, terms)
    expected = sum((c * kron_string(p) for p, c in h.items()), np.zeros((2 ** n, 2 ** n)))
    np.testing.assert_allclose(to_dense(h), expected, atol=1e-12)


@given(hamiltonians, st.floats(-3, 3, allow_nan=False))
def test_shift_and_square_oracle(case, s):
    n, terms = case
    h = PauliSumHamiltonian.from_terms(n, terms)
    d = to_dense(h) - s * np.eye(2 ** n)
    np.testing.assert_allclose(to_dense(shift_and_square(h, s)), d @ d, atol=1e-10)


@given(hamiltonians, st.integers(0, 2 ** 32 - 1))
def test_apply_matches_dense(case, seed):
    n, terms = case
    h = PauliSumHamiltonian.from_terms(n, terms)
    v = random_state(np.random.default_rng(seed), 2 ** n)
    np.testing.assert_allclose(h.apply(v), to_dense(h) @ v, atol=1e-12)


def test_apply_batched(heisenberg4):
    v = random_state(np.random.default_rng(0), 16 * 3).reshape(16, 3)
    np.testing.assert_allclose(heisenberg4.apply(v), to_dense(heisenberg4) @ v, atol=1e-12)


def test_heisenberg_term_layout():
    h = build_heisenberg_1d(3, 0.5, 0.5, 0.6, 1.0)
    assert h.terms["XXI"] == -0.25 and h.terms["IZZ"] == -0.3
    assert h.terms["ZII"] == -0.5 and h.terms["IZI"] == -0.5
    assert "IIZ" not in h.terms
    full = build_heisenberg_1d(3, 0.5, 0.5, 0.6, 1.0, field_on_all_sites=True)
    assert full.terms["IIZ"] == -0.5


def test_heisenberg4_spectrum(heisenberg4):
    np.testing.assert_allclose(np.linalg.eigvalsh(to_dense(heisenberg4)), HEISENBERG4_SPECTRUM, atol=1e-10)


def test_dense_cap():
    with pytest.raises(TooLarge):
        to_dense(identity(14))


def test_parse_roundtrip(heisenberg4):
    again = parse_hamiltonian_file(serialize_hamiltonian(heisenberg4))
    assert dict(again.terms) == dict(heisenberg4.terms)


def test_parse_features():
    text = "# comment\n0.5 XZ   # trailing\n\n−0.25 zz\n(0.1+0j) XZ\n"
    h = parse_hamiltonian_file(text)
    assert h.n_qubits == 2
    assert h.terms == {"XZ": 0.6, "ZZ": -0.25}


@pytest.mark.parametrize("text, line", [("1.0 XQ\n", 1), ("1.0 XX\n2.0 XXX\n", 2), ("abc XX\n", 1),
                                        ("1.0\n", 1)])
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as info:
        parse_hamiltonian_file(text)
    assert info.value.line == line


def test_parse_empty():
    with pytest.raises(ParseError):
        parse_hamiltonian_file("# nothing here\n")
