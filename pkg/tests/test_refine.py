import numpy as np
import pytest
from hypothesis import given, strategies as st

from driftspec.errors import InvalidWindow, ShapeMismatch, SingularShift, WindowViolation
from driftspec.hamiltonian import to_dense
from driftspec.numerics import hermitian_eigendecomposition
from driftspec.refine import (ChebyshevInverse, chebyshev_inverse_coeffs, chebyshev_nodes, inverse_power_iterate,
                              polynomial_inverse_power, reconstruct_state_from_params, spectral_window)
from driftspec.simulator import build_ansatz, uniform_state, zero_state

from conftest import random_hermitian, random_state

DIAG = np.diag([1.0, 2.0, 4.0])
UNIFORM3 = np.ones(3) / np.sqrt(3)


def test_diagonal_converges_to_nearest():
    res = inverse_power_iterate(DIAG, 1.9, UNIFORM3)
    assert res.converged
    assert res.eigenvalue_estimate == pytest.approx(2.0, abs=1e-10)
    assert abs(res.final_state[1]) == pytest.approx(1.0, abs=1e-9)
    assert len(res.history) == res.iterations and res.residual >= 0


def test_eigenvector_start_takes_one_iteration():
    res = inverse_power_iterate(DIAG, 1.9, np.array([0.0, 1.0, 0.0]))
    assert res.iterations == 1 and res.converged


def test_singular_shift_and_shape():
    with pytest.raises(SingularShift):
        inverse_power_iterate(DIAG, 2.0, UNIFORM3)
    with pytest.raises(ShapeMismatch):
        inverse_power_iterate(DIAG, 1.9, np.ones(4))


def test_non_convergence_is_flagged_not_raised():
    res = inverse_power_iterate(DIAG, 1.9, UNIFORM3, max_iters=2)
    assert not res.converged and res.iterations == 2


@given(st.integers(0, 10_000))
def test_fixed_point_residual_small(seed):
    rng = np.random.default_rng(seed)
    h = random_hermitian(rng, 6)
    lam = np.linalg.eigvalsh(h)
    s = float(lam[2] + 0.1 * (lam[3] - lam[2]))
    res = inverse_power_iterate(h, s, random_state(rng, 6), max_iters=5000)
    assert res.converged
    assert res.residual < 10 * 1e-10
    assert res.eigenvalue_estimate == pytest.approx(lam[2], abs=1e-9)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=6, unique=True), st.floats(0.05, 0.45))
def test_rayleigh_error_monotone_inside_interval(levels, frac):
    lam = np.sort(levels)
    if np.min(np.diff(lam)) < 1e-2:
        return
    # shift a fraction of the way from the lowest level to the next midpoint
    s = lam[0] + frac * (lam[1] - lam[0])
    res = inverse_power_iterate(np.diag(lam), s, np.ones(len(lam)) / np.sqrt(len(lam)), max_iters=2000)
    errs = np.abs(np.array(res.history) - lam[0])
    assert np.all(np.diff(errs) <= 1e-12)


# ---------------------------------------------------------------------------
# Chebyshev surrogate

def test_window_guards():
    for bounds in [(1.0, 1.0), (0.0, 1.0), (2.0, 1.0), (1e-6, 1.0)]:
        with pytest.raises(InvalidWindow):
            chebyshev_inverse_coeffs(11, bounds)
    with pytest.raises(InvalidWindow):
        chebyshev_inverse_coeffs(10, (0.1, 2.0))


def test_interpolates_at_nodes():
    approx = chebyshev_inverse_coeffs(15, (0.2, 3.0))
    nodes = chebyshev_nodes(15, 0.2, 3.0)
    np.testing.assert_allclose(approx(nodes), 1.0 / nodes, rtol=1e-10)


def test_degree21_error_by_dense_scan():
    approx = chebyshev_inverse_coeffs(21, (0.1, 2.0))
    grid = np.linspace(0.1, 2.0, 10_000)
    dense = float(np.max(np.abs(approx(grid) - 1.0 / grid)))
    assert dense < 1e-3
    assert approx.max_error == pytest.approx(dense, rel=1e-6)


def test_error_shrinks_with_degree():
    errs = [chebyshev_inverse_coeffs(d, (0.1, 2.0)).max_error for d in (11, 21, 31)]
    assert errs[0] > errs[1] > errs[2]


@given(st.floats(0.1, 2.0))
def test_odd_extension(x):
    approx = chebyshev_inverse_coeffs(21, (0.1, 2.0))
    assert isinstance(approx, ChebyshevInverse)
    assert approx(-x) == pytest.approx(-approx(x), abs=1e-15)


def test_polynomial_matches_exact_on_diagonal():
    exact = inverse_power_iterate(DIAG, 1.9, UNIFORM3)
    poly = polynomial_inverse_power(DIAG, 1.9, UNIFORM3, degree=21)
    assert poly.method == "poly_inverse"
    assert poly.eigenvalue_estimate == pytest.approx(exact.eigenvalue_estimate, abs=1e-6)


def test_high_degree_tracks_exact_step_for_step(heisenberg4):
    eig = hermitian_eigendecomposition(to_dense(heisenberg4))
    v0 = uniform_state(4)
    exact = inverse_power_iterate(eig, -1.5, v0, tol=0.0, max_iters=15)
    poly = polynomial_inverse_power(eig, -1.5, v0, degree=151, tol=0.0, max_iters=15)
    np.testing.assert_allclose(poly.history, exact.history, atol=1e-8)


def test_degree_sweep_converges_toward_exact(heisenberg4):
    eig = hermitian_eigendecomposition(to_dense(heisenberg4))
    v0 = uniform_state(4)
    exact = inverse_power_iterate(eig, -0.8, v0, tol=0.0, max_iters=8)
    errs = [abs(polynomial_inverse_power(eig, -0.8, v0, degree=d, tol=0.0, max_iters=8).eigenvalue_estimate
                - exact.eigenvalue_estimate) for d in (11, 21, 31)]
    assert errs[0] >= errs[1] >= errs[2]


def test_orthogonal_start_finds_another_level():
    res = inverse_power_iterate(DIAG, 1.9, np.array([1.0, 0.0, 1.0]) / np.sqrt(2))
    assert res.eigenvalue_estimate == pytest.approx(1.0, abs=1e-9)


def test_window_violation():
    with pytest.raises(WindowViolation):
        polynomial_inverse_power(DIAG, 1.9, UNIFORM3, degree=21, bounds=(0.5, 3.0))


def test_spectral_window_margin():
    eig = hermitian_eigendecomposition(DIAG)
    a, b = spectral_window(eig, 1.9)
    assert a == pytest.approx(0.95 * 0.1) and b == pytest.approx(1.05 * 2.1)


# ---------------------------------------------------------------------------
# warm starts

def test_zero_angles_give_zero_state():
    circ = build_ansatz("c0", 4)
    np.testing.assert_allclose(reconstruct_state_from_params(circ, np.zeros(circ.n_params)), zero_state(4),
                               atol=1e-15)


def test_reconstruct_checks_shape():
    with pytest.raises(ShapeMismatch):
        reconstruct_state_from_params(build_ansatz("c0", 4), np.zeros(3))
