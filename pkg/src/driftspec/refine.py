"""Spectrum refinement from cluster medians by (approximate) inverse power iteration.

The polynomial variant is a classical stand-in for a QSVT-implemented inverse:
1/x is replaced by a Chebyshev interpolant on the window a <= |x| <= b,
extended to negative x by odd symmetry, and applied through the spectral
decomposition of H - sI.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev

from .errors import InvalidWindow, NoConvergence, ShapeMismatch, SingularShift, WindowViolation
from .hamiltonian import PauliSumHamiltonian, to_dense
from .numerics import EigenDecomposition, hermitian_eigendecomposition
from .simulator import AnsatzCircuit, apply_circuit

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITERS = 500
SINGULAR_TOL = 1e-12
WINDOW_MARGIN = 0.05
MIN_WINDOW_RATIO = 1e-4


@dataclass
class RefinementResult:
    eigenvalue_estimate: float
    final_state: np.ndarray = field(repr=False)
    iterations: int
    residual: float
    history: list[float]
    converged: bool
    method: str = "exact_inverse"

    def iterations_to(self, target: float, threshold: float = 1e-8) -> int | None:
        """First iteration whose energy is within ``threshold`` of ``target``."""
        for k, e in enumerate(self.history, start=1):
            if abs(e - target) < threshold:
                return k
        return None


def _decompose(ham) -> EigenDecomposition:
    if isinstance(ham, EigenDecomposition):
        return ham
    if isinstance(ham, PauliSumHamiltonian):
        return hermitian_eigendecomposition(to_dense(ham))
    return hermitian_eigendecomposition(np.asarray(ham))


def _power_loop(eig: EigenDecomposition, transfer: np.ndarray, v0, tol: float, max_iters: int,
                method: str) -> RefinementResult:
    u = eig.eigenvectors
    v0 = np.asarray(v0, dtype=complex)
    if v0.shape != (eig.dim,):
        raise ShapeMismatch(f"initial state has shape {v0.shape}, expected ({eig.dim},)")
    coords = u.conj().T @ (v0 / np.linalg.norm(v0))
    lam = eig.eigenvalues
    energy = float(np.sum(lam * np.abs(coords) ** 2))
    history = []
    converged = False
    for _ in range(max_iters):
        coords = transfer * coords
        norm = np.linalg.norm(coords)
        if norm == 0.0:
            raise NoConvergence("iterate vanished: no overlap with the amplified eigenvectors")
        coords /= norm
        new_energy = float(np.sum(lam * np.abs(coords) ** 2))
        history.append(new_energy)
        # energy settles quadratically faster than the state, so also demand a small residual
        done = abs(new_energy - energy) < tol and np.linalg.norm((lam - new_energy) * coords) < 10 * tol
        energy = new_energy
        if done:
            converged = True
            break
    state = u @ coords
    residual = float(np.linalg.norm((lam - energy) * coords))
    return RefinementResult(energy, state, len(history), residual, history, converged, method)


def inverse_power_iterate(ham, s: float, v0, tol: float = DEFAULT_TOL,
                          max_iters: int = DEFAULT_MAX_ITERS) -> RefinementResult:
    """v <- normalize((H - sI)^-1 v) until <H> moves by less than tol and the residual is below 10 tol.

    Non-convergence is reported through ``converged=False`` rather than raised.
    """
    eig = _decompose(ham)
    shifted = eig.eigenvalues - s
    if np.min(np.abs(shifted)) < SINGULAR_TOL:
        raise SingularShift(f"s={s} coincides with an eigenvalue")
    return _power_loop(eig, 1.0 / shifted, v0, tol, max_iters, "exact_inverse")


@dataclass(frozen=True)
class ChebyshevInverse:
    """Odd-symmetric approximation p(x) = sign(x) q(|x|) of 1/x on a <= |x| <= b."""

    degree: int
    a: float
    b: float
    series: Chebyshev = field(repr=False)
    max_error: float

    @property
    def coefficients(self) -> np.ndarray:
        return self.series.coef

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.sign(x) * self.series(np.abs(x))


def chebyshev_nodes(degree: int, a: float, b: float) -> np.ndarray:
    j = np.arange(degree + 1)
    t = np.cos(np.pi * (j + 0.5) / (degree + 1))
    return 0.5 * (a + b) + 0.5 * (b - a) * t


def chebyshev_inverse_coeffs(degree: int, bounds, n_check: int = 10_000) -> ChebyshevInverse:
    """Interpolate 1/x at the degree+1 Chebyshev nodes of [a, b]."""
    a, b = (float(v) for v in bounds)
    if not (0.0 < a < b) or a / b < MIN_WINDOW_RATIO:
        raise InvalidWindow(f"need 0 < a < b with a/b >= {MIN_WINDOW_RATIO}, got [{a}, {b}]")
    if degree < 1 or degree % 2 == 0:
        raise InvalidWindow(f"degree must be a positive odd integer, got {degree}")
    nodes = chebyshev_nodes(degree, a, b)
    series = Chebyshev.fit(nodes, 1.0 / nodes, degree, domain=[a, b])
    grid = np.linspace(a, b, n_check)
    err = float(np.max(np.abs(series(grid) - 1.0 / grid)))
    return ChebyshevInverse(degree, a, b, series, err)


def spectral_window(eig: EigenDecomposition, s: float, margin: float = WINDOW_MARGIN) -> tuple[float, float]:
    mags = np.abs(eig.eigenvalues - s)
    return (1.0 - margin) * float(mags.min()), (1.0 + margin) * float(mags.max())


def polynomial_inverse_power(ham, s: float, v0, degree: int = 31, max_iters: int = DEFAULT_MAX_ITERS,
                             tol: float = DEFAULT_TOL, bounds=None) -> RefinementResult:
    """Inverse power iteration with p(H - sI) in place of (H - sI)^-1."""
    eig = _decompose(ham)
    shifted = eig.eigenvalues - s
    gap = float(np.min(np.abs(shifted)))
    if bounds is None:
        if gap < SINGULAR_TOL:
            raise SingularShift(f"s={s} coincides with an eigenvalue")
        bounds = spectral_window(eig, s)
    elif gap < bounds[0]:
        raise WindowViolation(f"nearest eigenvalue is {gap:.3g} from s, inside the excluded window {bounds[0]:.3g}")
    approx = chebyshev_inverse_coeffs(degree, bounds)
    result = _power_loop(eig, approx(shifted), v0, tol, max_iters, "poly_inverse")
    return result


def reconstruct_state_from_params(ansatz: AnsatzCircuit, theta, initial=None) -> np.ndarray:
    """Warm-start state: the ansatz at theta applied to |0...0> (or ``initial``)."""
    return apply_circuit(ansatz, theta, initial)
