"""Dense Hermitian linear algebra used by every oracle in the package.

The eigensolver is a cyclic Jacobi method run in round-robin (tournament)
order, so each round rotates N/2 disjoint index pairs at once with
vectorised numpy updates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, NoConvergence, NonHermitianInput, SingularSystem

HERMITIAN_TOL = 1e-10
OFFDIAG_TOL = 1e-12
MAX_SWEEPS = 60
DEFAULT_LAMBDA_REG = 1e-6
COND_LIMIT = 1e14
POLE_TOL = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    """M = U diag(eigenvalues) U^dagger with eigenvalues ascending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T

    def apply_function(self, f: Callable) -> np.ndarray:
        """U f(Lambda) U^dagger; raises DomainError if f is undefined anywhere."""
        try:
            with np.errstate(divide="raise", invalid="raise", over="raise"):
                vals = np.array([f(float(x)) for x in self.eigenvalues])
        except (ZeroDivisionError, FloatingPointError, ValueError, OverflowError) as exc:
            raise DomainError(f"function undefined on spectrum: {exc}") from exc
        if not np.all(np.isfinite(vals)):
            raise DomainError("function is not finite on the spectrum")
        u = self.eigenvectors
        return (u * vals) @ u.conj().T


def check_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonHermitianInput(f"expected a square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev > tol:
        raise NonHermitianInput(f"matrix deviates from Hermitian by {dev:.3e}")
    return m


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings covering every (p, q) once per sweep; n must be even."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        p = np.array(players[: n // 2])
        q = np.array(players[n // 2:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def hermitian_eigendecomposition(m, *, tol: float = OFFDIAG_TOL,
                                 max_sweeps: int = MAX_SWEEPS,
                                 hermitian_tol: float = HERMITIAN_TOL) -> EigenDecomposition:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix."""
    m = check_hermitian(np.asarray(m, dtype=complex), hermitian_tol)
    n = m.shape[0]
    a = 0.5 * (m + m.conj().T)
    if n == 0:
        return EigenDecomposition(np.zeros(0), np.zeros((0, 0), dtype=complex))
    scale = np.linalg.norm(a)
    if n == 1 or scale == 0.0:
        return EigenDecomposition(np.real(np.diag(a)).copy(), np.eye(n, dtype=complex))

    # pad odd sizes with a decoupled dummy index
    size = n + (n % 2)
    if size != n:
        a = np.pad(a, ((0, 1), (0, 1)))
    v = np.eye(size, dtype=complex)
    rounds = _round_robin(size)
    target = tol * scale
    h = size // 2
    # order[k] = original index currently stored at position k
    order = np.arange(size)
    where = np.empty(size, dtype=int)

    def offdiag(x):
        off = x.copy()
        np.fill_diagonal(off, 0.0)
        return np.linalg.norm(off)

    for _ in range(max_sweeps):
        if offdiag(a) < target:
            break
        for p, q in rounds:
            # bring pair members into contiguous halves: positions [0, h) and [h, 2h)
            where[order] = np.arange(size)
            perm = where[np.concatenate([p, q])]
            a = a[np.ix_(perm, perm)]
            v = v[:, perm]
            order = order[perm]
            apq = np.diagonal(a[:h, h:]).copy()
            mag = np.abs(apq)
            active = mag > 1e-300
            if not np.any(active):
                continue
            safe = np.where(active, mag, 1.0)
            phase = np.where(active, apq / safe, 1.0)
            diag = np.real(np.diagonal(a))
            tau = (diag[h:] - diag[:h]) / (2.0 * safe)
            t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            # J restricted to (p, q) = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]
            ph = phase.conj()
            left, right = a[:, :h].copy(), a[:, h:]
            a[:, :h] = c * left - (s * ph) * right
            a[:, h:] = s * left + (c * ph) * right
            top, bottom = a[:h].copy(), a[h:]
            a[:h] = c[:, None] * top - (s * phase)[:, None] * bottom
            a[h:] = s[:, None] * top + (c * phase)[:, None] * bottom
            left, right = v[:, :h].copy(), v[:, h:]
            v[:, :h] = c * left - (s * ph) * right
            v[:, h:] = s * left + (c * ph) * right
    else:
        if offdiag(a) >= target:
            raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")

    # rows of v stay in the original basis; columns follow positions
    keep = order < n
    vals = np.real(np.diagonal(a))[keep]
    vecs = v[:n][:, keep]
    idx = np.argsort(vals, kind="stable")
    return EigenDecomposition(vals[idx].copy(), vecs[:, idx].copy())


def solve_regularized(a, b, lambda_reg: float = DEFAULT_LAMBDA_REG, *,
                      cond_limit: float = COND_LIMIT) -> np.ndarray:
    """Solve (A + lambda_reg I) x = b for symmetric positive semidefinite A."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != (a.shape[0],):
        raise ValueError(f"shape mismatch: A {a.shape}, b {b.shape}")
    if lambda_reg < 0:
        raise ValueError("lambda_reg must be nonnegative")
    eig = hermitian_eigendecomposition(a + lambda_reg * np.eye(len(b)))
    vals = eig.eigenvalues
    top = np.max(np.abs(vals)) if len(vals) else 0.0
    low = np.min(np.abs(vals)) if len(vals) else 0.0
    if top == 0.0 or low == 0.0 or top / low > cond_limit:
        raise SingularSystem(f"regularized system is numerically singular (min |eig| = {low:.3e})")
    u = eig.eigenvectors.real
    return u @ ((u.T @ b) / vals)


def hermitian_matrix_function(m, f: Callable) -> np.ndarray:
    """U f(Lambda) U^dagger for Hermitian M."""
    if isinstance(m, EigenDecomposition):
        return m.apply_function(f)
    return hermitian_eigendecomposition(m).apply_function(f)


def hermitian_inverse(m, pole_tol: float = POLE_TOL) -> np.ndarray:
    eig = m if isinstance(m, EigenDecomposition) else hermitian_eigendecomposition(m)
    if np.any(np.abs(eig.eigenvalues) < pole_tol):
        raise DomainError("matrix has an eigenvalue at zero")
    return eig.apply_function(lambda x: 1.0 / x)
