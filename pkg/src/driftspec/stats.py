"""Trend test, per-feature Fisher scores, and speed-limit bound calculators."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.stats import norm

from .errors import DegenerateLabels, DomainError, TooShort

BETA = 0.724
FISHER_FLOOR = 1e-15
EXACT_MAX_N = 10


# ---------------------------------------------------------------------------
# speed limits

@dataclass(frozen=True)
class SpeedLimitInput:
    delta_fid: float
    mean_excess: float
    beta: float = BETA

    def __post_init__(self):
        if not 0.0 <= self.delta_fid <= 1.0:
            raise DomainError(f"delta_fid must lie in [0, 1], got {self.delta_fid}")
        if not self.mean_excess > 0.0:
            raise DomainError(f"mean_excess must be positive, got {self.mean_excess}")
        if not self.beta > 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")


def tau_weakest(delta_fid, mean_excess: float | None = None, beta: float = BETA) -> float:
    """Lower bound on the time to reach fidelity ``delta_fid`` with the initial state.

    Accepts either a :class:`SpeedLimitInput` or the three numbers.
    """
    inp = delta_fid if isinstance(delta_fid, SpeedLimitInput) else SpeedLimitInput(delta_fid, mean_excess, beta)
    angle = math.acos(math.sqrt(inp.delta_fid))
    return 4.0 * angle ** 2 / (inp.beta * math.pi ** 2 * inp.mean_excess)


def tau_save(delta: float, mean_excess: float, beta: float = BETA) -> float:
    """Same bound written for a geodesic distance delta = arccos(sqrt(fidelity))."""
    if not 0.0 <= delta <= math.pi / 2:
        raise DomainError(f"delta must lie in [0, pi/2], got {delta}")
    if not mean_excess > 0.0 or not beta > 0.0:
        raise DomainError("mean_excess and beta must be positive")
    return 4.0 * delta ** 2 / (beta * math.pi ** 2 * mean_excess)


# ---------------------------------------------------------------------------
# Mann-Kendall

@dataclass(frozen=True)
class MannKendallResult:
    tau: float
    p_value: float
    s: int
    var_s: float
    z: float
    method: str


@lru_cache(maxsize=None)
def _inversion_counts(n: int) -> tuple[int, ...]:
    # number of permutations of n items with k inversions, k = 0..n(n-1)/2
    counts = [1]
    for m in range(2, n + 1):
        new = [0] * (len(counts) + m - 1)
        for k, c in enumerate(counts):
            for j in range(m):
                new[k + j] += c
        counts = new
    return tuple(counts)


def _exact_p(s_stat: int, n: int) -> float:
    # S = n(n-1)/2 - 2 * inversions for tie-free data
    counts = np.array(_inversion_counts(n), dtype=float)
    pairs = n * (n - 1) // 2
    s_values = pairs - 2 * np.arange(len(counts))
    mass = counts[np.abs(s_values) >= abs(s_stat)].sum()
    return float(mass / counts.sum())


def mann_kendall(series, exact: bool = False) -> MannKendallResult:
    """Two-sided Mann-Kendall trend test.

    The default p-value uses the normal approximation with continuity and tie
    corrections. ``exact=True`` enumerates the permutation null for tie-free
    series with n <= 10.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 4:
        raise TooShort(f"Mann-Kendall needs at least 4 values, got {n}")
    diffs = np.sign(x[None, :] - x[:, None])
    s_stat = int(np.triu(diffs, k=1).sum())
    tau = s_stat / (n * (n - 1) / 2)
    _, tie_sizes = np.unique(x, return_counts=True)
    ties = tie_sizes[tie_sizes > 1]
    var_s = (n * (n - 1) * (2 * n + 5) - float(np.sum(ties * (ties - 1) * (2 * ties + 5)))) / 18.0
    if var_s <= 0.0:
        return MannKendallResult(tau, 1.0, s_stat, var_s, 0.0, "normal")
    z = float(s_stat - np.sign(s_stat)) / math.sqrt(var_s) if s_stat != 0 else 0.0
    if exact:
        if n > EXACT_MAX_N or ties.size:
            raise DomainError("exact mode needs a tie-free series of length <= 10")
        return MannKendallResult(tau, _exact_p(s_stat, n), s_stat, var_s, z, "exact")
    p = float(2.0 * norm.sf(abs(z)))
    return MannKendallResult(tau, min(p, 1.0), s_stat, var_s, z, "normal")


# ---------------------------------------------------------------------------
# Fisher score

@dataclass(frozen=True)
class FisherScores:
    scores: np.ndarray
    infinite: np.ndarray
    ranking: np.ndarray

    def slot_fractions(self, n_params: int | None = None) -> np.ndarray:
        """Share of the total finite score carried by each parameter slot.

        Assumes the interleaved (cos, sin) embedding, two features per slot.
        """
        finite = np.where(self.infinite, 0.0, self.scores)
        per_slot = finite.reshape(-1, 2).sum(axis=1)
        if n_params is not None and per_slot.size != n_params:
            raise DomainError(f"{per_slot.size} slots in scores, expected {n_params}")
        total = per_slot.sum()
        return per_slot / total if total > 0 else np.zeros_like(per_slot)


def fisher_score(features, labels) -> FisherScores:
    """Between-class over within-class scatter, per feature column."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    if x.ndim != 2 or x.shape[0] != y.size:
        raise DomainError("features must be (n_points, n_features) matching labels")
    classes, sizes = np.unique(y, return_counts=True)
    if classes.size < 2 or np.any(sizes < 2):
        raise DegenerateLabels("need at least two classes with two members each")
    mean = x.mean(axis=0)
    between = np.zeros(x.shape[1])
    within = np.zeros(x.shape[1])
    for c, size in zip(classes, sizes):
        block = x[y == c]
        between += size * (block.mean(axis=0) - mean) ** 2
        within += size * block.var(axis=0)
    infinite = (within < FISHER_FLOOR) & (between > FISHER_FLOOR)
    scores = np.where(within < FISHER_FLOOR, np.where(infinite, np.inf, 0.0), between / np.maximum(within, FISHER_FLOOR))
    ranking = np.argsort(-scores, kind="stable")
    return FisherScores(scores, infinite, ranking)
