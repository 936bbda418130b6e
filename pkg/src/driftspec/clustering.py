"""Classical stage: angle embedding, clusterability, k-means with silhouette
selection, IQR outlier removal and median-s spectrum estimates."""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import beta as beta_dist

from .errors import (DimensionMismatch, EmptyCluster, KTooLarge, MixedAnsatz, SingleCluster, TooFewPoints,
                     TooFewValues)
from .ite import ParameterRecord
from .simulator import AnsatzCircuit, apply_circuit

log = logging.getLogger(__name__)

IQR_MULTIPLIER = 1.5
SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class EmbeddedDataset:
    points: np.ndarray
    s_values: np.ndarray
    records: tuple = field(default=(), repr=False)

    def __len__(self):
        return len(self.points)


def embed_angles(records: Sequence[ParameterRecord]) -> EmbeddedDataset:
    """Row i = (cos t_0, sin t_0, ..., cos t_{P-1}, sin t_{P-1}) of record i."""
    if not records:
        return EmbeddedDataset(np.zeros((0, 0)), np.zeros(0), ())
    tags = {r.ansatz_tag for r in records}
    sizes = {len(r.theta) for r in records}
    if len(tags) > 1 or len(sizes) > 1:
        raise MixedAnsatz(f"records mix ansatz tags {sorted(tags)} / parameter counts {sorted(sizes)}")
    theta = np.array([r.theta for r in records], dtype=float)
    points = np.empty((len(records), 2 * theta.shape[1]))
    points[:, 0::2] = np.cos(theta)
    points[:, 1::2] = np.sin(theta)
    return EmbeddedDataset(points, np.array([r.s for r in records], dtype=float), tuple(records))


def _as_points(data) -> np.ndarray:
    return np.asarray(data.points if isinstance(data, EmbeddedDataset) else data, dtype=float)


def _pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return cdist(a, b)


# ---------------------------------------------------------------------------
# Hopkins statistic

class HopkinsResult(NamedTuple):
    mean: float
    p_value: float
    degenerate: bool
    values: np.ndarray
    sample_size: int


def hopkins_statistic(data, sample_fraction: float = 0.25, repeats: int = 100,
                      seed: int = 0) -> HopkinsResult:
    """Mean Hopkins statistic over repeats; ~0.5 for uniform data, near 1 for clustered data.

    Each repeat compares m uniform probes in the bounding box against m
    sampled data points (m = ceil(fraction * N)); p comes from the Beta(m, m)
    null evaluated at the mean.
    """
    x = _as_points(data)
    n = len(x)
    if n < 10:
        raise TooFewPoints(f"Hopkins statistic needs at least 10 points, got {n}")
    if not 0.0 < sample_fraction <= 0.5:
        raise ValueError("sample_fraction must lie in (0, 0.5]")
    m = math.ceil(sample_fraction * n)
    rng = np.random.default_rng(seed)
    lo, hi = x.min(axis=0), x.max(axis=0)
    values = np.empty(repeats)
    degenerate = False
    for r in range(repeats):
        probes = rng.uniform(lo, hi, size=(m, x.shape[1]))
        u = _pairwise(probes, x).min(axis=1)
        picks = rng.choice(n, size=m, replace=False)
        d = _pairwise(x[picks], x)
        d[np.arange(m), picks] = np.inf
        w = d.min(axis=1)
        total = u.sum() + w.sum()
        if total == 0.0:
            values[r] = 1.0
            degenerate = True
        else:
            values[r] = u.sum() / total
    mean = float(values.mean())
    p_value = float(beta_dist.sf(mean, m, m))
    return HopkinsResult(mean, p_value, degenerate, values, m)


# ---------------------------------------------------------------------------
# k-means

class KMeansResult(NamedTuple):
    assignment: np.ndarray
    centroids: np.ndarray
    inertia: float
    history: tuple


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(x)
    centers = [x[rng.integers(n)]]
    d2 = ((x - centers[0]) ** 2).sum(1)
    for _ in range(1, k):
        total = d2.sum()
        idx = rng.choice(n, p=d2 / total) if total > 0 else rng.integers(n)
        centers.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(1))
    return np.array(centers)


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iters: int) -> KMeansResult:
    history = []
    assign = None
    for _ in range(max_iters):
        d2 = _pairwise(x, centers) ** 2
        new_assign = d2.argmin(axis=1)
        history.append(float(d2[np.arange(len(x)), new_assign].sum()))
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for c in range(len(centers)):
            members = x[assign == c]
            if len(members):
                centers[c] = members.mean(axis=0)
            else:
                # reseed an empty cluster at the point farthest from its centroid
                far = d2[np.arange(len(x)), assign].argmax()
                centers[c] = x[far]
    d2 = _pairwise(x, centers) ** 2
    assign = d2.argmin(axis=1)
    inertia = float(d2[np.arange(len(x)), assign].sum())
    return KMeansResult(assign, centers, inertia, tuple(history))


def kmeans(data, k: int, restarts: int = 50, max_iters: int = 300, seed: int = 0) -> KMeansResult:
    """Lloyd iterations from k-means++ seeding; best of ``restarts`` by inertia."""
    x = _as_points(data)
    if k < 1:
        raise ValueError("k must be positive")
    if k > len(x):
        raise KTooLarge(f"k={k} exceeds the number of points {len(x)}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        res = _lloyd(x, _kmeanspp(x, k, rng), max_iters)
        if best is None or res.inertia < best.inertia - 1e-12:
            best = res
    return best


def silhouette(data, assignment) -> float:
    """Mean silhouette coefficient; singleton clusters contribute 0."""
    x = _as_points(data)
    labels = np.asarray(assignment)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        raise SingleCluster("silhouette needs at least two clusters")
    d = _pairwise(x, x)
    scores = np.zeros(len(x))
    for i in range(len(x)):
        same = labels == labels[i]
        n_same = same.sum()
        if n_same == 1:
            continue
        a = d[i, same].sum() / (n_same - 1)
        b = min(d[i, labels == c].mean() for c in uniq if c != labels[i])
        denom = max(a, b)
        scores[i] = 0.0 if denom == 0 else (b - a) / denom
    return float(scores.mean())


# ---------------------------------------------------------------------------
# outliers and spectrum estimates

def iqr_filter(values, multiplier: float = IQR_MULTIPLIER) -> np.ndarray:
    """Drop values outside the Tukey fences [Q1 - m IQR, Q3 + m IQR]."""
    v = np.asarray(values, dtype=float)
    if len(v) < 4:
        raise TooFewValues(f"IQR filtering needs at least 4 values, got {len(v)}")
    q1, q3 = np.quantile(v, [0.25, 0.75])
    spread = q3 - q1
    keep = (v >= q1 - multiplier * spread) & (v <= q3 + multiplier * spread)
    return v[keep]


def circular_median(theta: np.ndarray) -> np.ndarray:
    """Per-slot median of (cos, sin) re-projected with atan2, wrapped to [0, 2 pi)."""
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    c = np.median(np.cos(theta), axis=0)
    s = np.median(np.sin(theta), axis=0)
    return np.mod(np.arctan2(s, c), 2.0 * np.pi)


@dataclass
class ClusterSummary:
    cluster_id: int
    members: list[float]
    filtered: list[float]
    median_s: float
    s_interval: tuple[float, float]
    median_theta: list[float]
    n_outliers: int


@dataclass
class ClusterReport:
    k: int
    assignment: list[int]
    centroids: list[list[float]]
    inertia: float
    mean_silhouette: float
    hopkins_mean: float
    hopkins_p: float
    clusters: list[ClusterSummary]
    silhouette_by_k: dict = field(default_factory=dict)
    ansatz_tag: str = ""
    warnings: list[str] = field(default_factory=list)
    degenerate: bool = False

    def to_json(self, manifest_hash: str | None = None) -> str:
        payload = asdict(self)
        payload["silhouette_by_k"] = {str(k): v for k, v in self.silhouette_by_k.items()}
        if manifest_hash:
            payload["manifest_sha256"] = manifest_hash
        return json.dumps(payload, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ClusterReport":
        payload = json.loads(text)
        payload.pop("manifest_sha256", None)
        payload["clusters"] = [ClusterSummary(**{**c, "s_interval": tuple(c["s_interval"])})
                               for c in payload["clusters"]]
        payload["silhouette_by_k"] = {int(k): v for k, v in payload.get("silhouette_by_k", {}).items()}
        return cls(**payload)


def summarize_cluster(cluster_id: int, s_values: np.ndarray, theta: np.ndarray,
                      multiplier: float = IQR_MULTIPLIER) -> ClusterSummary:
    s_values = np.asarray(s_values, dtype=float)
    if len(s_values) == 0:
        raise EmptyCluster(f"cluster {cluster_id} has no members")
    if len(s_values) >= 4:
        filtered = iqr_filter(s_values, multiplier)
    else:
        filtered = s_values.copy()
    keep = np.isin(s_values, filtered)
    order = np.argsort(s_values, kind="stable")
    return ClusterSummary(
        cluster_id=cluster_id,
        members=[float(v) for v in s_values[order]],
        filtered=[float(v) for v in np.sort(filtered)],
        median_s=float(np.median(filtered)),
        s_interval=(float(filtered.min()), float(filtered.max())),
        median_theta=[float(v) for v in circular_median(theta[keep])],
        n_outliers=int(len(s_values) - len(filtered)),
    )


def default_k_range(n_points: int) -> range:
    return range(2, min(12, n_points - 1) + 1)


def select_k_and_cluster(data: EmbeddedDataset, k_range: Sequence[int] | None = None,
                         restarts: int = 50, seed: int = 0, *, hopkins_repeats: int = 100,
                         hopkins_fraction: float = 0.25,
                         iqr_multiplier: float = IQR_MULTIPLIER) -> ClusterReport:
    """k-means for each k, keep the k with the largest mean silhouette (ties -> smaller k)."""
    x = data.points
    n = len(x)
    if n < 3:
        raise TooFewPoints(f"clustering needs at least 3 points, got {n}")
    k_range = list(default_k_range(n) if k_range is None else k_range)
    if any(k < 2 or k > n - 1 for k in k_range):
        raise KTooLarge(f"k_range must lie within [2, {n - 1}]")
    warnings = []
    degenerate = False
    if n >= 10:
        hop = hopkins_statistic(data, hopkins_fraction, hopkins_repeats, seed)
        hop_mean, hop_p, degenerate = hop.mean, hop.p_value, hop.degenerate
        if hop_p >= SIGNIFICANCE:
            warnings.append(f"Hopkins p={hop_p:.3g}: data not significantly clusterable")
    else:
        hop_mean, hop_p = float("nan"), float("nan")
        warnings.append("fewer than 10 points: Hopkins statistic skipped")

    n_distinct = len(np.unique(np.round(x, 12), axis=0))
    best = None
    scores = {}
    for k in k_range:
        if k > n_distinct:
            continue
        res = kmeans(x, k, restarts=restarts, seed=seed)
        if len(np.unique(res.assignment)) < k:
            continue
        score = silhouette(x, res.assignment)
        scores[k] = score
        if best is None or score > best[0] + 1e-12:
            best = (score, k, res)
    if best is None:
        degenerate = True
        warnings.append("no valid k: all points coincide; reporting a single cluster")
        res = KMeansResult(np.zeros(n, dtype=int), x.mean(axis=0, keepdims=True),
                           float(((x - x.mean(axis=0)) ** 2).sum()), ())
        best = (0.0, 1, res)
    score, k, res = best
    if k == 1:
        warnings.append("single cluster spans the whole grid: separation failed")
    theta = np.array([r.theta for r in data.records]) if data.records else np.zeros((n, 0))
    clusters = []
    # relabel clusters in order of increasing median s so ids are reproducible
    raw = []
    for c in range(k):
        mask = res.assignment == c
        raw.append(summarize_cluster(c, data.s_values[mask], theta[mask], iqr_multiplier))
    order = sorted(range(k), key=lambda c: (raw[c].median_s, raw[c].members[0]))
    relabel = {old: new for new, old in enumerate(order)}
    for new, old in enumerate(order):
        summary = raw[old]
        summary.cluster_id = new
        clusters.append(summary)
    assignment = [relabel[int(c)] for c in res.assignment]
    centroids = [[float(v) for v in res.centroids[old]] for old in order]
    tag = data.records[0].ansatz_tag if data.records else ""
    return ClusterReport(k=k, assignment=assignment, centroids=centroids, inertia=res.inertia,
                         mean_silhouette=score, hopkins_mean=hop_mean, hopkins_p=hop_p,
                         clusters=clusters, silhouette_by_k=scores, ansatz_tag=tag,
                         warnings=warnings, degenerate=degenerate)


def estimate_spectrum(report: ClusterReport) -> list[tuple[float, tuple[float, float]]]:
    """(median s, [min, max] of filtered s) per cluster, sorted by median."""
    out = []
    for c in report.clusters:
        if not c.filtered:
            raise EmptyCluster(f"cluster {c.cluster_id} is empty after filtering")
        out.append((float(np.median(c.filtered)), (min(c.filtered), max(c.filtered))))
    if len(out) == 1:
        log.warning("a single cluster covers the sweep; spectrum separation failed")
    return sorted(out)


def boxplot_rows(report: ClusterReport) -> list[dict]:
    rows = []
    for c in report.clusters:
        f = np.array(c.filtered)
        q1, med, q3 = np.quantile(f, [0.25, 0.5, 0.75])
        rows.append({"cluster_id": c.cluster_id, "min": float(f.min()), "q1": float(q1),
                     "median": float(med), "q3": float(q3), "max": float(f.max()),
                     "n_members": len(c.members), "n_outliers": c.n_outliers})
    return rows


# ---------------------------------------------------------------------------
# separation check against exact eigenvectors

@dataclass(frozen=True)
class ClusterSeparationCriteria:
    delta: float
    eps1: float
    eps2: float

    def __post_init__(self):
        if not (math.pi / 2 > self.eps2 > 2 * self.delta > self.delta > self.eps1 > 0):
            raise ValueError("need pi/2 > eps2 > 2 delta > delta > eps1 > 0")


def ray_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over phi of ||a - e^{i phi} b||_2 for unit vectors: sqrt(2 - 2|<a|b>|)."""
    overlap = min(abs(np.vdot(a, b)), 1.0)
    return math.sqrt(max(2.0 - 2.0 * overlap, 0.0))


@dataclass
class SeparationReport:
    distances: np.ndarray
    nearest: np.ndarray
    within_delta: np.ndarray
    eigenvector_separation_ok: bool
    intra_class_ok: bool
    verdict: bool


def validate_separation(records: Sequence[ParameterRecord], ansatz: AnsatzCircuit,
                        criteria: ClusterSeparationCriteria, eigvecs: np.ndarray,
                        initial=None) -> SeparationReport:
    """Check that each record's state sits within delta of exactly one eigenvector class.

    Distances are ray distances, so global phases (including the sign picked up
    when angles are wrapped by 2 pi) do not matter.
    """
    eigvecs = np.asarray(eigvecs)
    dim = 1 << ansatz.n_qubits
    if eigvecs.shape[0] != dim:
        raise DimensionMismatch(f"eigenvectors have dimension {eigvecs.shape[0]}, circuit has {dim}")
    states = [apply_circuit(ansatz, r.theta, initial) for r in records]
    dist = np.array([[ray_distance(psi, eigvecs[:, j]) for j in range(eigvecs.shape[1])] for psi in states])
    nearest = dist.argmin(axis=1) if len(states) else np.zeros(0, dtype=int)
    within = (dist < criteria.delta).sum(axis=1) == 1 if len(states) else np.zeros(0, dtype=bool)
    # orthogonal eigenvectors are sqrt(2) apart; the inter-class bound needs eps2 below that
    sep_ok = math.sqrt(2.0) > criteria.eps2
    intra_ok = True
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            if nearest[i] == nearest[j] and ray_distance(states[i], states[j]) >= 2 * criteria.delta:
                intra_ok = False
    verdict = bool(np.all(within)) and sep_ok and intra_ok
    return SeparationReport(dist, nearest, within, sep_ok, intra_ok, verdict)
