"""Pipeline configuration: dataclasses, TOML loading, manifest hashing, seed streams.

Config files are TOML with one level of sections::

    [hamiltonian]
    model = "heisenberg"      # or: file = "h.txt"
    n = 4
    jx = 0.5
    jy = 0.5
    jz = 0.6
    h = 1.0

    [ansatz]
    family = "c0"
    layers = 1

    [grid]                    # omitted bounds default to [lambda_min - step, lambda_max + step]
    step = 0.25

    [vite]
    dt = 0.1
    steps = 25
    lambda_reg = 1e-6
    record_at = [5, 10, 15, 20, 25]
    max_angle_step = 0.3      # optional cap on max |angle change| per step

    [clustering]
    hopkins_fraction = 0.25   # in (0, 0.5]

    [run]
    base_seed = 7
    out_dir = "runs/heisenberg4"
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .simulator import FAMILIES

GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# seeding

class SplitMix64:
    """64-bit SplitMix sequence.

    state += 0x9E3779B97F4A7C15; z = state; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
    z = (z ^ z>>27) * 0x94D049BB133111EB; return z ^ z>>31 (all mod 2^64).
    ``uniform()`` maps the top 53 bits to [0, 1).
    """

    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * 2.0 ** -53


def derive_seed(base_seed: int, index: int) -> int:
    """Per-grid-point seed: base_seed XOR (index * golden gamma mod 2^64)."""
    return (int(base_seed) ^ ((int(index) * GOLDEN_GAMMA) & MASK64)) & MASK64


def initial_angles(seed: int, n_params: int) -> np.ndarray:
    """Uniform angles in [0, 2 pi), drawn in slot order from SplitMix64(seed)."""
    gen = SplitMix64(seed)
    return np.array([2.0 * math.pi * gen.uniform() for _ in range(n_params)])


# ---------------------------------------------------------------------------
# config sections

@dataclass(frozen=True)
class HamiltonianConfig:
    model: str = "heisenberg"
    file: str | None = None
    n: int = 4
    jx: float = 0.5
    jy: float = 0.5
    jz: float = 0.6
    h: float = 1.0
    field_on_all_sites: bool = False

    def __post_init__(self):
        if self.file is None and self.model != "heisenberg":
            raise ValueError(f"unknown Hamiltonian model {self.model!r}; use 'heisenberg' or give a file")


@dataclass(frozen=True)
class AnsatzConfig:
    family: str = "c0"
    layers: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"ansatz family must be one of {FAMILIES}")
        if self.layers < 1:
            raise ValueError("layers must be at least 1")


@dataclass(frozen=True)
class GridConfig:
    start: float | None = None
    stop: float | None = None
    step: float = 0.25

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("grid step must be positive")
        if self.start is not None and self.stop is not None and not self.start < self.stop:
            raise ValueError("grid start must be below stop")

    def points(self, lam_min: float | None = None, lam_max: float | None = None) -> np.ndarray:
        start = self.start if self.start is not None else lam_min - self.step
        stop = self.stop if self.stop is not None else lam_max + self.step
        count = int(math.floor((stop - start) / self.step + 1e-9)) + 1
        return start + self.step * np.arange(count)


@dataclass(frozen=True)
class ViteSection:
    dt: float = 0.1
    steps: int = 25
    lambda_reg: float = 1e-6
    record_at: tuple[int, ...] = (5, 10, 15, 20, 25)
    max_angle_step: float | None = None


@dataclass(frozen=True)
class NoiseConfig:
    p1: float = 0.0
    p2: float = 0.0


@dataclass(frozen=True)
class ClusteringConfig:
    k_min: int = 2
    k_max: int = 12
    restarts: int = 50
    hopkins_repeats: int = 100
    hopkins_fraction: float = 0.25
    iqr_multiplier: float = 1.5
    snapshot_step: int | None = None  # None: last recorded step


@dataclass(frozen=True)
class RefinementConfig:
    method: str = "exact_inverse"
    degree: int = 31
    tol: float = 1e-10
    max_iters: int = 500

    def __post_init__(self):
        if self.method not in ("exact_inverse", "poly_inverse"):
            raise ValueError("refinement method must be exact_inverse or poly_inverse")


@dataclass(frozen=True)
class NoiseStudyConfig:
    p1: float = 0.001
    p2_levels: tuple[float, ...] = (0.005, 0.010, 0.030)
    baseline: bool = True  # prepend the noiseless run so the trend test has >= 4 points


@dataclass(frozen=True)
class RunConfig:
    base_seed: int = 0
    inits: int = 1
    out_dir: str = "out"
    workers: int = 1


_RESULT_NEUTRAL = ("out_dir", "workers")


@dataclass(frozen=True)
class PipelineConfig:
    hamiltonian: HamiltonianConfig = field(default_factory=HamiltonianConfig)
    ansatz: AnsatzConfig = field(default_factory=AnsatzConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    vite: ViteSection = field(default_factory=ViteSection)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    refinement: RefinementConfig = field(default_factory=RefinementConfig)
    noise_study: NoiseStudyConfig = field(default_factory=NoiseStudyConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def manifest_hash(self) -> str:
        """sha256 of the canonical JSON config, ignoring where outputs go and how many workers run."""
        content = self.to_dict()
        for key in _RESULT_NEUTRAL:
            content["run"].pop(key)
        canonical = json.dumps(content, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def replace(self, section: str, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})


_SECTIONS = {f.name: f for f in dataclasses.fields(PipelineConfig)}


def _section_type(name: str):
    return {"hamiltonian": HamiltonianConfig, "ansatz": AnsatzConfig, "grid": GridConfig,
            "vite": ViteSection, "noise": NoiseConfig, "clustering": ClusteringConfig,
            "refinement": RefinementConfig, "noise_study": NoiseStudyConfig, "run": RunConfig}[name]


def config_from_dict(raw: dict[str, Any]) -> PipelineConfig:
    sections = {}
    for name, values in raw.items():
        if name not in _SECTIONS:
            raise ValueError(f"unknown config section [{name}]")
        if not isinstance(values, dict):
            raise ValueError(f"[{name}] must be a table")
        cls = _section_type(name)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown keys in [{name}]: {sorted(unknown)}")
        values = {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}
        sections[name] = cls(**values)
    return PipelineConfig(**sections)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    with path.open("rb") as fh:
        raw = tomllib.load(fh)
    ham = raw.get("hamiltonian", {})
    if ham.get("file") and not Path(ham["file"]).is_absolute():
        ham["file"] = str((path.parent / ham["file"]).resolve())
    return config_from_dict(raw)
