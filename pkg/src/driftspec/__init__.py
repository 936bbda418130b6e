"""Eigenspectrum estimation by drift sweeps of variational imaginary-time evolution."""
__version__ = "0.1.0"

from .hamiltonian import PauliSumHamiltonian, build_heisenberg_1d, shift_and_square, to_dense
from .ite import VITEConfig, exact_ite_energy, spectrum, vite_run
from .simulator import AnsatzCircuit, NoiseModel, build_ansatz

__all__ = [
    "AnsatzCircuit", "NoiseModel", "PauliSumHamiltonian", "VITEConfig", "build_ansatz",
    "build_heisenberg_1d", "exact_ite_energy", "shift_and_square", "spectrum", "to_dense", "vite_run",
]
