"""spinbench: spin-glass solvers, tensor-network search, benchmarking metrics,
thermodynamic bounds, and exact annealing dynamics."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .model import (GibbsTable, IsingModel, QuboModel, energy, energy_many,
                    gibbs_table, ising_to_qubo, map_config, qubo_energy,
                    qubo_to_ising)

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND", "GibbsTable", "IsingModel", "QuboModel", "energy",
    "energy_many", "gibbs_table", "ising_to_qubo", "map_config",
    "qubo_energy", "qubo_to_ising", "__version__",
]
