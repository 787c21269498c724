"""Tensor-network solver: Potts clustering, square-lattice network of Gibbs
weights, boundary-MPS contraction, and branch-and-bound search."""

from .contraction import (BoundaryMps, SweepCache, boundary_mps,
                          conditional_probability, log_partition_function)
from .network import TRANSFORMS, PepsNetwork, build_peps, transform_potts
from .potts import (CLUSTER_SIZE_CAP, ClusterAssignment, PottsCell, PottsEdge,
                    PottsHamiltonian, Projector, build_projectors,
                    cluster_to_potts)
from .search import (Droplet, DropletParams, SearchEntry, SearchParams,
                     SearchSolution, branch_and_bound, extract_droplets,
                     solve_with_transforms)

__all__ = [
    "BoundaryMps", "SweepCache", "boundary_mps", "conditional_probability",
    "log_partition_function", "TRANSFORMS", "PepsNetwork", "build_peps",
    "transform_potts", "CLUSTER_SIZE_CAP", "ClusterAssignment", "PottsCell",
    "PottsEdge", "PottsHamiltonian", "Projector", "build_projectors",
    "cluster_to_potts", "Droplet", "DropletParams", "SearchEntry",
    "SearchParams", "SearchSolution", "branch_and_bound", "extract_droplets",
    "solve_with_transforms",
]
