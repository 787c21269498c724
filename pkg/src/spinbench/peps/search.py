"""Branch-and-bound search in probability space plus droplet extraction.

Partial assignments are extended node by node in row-major order; at each
step the beam keeps the `max_states` candidates of largest marginal
probability (products of boundary-MPS conditionals, tracked in the log
domain) and drops branches whose probability falls below `cutoff_prob`
times the current best. Completed branches are decoded to spins and
re-ranked by exact Ising energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, StructureError
from ..model import energy_many, lexicographic_key
from .contraction import SweepCache, conditional_probability
from .network import TRANSFORMS, PepsNetwork, build_peps
from .potts import ClusterAssignment, PottsHamiltonian, cluster_to_potts


@dataclass(frozen=True)
class DropletParams:
    max_energy: float
    min_hamming: int


@dataclass(frozen=True)
class SearchParams:
    max_states: int = 256
    cutoff_prob: float = 0.0
    chi: int = 64
    tol: float = 1e-12
    sweeps: int = 1
    droplets: DropletParams | None = None

    def __post_init__(self):
        if self.max_states < 1:
            raise DomainError("max_states must be >= 1")
        if not 0 <= self.cutoff_prob < 1:
            raise DomainError("cutoff_prob must lie in [0, 1)")


@dataclass(frozen=True)
class Droplet:
    """Localized excitation: a flip mask over spins relative to the reference."""

    flip_mask: np.ndarray  # bool, (N,)
    excitation: float
    size: int


@dataclass(frozen=True)
class SearchEntry:
    potts_state: tuple[int, ...]
    spins: np.ndarray
    energy: float
    log_probability: float
    degeneracy: int


@dataclass
class SearchSolution:
    """Ranked low-energy states with search provenance and droplets."""

    entries: list[SearchEntry]
    largest_discarded_probability: float
    droplets: list[Droplet]
    transform: str = "identity"

    @property
    def ground_energy(self) -> float:
        return self.entries[0].energy

    @property
    def ground_state(self) -> np.ndarray:
        return self.entries[0].spins

    @property
    def energies(self) -> np.ndarray:
        return np.array([e.energy for e in self.entries])


def _exact_energies(potts: PottsHamiltonian, beam, spins: np.ndarray) -> np.ndarray:
    if potts.source is not None:
        return energy_many(potts.source, spins)
    return np.array([potts.potts_energy(states) for states, _ in beam])


def branch_and_bound(network: PepsNetwork,
                     params: SearchParams = SearchParams()) -> SearchSolution:
    """Beam search over Potts nodes ranked by boundary-MPS marginals."""
    cache = SweepCache(network, chi=params.chi, tol=params.tol,
                       sweeps=params.sweeps)
    beam: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    largest_discarded = 0.0

    for node in network.node_order:
        children: list[tuple[tuple[int, ...], float]] = []
        for states, logp in beam:
            probs = conditional_probability(network, states, node, cache=cache)
            for v, p in enumerate(probs):
                if p > 0.0:
                    children.append((states + (v,), logp + math.log(p)))
        if not children:
            raise StructureError("all branches washed out")
        children.sort(key=lambda item: (-item[1], item[0]))
        best = children[0][1]
        cut = len(children)
        if params.cutoff_prob > 0.0:
            floor = best + math.log(params.cutoff_prob)
            while cut > 1 and children[cut - 1][1] < floor:
                cut -= 1
        cut = min(cut, params.max_states)
        if cut < len(children):
            largest_discarded = max(largest_discarded,
                                    math.exp(children[cut][1]))
        beam = children[:cut]

    potts = network.potts
    spins = np.stack([potts.decode(states) for states, _ in beam])
    energies = _exact_energies(potts, beam, spins)
    order = sorted(range(len(beam)),
                   key=lambda k: (energies[k], lexicographic_key(spins[k])))

    entries: list[SearchEntry] = []
    for k in order:
        states, logp = beam[k]
        entries.append(SearchEntry(potts_state=states, spins=spins[k],
                                   energy=float(energies[k]),
                                   log_probability=logp, degeneracy=1))
    entries = _group_degeneracies(entries)

    solution = SearchSolution(entries=entries,
                              largest_discarded_probability=largest_discarded,
                              droplets=[], transform=network.transform)
    if params.droplets is not None:
        solution.droplets = extract_droplets(
            solution, solution.ground_state,
            params.droplets.max_energy, params.droplets.min_hamming)
    return solution


def _group_degeneracies(entries: list[SearchEntry]) -> list[SearchEntry]:
    out: list[SearchEntry] = []
    start = 0
    for i in range(1, len(entries) + 1):
        if i == len(entries) or entries[i].energy != entries[start].energy:
            count = i - start
            for e in entries[start:i]:
                out.append(SearchEntry(e.potts_state, e.spins, e.energy,
                                       e.log_probability, count))
            start = i
    return out


def extract_droplets(solution: SearchSolution, reference: np.ndarray,
                     max_energy: float, min_hamming: int) -> list[Droplet]:
    """Diverse excitations above the reference, greedy in energy order.

    A flip mask is accepted when its excitation is within `max_energy` and
    its Hamming distance to the reference and to every accepted droplet is
    at least `min_hamming`.
    """
    reference = np.asarray(reference, dtype=np.int8)
    e_ref = None
    for entry in solution.entries:
        if np.array_equal(entry.spins, reference):
            e_ref = entry.energy
            break
    if e_ref is None:
        raise DomainError("reference configuration is not a retained state")

    accepted: list[Droplet] = []
    for entry in solution.entries:
        excitation = entry.energy - e_ref
        if excitation > max_energy:
            continue
        mask = entry.spins != reference
        size = int(mask.sum())
        if size < min_hamming:
            continue
        far_enough = all(
            int(np.sum(mask != d.flip_mask)) >= min_hamming for d in accepted)
        if far_enough:
            accepted.append(Droplet(flip_mask=mask, excitation=float(excitation),
                                    size=size))
    return accepted


def solve_with_transforms(model, assignment: ClusterAssignment, beta: float,
                          params: SearchParams = SearchParams()
                          ) -> SearchSolution:
    """Run the search once per lattice symmetry and keep the best result."""
    potts = cluster_to_potts(model, assignment)
    best: SearchSolution | None = None
    for name in TRANSFORMS:
        network = build_peps(potts, beta, name)
        solution = branch_and_bound(network, params)
        if best is None or solution.ground_energy < best.ground_energy:
            best = solution
    return best
