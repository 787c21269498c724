"""Certified ground states, low-energy spectra, and exact conditionals.

Everything here enumerates the full configuration space, so results are
ground truth for the solvers; caps keep calls interactive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import _kernels
from .errors import CapacityError, DomainError
from .model import (ENUMERATION_CAP, IsingModel, all_spin_configs, as_spins,
                    energy_many, lexicographic_key)

BRUTE_FORCE_CAP = 24
GROUND_STATE_CAP = 32


@dataclass(frozen=True)
class Spectrum:
    """The k lowest-energy configurations, ascending, ties in lex order."""

    energies: np.ndarray  # (k,)
    states: np.ndarray  # (k, N) int8

    def __len__(self) -> int:
        return len(self.energies)

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.states[0]

    def levels(self) -> list[tuple[float, int, np.ndarray]]:
        """Group degenerate states: list of (energy, degeneracy, states)."""
        out = []
        start = 0
        for i in range(1, len(self.energies) + 1):
            if i == len(self.energies) or self.energies[i] != self.energies[start]:
                out.append((float(self.energies[start]), i - start,
                            self.states[start:i]))
                start = i
        return out


def _sort_candidates(model: IsingModel, bits: np.ndarray,
                     k: int) -> Spectrum:
    states = np.empty((len(bits), model.num_spins), dtype=np.int8)
    shifts = np.arange(model.num_spins, dtype=np.uint64)
    for row, b in enumerate(bits):
        states[row] = 1 - 2 * ((int(b) >> shifts) & 1).astype(np.int8)
    energies = energy_many(model, states)
    order = sorted(range(len(bits)),
                   key=lambda r: (energies[r], lexicographic_key(states[r])))
    order = order[:k]
    return Spectrum(energies=energies[order], states=states[order])


def brute_force(model: IsingModel, k: int = 100,
                cap: int = BRUTE_FORCE_CAP) -> Spectrum:
    """k lowest-energy configurations by exhaustive Gray-code traversal.

    Selection runs on incrementally updated energies; the returned energies
    are re-evaluated from scratch, so they agree exactly with `energy`.
    Ties are broken lexicographically with -1 < +1.
    """
    n = model.num_spins
    if n > cap:
        raise CapacityError(f"{n} spins exceeds brute-force cap {cap}")
    k = min(k, 1 << n)
    indptr, indices, weights = model.adjacency
    bits, _ = _kernels.gray_topk(n, indptr, indices, weights,
                                 model.fields_vector, k)
    return _sort_candidates(model, bits, k)


def ground_state(model: IsingModel,
                 cap: int = GROUND_STATE_CAP) -> tuple[np.ndarray, float]:
    """Certified minimum via the full Gray-code scan; returns (config, energy).

    Handles larger systems than `brute_force` since only the running best is
    tracked. On exactly degenerate instances the witness configuration may
    depend on the kernel backend; the energy does not.
    """
    n = model.num_spins
    if n > cap:
        raise CapacityError(f"{n} spins exceeds ground-state cap {cap}")
    indptr, indices, weights = model.adjacency
    bits, _ = _kernels.gray_min(n, indptr, indices, weights,
                                model.fields_vector)
    spectrum = _sort_candidates(model, np.array([bits], dtype=np.uint64), 1)
    return spectrum.states[0], float(spectrum.energies[0])


def ground_set(model: IsingModel, cap: int = BRUTE_FORCE_CAP,
               rel_tol: float = 1e-12) -> Spectrum:
    """All configurations sharing the minimal energy (degeneracies included)."""
    spectrum = brute_force(model, k=1 << min(model.num_spins, cap), cap=cap)
    e0 = spectrum.ground_energy
    tol = rel_tol * max(1.0, abs(e0))
    mask = spectrum.energies <= e0 + tol
    return Spectrum(energies=spectrum.energies[mask], states=spectrum.states[mask])


def exact_conditional(model: IsingModel, beta: float,
                      fixed: Mapping[int, int], target: int,
                      cap: int = ENUMERATION_CAP) -> np.ndarray:
    """p(s_target | fixed) over (-1, +1) by summing Boltzmann weights.

    `fixed` maps 1-based spin indices to +-1 values; all other spins are
    summed over. Returns the normalized pair [p(-1), p(+1)].
    """
    n = model.num_spins
    if n > cap:
        raise CapacityError(f"{n} spins exceeds enumeration cap {cap}")
    if not 1 <= target <= n:
        raise DomainError(f"target {target} outside 1..{n}")
    if target in fixed:
        raise ValueError(f"target spin {target} is already fixed")
    for i, v in fixed.items():
        if not 1 <= i <= n:
            raise DomainError(f"fixed index {i} outside 1..{n}")
        if v not in (-1, 1):
            raise DomainError(f"fixed value for spin {i} must be -1 or +1")

    configs = all_spin_configs(n)
    keep = np.ones(len(configs), dtype=bool)
    for i, v in fixed.items():
        keep &= configs[:, i - 1] == v
    configs = configs[keep]
    logw = -beta * energy_many(model, configs)
    out = np.empty(2)
    for col, value in enumerate((-1, 1)):
        sel = logw[configs[:, target - 1] == value]
        if sel.size == 0:
            out[col] = -np.inf
            continue
        m = np.max(sel)
        out[col] = m + np.log(np.sum(np.exp(sel - m)))
    shift = np.max(out)
    p = np.exp(out - shift)
    return p / p.sum()


def naive_spectrum(model: IsingModel, k: int,
                   cap: int = ENUMERATION_CAP) -> Spectrum:
    """Independent check of `brute_force`: full dense enumeration, same ordering."""
    n = model.num_spins
    if n > cap:
        raise CapacityError(f"{n} spins exceeds enumeration cap {cap}")
    configs = all_spin_configs(n)
    energies = energy_many(model, configs)
    order = sorted(range(len(configs)),
                   key=lambda r: (energies[r], lexicographic_key(configs[r])))
    order = order[:min(k, len(configs))]
    return Spectrum(energies=energies[order], states=configs[order])


def sample_gibbs(model: IsingModel, beta: float, count: int,
                 seed: int | Iterable[int],
                 cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Exact Gibbs samples by enumeration (inverse-CDF over all states)."""
    from .model import gibbs_table  # local import avoids cycle at module load

    table = gibbs_table(model, beta, cap=cap)
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(table.probabilities), size=count,
                     p=table.probabilities)
    return all_spin_configs(model.num_spins)[idx]


def verify_energies(model: IsingModel, states: np.ndarray,
                    energies: np.ndarray, tol: float = 1e-10) -> bool:
    """True when every stored energy matches a fresh evaluation."""
    fresh = energy_many(model, np.asarray(states, dtype=np.int8))
    return bool(np.all(np.abs(fresh - np.asarray(energies)) <= tol))


def hamming_distance(a: Iterable[int], b: Iterable[int]) -> int:
    return int(np.sum(as_spins(a) != as_spins(b)))
