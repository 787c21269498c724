"""Ising and QUBO cost functions, exact conversions, and small-system Gibbs tables.

Conventions used throughout the package:

- Spins live in {-1, +1}; binary variables in {0, 1} with s = 2x - 1.
- Node ids are 1-based in all public maps (matching the COO file format);
  vectors are 0-based with position i-1 holding node i.
- The Ising energy is ``H(s) = sum_{(i,j)} J_ij s_i s_j + sum_i h_i s_i``.
- Basis index <-> configuration: bit (i-1) of the index is 0 for s_i = +1
  and 1 for s_i = -1, so index 0 is the all-up state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from .errors import CapacityError, DimensionError, DomainError

ENUMERATION_CAP = 20  # 2^20 states; keeps exact Gibbs tables interactive


def as_spins(values: Iterable[int], num_spins: int | None = None) -> np.ndarray:
    """Validate and convert a spin configuration to an int8 array."""
    s = np.asarray(values, dtype=np.int8).ravel()
    if num_spins is not None and s.size != num_spins:
        raise DimensionError(f"expected {num_spins} spins, got {s.size}")
    if not np.all(np.abs(s) == 1):
        raise DomainError("spin entries must be -1 or +1")
    return s


def index_to_spins(index: int, num_spins: int) -> np.ndarray:
    """Decode a basis index into spins (bit i-1 clear means s_i = +1)."""
    bits = (index >> np.arange(num_spins, dtype=np.uint64)) & 1
    return (1 - 2 * bits).astype(np.int8)


def spins_to_index(spins: np.ndarray) -> int:
    """Inverse of :func:`index_to_spins`."""
    bits = (1 - np.asarray(spins, dtype=np.int64)) // 2
    return int(np.dot(bits, 1 << np.arange(len(bits), dtype=np.int64)))


def all_spin_configs(num_spins: int) -> np.ndarray:
    """All 2^N configurations as an (2^N, N) int8 array in basis-index order."""
    n_states = 1 << num_spins
    idx = np.arange(n_states, dtype=np.uint64)[:, None]
    bits = (idx >> np.arange(num_spins, dtype=np.uint64)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def lexicographic_key(spins: np.ndarray) -> bytes:
    """Sort key ordering configurations lexicographically with -1 < +1."""
    return bytes(((np.asarray(spins, dtype=np.int16) + 1) // 2).astype(np.uint8))


def _normalized_pairs(couplings: Mapping[tuple[int, int], float],
                      num_spins: int) -> dict[tuple[int, int], float]:
    out: dict[tuple[int, int], float] = {}
    for (i, j), value in couplings.items():
        if not (1 <= i <= num_spins and 1 <= j <= num_spins):
            raise DimensionError(f"coupling ({i},{j}) outside 1..{num_spins}")
        if i == j:
            raise DomainError(f"self-coupling ({i},{i}); diagonal terms belong in fields")
        key = (i, j) if i < j else (j, i)
        if key in out:
            raise DomainError(f"duplicate coupling pair {key}")
        out[key] = float(value)
    return out


@dataclass(frozen=True)
class IsingModel:
    """Weighted-graph Ising cost function H(s) = sum J_ij s_i s_j + sum h_i s_i."""

    num_spins: int
    couplings: dict[tuple[int, int], float] = field(default_factory=dict)
    fields: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_spins < 1:
            raise DimensionError("num_spins must be positive")
        object.__setattr__(self, "couplings",
                           _normalized_pairs(self.couplings, self.num_spins))
        clean_fields: dict[int, float] = {}
        for i, value in self.fields.items():
            if not 1 <= i <= self.num_spins:
                raise DimensionError(f"field index {i} outside 1..{self.num_spins}")
            clean_fields[int(i)] = float(value)
        object.__setattr__(self, "fields", clean_fields)

    @cached_property
    def fields_vector(self) -> np.ndarray:
        h = np.zeros(self.num_spins)
        for i, value in self.fields.items():
            h[i - 1] = value
        return h

    @cached_property
    def pair_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Couplings as parallel (i-1, j-1, J) arrays sorted by pair."""
        pairs = sorted(self.couplings)
        ii = np.array([p[0] - 1 for p in pairs], dtype=np.int64)
        jj = np.array([p[1] - 1 for p in pairs], dtype=np.int64)
        ww = np.array([self.couplings[p] for p in pairs])
        return ii, jj, ww

    @cached_property
    def coupling_matrix(self) -> np.ndarray:
        """Symmetric (N, N) matrix with J_ij on both triangles, zero diagonal."""
        m = np.zeros((self.num_spins, self.num_spins))
        ii, jj, ww = self.pair_arrays
        m[ii, jj] = ww
        m[jj, ii] = ww
        return m

    @cached_property
    def adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """CSR neighbor lists (indptr, indices, weights) over 0-based nodes."""
        neighbors: list[list[tuple[int, float]]] = [[] for _ in range(self.num_spins)]
        for (i, j), w in sorted(self.couplings.items()):
            neighbors[i - 1].append((j - 1, w))
            neighbors[j - 1].append((i - 1, w))
        indptr = np.zeros(self.num_spins + 1, dtype=np.int64)
        indices: list[int] = []
        weights: list[float] = []
        for k, adj in enumerate(neighbors):
            adj.sort()
            indices.extend(a for a, _ in adj)
            weights.extend(w for _, w in adj)
            indptr[k + 1] = len(indices)
        return indptr, np.array(indices, dtype=np.int64), np.array(weights)

    def content_key(self) -> tuple:
        """Hashable snapshot used for seeding and cache keys."""
        return (self.num_spins, tuple(sorted(self.couplings.items())),
                tuple(sorted(self.fields.items())))


def energy_many(model: IsingModel, configs: np.ndarray) -> np.ndarray:
    """Ising energies of the rows of an (M, N) configuration array.

    Accumulates term by term in a fixed order (sorted couplings, then fields
    by node), so results are bit-identical regardless of batch size.
    """
    s = np.asarray(configs, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] != model.num_spins:
        raise DimensionError(f"expected (M, {model.num_spins}) array, got {s.shape}")
    ii, jj, ww = model.pair_arrays
    out = np.zeros(s.shape[0])
    for k in range(ww.size):
        out += ww[k] * s[:, ii[k]] * s[:, jj[k]]
    h = model.fields_vector
    for i in range(model.num_spins):
        if h[i] != 0.0:
            out += h[i] * s[:, i]
    return out


def energy(model: IsingModel, config: Iterable[int]) -> float:
    """Ising energy of one configuration."""
    s = as_spins(config, model.num_spins).astype(np.float64)
    return float(energy_many(model, s[None, :])[0])


def flip_energy_change(model: IsingModel, config: np.ndarray, k: int) -> float:
    """Energy change from flipping spin k (1-based) in `config`."""
    s = as_spins(config, model.num_spins).astype(np.float64)
    local = model.fields_vector[k - 1] + float(model.coupling_matrix[k - 1] @ s)
    return -2.0 * s[k - 1] * local


@dataclass(frozen=True)
class QuboModel:
    """Upper-triangular QUBO objective E(x) = sum Q_ii x_i + sum_{i<j} Q_ij x_i x_j."""

    num_vars: int
    entries: dict[tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if self.num_vars < 1:
            raise DimensionError("num_vars must be positive")
        folded: dict[tuple[int, int], float] = {}
        for (i, j), value in self.entries.items():
            if not (1 <= i <= self.num_vars and 1 <= j <= self.num_vars):
                raise DimensionError(f"entry ({i},{j}) outside 1..{self.num_vars}")
            # lower-triangular (symmetric) input folds into the upper triangle
            key = (i, j) if i <= j else (j, i)
            folded[key] = folded.get(key, 0.0) + float(value)
        object.__setattr__(self, "entries", folded)

    def diagonal(self, i: int) -> float:
        return self.entries.get((i, i), 0.0)


def qubo_energy(model: QuboModel, x: Iterable[int]) -> float:
    """QUBO objective value of a binary assignment."""
    xv = np.asarray(x, dtype=np.float64).ravel()
    if xv.size != model.num_vars:
        raise DimensionError(f"expected {model.num_vars} variables, got {xv.size}")
    if not np.all((xv == 0) | (xv == 1)):
        raise DomainError("binary entries must be 0 or 1")
    total = 0.0
    for (i, j), q in sorted(model.entries.items()):
        total += q * xv[i - 1] * (xv[j - 1] if j != i else 1.0)
    return total


def ising_to_qubo(model: IsingModel) -> tuple[QuboModel, float]:
    """Exact Ising -> QUBO conversion; returns (qubo, additive offset).

    Q_ij = 4 J_ij, Q_ii = 2 h_i - 2 sum_j J_ij, offset = sum J_ij - sum h_i,
    so that E_QUBO(x(s)) + offset = H(s) for every configuration.
    """
    entries: dict[tuple[int, int], float] = {}
    neighbor_sum = np.zeros(model.num_spins)
    for (i, j), jij in sorted(model.couplings.items()):
        entries[(i, j)] = 4.0 * jij
        neighbor_sum[i - 1] += jij
        neighbor_sum[j - 1] += jij
    h = model.fields_vector
    for i in range(1, model.num_spins + 1):
        entries[(i, i)] = 2.0 * h[i - 1] - 2.0 * neighbor_sum[i - 1]
    offset = float(sum(jij for _, jij in sorted(model.couplings.items()))
                   - np.sum(h))
    return QuboModel(model.num_spins, entries), offset


def qubo_to_ising(model: QuboModel) -> tuple[IsingModel, float]:
    """Exact QUBO -> Ising conversion; inverse of :func:`ising_to_qubo`."""
    couplings: dict[tuple[int, int], float] = {}
    neighbor_sum = np.zeros(model.num_vars)
    offdiag_total = 0.0
    for (i, j), q in sorted(model.entries.items()):
        if i == j:
            continue
        couplings[(i, j)] = q / 4.0
        neighbor_sum[i - 1] += q
        neighbor_sum[j - 1] += q
        offdiag_total += q
    fields: dict[int, float] = {}
    diag_total = 0.0
    for i in range(1, model.num_vars + 1):
        qii = model.diagonal(i)
        diag_total += qii
        hi = qii / 2.0 + neighbor_sum[i - 1] / 4.0
        fields[i] = hi
    offset = offdiag_total / 4.0 + diag_total / 2.0
    return IsingModel(model.num_vars, couplings, fields), offset


def map_config(values: Iterable[int]) -> np.ndarray:
    """Map spins to binaries (x = (s+1)/2) or binaries to spins (s = 2x-1).

    The all-ones vector is a fixed point of both directions and maps to itself.
    """
    v = np.asarray(values, dtype=np.int64).ravel()
    if np.all((v == -1) | (v == 1)):
        return ((v + 1) // 2).astype(np.int8)
    if np.all((v == 0) | (v == 1)):
        return (2 * v - 1).astype(np.int8)
    raise DomainError("entries must all lie in {-1,+1} or all in {0,1}")


def _all_energies(model: IsingModel, block_bits: int = 16) -> np.ndarray:
    """Energies of all 2^N configurations in basis-index order, blockwise."""
    n = model.num_spins
    n_states = 1 << n
    out = np.empty(n_states)
    block = 1 << min(block_bits, n)
    for start in range(0, n_states, block):
        idx = np.arange(start, start + block, dtype=np.uint64)[:, None]
        bits = (idx >> np.arange(n, dtype=np.uint64)[None, :]) & 1
        configs = 1.0 - 2.0 * bits
        out[start:start + block] = energy_many(model, configs)
    return out


@dataclass(frozen=True)
class GibbsTable:
    """Exact Gibbs distribution of a small model at inverse temperature beta."""

    beta: float
    num_spins: int
    probabilities: np.ndarray  # indexed by basis index
    log_partition: float
    energies: np.ndarray  # same indexing; kept for marginals and cross-checks

    def prob_of(self, config: Iterable[int]) -> float:
        s = as_spins(config, self.num_spins)
        return float(self.probabilities[spins_to_index(s)])

    def most_probable(self) -> np.ndarray:
        return index_to_spins(int(np.argmax(self.probabilities)), self.num_spins)

    def as_dict(self) -> dict[tuple[int, ...], float]:
        configs = all_spin_configs(self.num_spins)
        return {tuple(int(v) for v in configs[b]): float(self.probabilities[b])
                for b in range(len(self.probabilities))}


def gibbs_table(model: IsingModel, beta: float,
                cap: int = ENUMERATION_CAP) -> GibbsTable:
    """Exact enumeration of the Gibbs distribution with log-domain normalization."""
    if model.num_spins > cap:
        raise CapacityError(f"{model.num_spins} spins exceeds enumeration cap {cap}")
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    energies = _all_energies(model)
    logw = -beta * energies
    shift = np.max(logw)
    log_z = shift + np.log(np.sum(np.exp(logw - shift)))
    probs = np.exp(logw - log_z)
    return GibbsTable(beta=float(beta), num_spins=model.num_spins,
                      probabilities=probs, log_partition=float(log_z),
                      energies=energies)
