"""Clustering an Ising instance into a Potts model on a king's-graph grid.

Each grid cell groups k spins into one variable with d = 2^k states. Cell
state decoding follows the package bit convention: bit t of the state index
is 0 when the t-th spin of the cell (spins sorted ascending) is +1.

Pair energies between adjacent cells depend only on the spins that actually
cross the cell boundary, so each edge stores two index projections and a
compressed pair-energy matrix over the projected states.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import StructureError
from ..instances import LatticeSpec
from ..model import IsingModel, index_to_spins

CLUSTER_SIZE_CAP = 8  # local dimension <= 256

Cell = tuple[int, int]  # (row, col) on the grid

KING_STEPS = ((0, 1), (1, 0), (1, 1), (1, -1))  # E, S, SE, SW, stored once


@dataclass(frozen=True)
class ClusterAssignment:
    """Grid shape plus the list of spins owned by each cell."""

    rows: int
    cols: int
    cells: dict[Cell, tuple[int, ...]]

    @classmethod
    def from_lattice(cls, spec: LatticeSpec) -> "ClusterAssignment":
        cells = {(r, c): tuple(spec.cell_spins(r, c))
                 for r in range(spec.rows) for c in range(spec.cols)}
        return cls(spec.rows, spec.cols, cells)

    def cell_of(self) -> dict[int, Cell]:
        owner: dict[int, Cell] = {}
        for cell, spins in self.cells.items():
            for i in spins:
                if i in owner:
                    raise StructureError(f"spin {i} assigned to two cells")
                owner[i] = cell
        return owner


@dataclass(frozen=True)
class Projector:
    """Map from full cell states to the sub-configuration of boundary spins."""

    source_dim: int
    reduced_dim: int
    index_map: np.ndarray  # (source_dim,) values in [0, reduced_dim)
    positions: tuple[int, ...] = ()  # within-cell bit positions kept, ascending

    def __post_init__(self):
        if len(np.unique(self.index_map)) != self.reduced_dim:
            raise StructureError("projector is not surjective onto its range")


def _bit_extraction(k: int, positions: list[int]) -> Projector:
    """Projector keeping the bits of the given within-cell positions."""
    d = 1 << k
    states = np.arange(d, dtype=np.int64)
    reduced = np.zeros(d, dtype=np.int64)
    for t, pos in enumerate(positions):
        reduced |= ((states >> pos) & 1) << t
    return Projector(d, 1 << len(positions), reduced, tuple(positions))


def build_projectors(spins_a: tuple[int, ...], spins_b: tuple[int, ...],
                     crossings: list[tuple[int, int, float]]
                     ) -> tuple[Projector, Projector, np.ndarray]:
    """Edge compression: projections onto boundary spins plus the pair table.

    `crossings` lists (i, j, J) couplers with i in cell a and j in cell b.
    The pair matrix is indexed by the two reduced states and reproduces the
    summed crossing energies exactly.
    """
    boundary_a = sorted({i for i, _, _ in crossings})
    boundary_b = sorted({j for _, j, _ in crossings})
    pos_a = {i: spins_a.index(i) for i in boundary_a}
    pos_b = {j: spins_b.index(j) for j in boundary_b}
    proj_a = _bit_extraction(len(spins_a), [pos_a[i] for i in boundary_a])
    proj_b = _bit_extraction(len(spins_b), [pos_b[j] for j in boundary_b])

    table = np.zeros((proj_a.reduced_dim, proj_b.reduced_dim))
    for t_a, i in enumerate(boundary_a):
        for t_b, j in enumerate(boundary_b):
            jij = sum(w for (ii, jj, w) in crossings if ii == i and jj == j)
            if jij == 0.0:
                continue
            xa = np.arange(proj_a.reduced_dim)
            xb = np.arange(proj_b.reduced_dim)
            sa = 1.0 - 2.0 * ((xa >> t_a) & 1)
            sb = 1.0 - 2.0 * ((xb >> t_b) & 1)
            table += jij * np.outer(sa, sb)
    return proj_a, proj_b, table


@dataclass(frozen=True)
class PottsCell:
    spins: tuple[int, ...]  # ascending 1-based ids; bit t of a state = spins[t]
    local_energies: np.ndarray  # (2^k,)

    @property
    def dim(self) -> int:
        return len(self.local_energies)

    def decode(self, state: int) -> np.ndarray:
        return index_to_spins(state, len(self.spins))


@dataclass(frozen=True)
class PottsEdge:
    cell_a: Cell  # earlier in row-major order
    cell_b: Cell
    proj_a: Projector
    proj_b: Projector
    pair_energies: np.ndarray  # (reduced_a, reduced_b)

    def energy(self, state_a: int, state_b: int) -> float:
        return float(self.pair_energies[self.proj_a.index_map[state_a],
                                        self.proj_b.index_map[state_b]])


@dataclass(frozen=True)
class PottsHamiltonian:
    """Factor graph over grid cells with unary and compressed pair factors."""

    rows: int
    cols: int
    num_spins: int
    cells: dict[Cell, PottsCell]
    edges: dict[tuple[Cell, Cell], PottsEdge]
    source: IsingModel | None = None  # original model, for exact re-ranking

    @cached_property
    def node_order(self) -> list[Cell]:
        return [(r, c) for r in range(self.rows) for c in range(self.cols)]

    def edge_between(self, a: Cell, b: Cell) -> PottsEdge | None:
        key = (a, b) if a <= b else (b, a)
        return self.edges.get(key)

    def decode(self, states) -> np.ndarray:
        """Expand cell states (row-major order) into the full spin vector."""
        spins = np.zeros(self.num_spins, dtype=np.int8)
        for cell, state in zip(self.node_order, states):
            info = self.cells[cell]
            spins[np.array(info.spins) - 1] = info.decode(int(state))
        return spins

    def potts_energy(self, states) -> float:
        """Total energy of a cell-state assignment (row-major order)."""
        by_cell = dict(zip(self.node_order, (int(s) for s in states)))
        total = sum(self.cells[cell].local_energies[state]
                    for cell, state in by_cell.items())
        total += sum(edge.energy(by_cell[edge.cell_a], by_cell[edge.cell_b])
                     for edge in self.edges.values())
        return float(total)


def cluster_to_potts(model: IsingModel, assignment: ClusterAssignment,
                     size_cap: int = CLUSTER_SIZE_CAP) -> PottsHamiltonian:
    """Group spins into cells; intra-cell terms become local energies and
    cross-cell couplers become compressed pair factors on king-adjacent edges.
    """
    owner = assignment.cell_of()
    missing = set(range(1, model.num_spins + 1)) - set(owner)
    if missing:
        raise StructureError(f"spins {sorted(missing)} are not assigned to a cell")
    extra = set(owner) - set(range(1, model.num_spins + 1))
    if extra:
        raise StructureError(f"assigned spins {sorted(extra)} not in the model")

    cell_spins = {cell: tuple(sorted(spins))
                  for cell, spins in assignment.cells.items()}
    for cell, spins in cell_spins.items():
        if not spins:
            raise StructureError(f"cell {cell} owns no spins")
        if len(spins) > size_cap:
            raise StructureError(
                f"cell {cell} holds {len(spins)} spins, above the cap {size_cap}")

    intra: dict[Cell, list[tuple[int, int, float]]] = {c: [] for c in cell_spins}
    crossings: dict[tuple[Cell, Cell], list[tuple[int, int, float]]] = {}
    for (i, j), w in sorted(model.couplings.items()):
        ca, cb = owner[i], owner[j]
        if ca == cb:
            intra[ca].append((i, j, w))
            continue
        dr, dc = abs(ca[0] - cb[0]), abs(ca[1] - cb[1])
        if max(dr, dc) > 1:
            raise StructureError(
                f"coupling ({i},{j}) links non-adjacent cells {ca} and {cb}")
        if ca <= cb:
            crossings.setdefault((ca, cb), []).append((i, j, w))
        else:
            crossings.setdefault((cb, ca), []).append((j, i, w))

    cells: dict[Cell, PottsCell] = {}
    for cell, spins in cell_spins.items():
        k = len(spins)
        local = np.zeros(1 << k)
        pos = {s: t for t, s in enumerate(spins)}
        states = np.arange(1 << k, dtype=np.int64)
        svals = 1.0 - 2.0 * ((states[:, None] >> np.arange(k)[None, :]) & 1)
        for i, hval in model.fields.items():
            if owner[i] == cell:
                local += hval * svals[:, pos[i]]
        for (i, j, w) in intra[cell]:
            local += w * svals[:, pos[i]] * svals[:, pos[j]]
        cells[cell] = PottsCell(spins, local)

    edges: dict[tuple[Cell, Cell], PottsEdge] = {}
    for r in range(assignment.rows):
        for c in range(assignment.cols):
            for dr, dc in KING_STEPS:
                r2, c2 = r + dr, c + dc
                if not (0 <= r2 < assignment.rows and 0 <= c2 < assignment.cols):
                    continue
                a, b = (r, c), (r2, c2)
                key = (a, b) if a <= b else (b, a)
                cross = crossings.get(key, [])
                pa, pb, table = build_projectors(cell_spins[key[0]],
                                                 cell_spins[key[1]], cross)
                edges[key] = PottsEdge(key[0], key[1], pa, pb, table)
    return PottsHamiltonian(assignment.rows, assignment.cols, model.num_spins,
                            cells, edges, source=model)
