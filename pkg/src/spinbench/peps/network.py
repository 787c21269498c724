"""Square-lattice tensor network of the Potts Gibbs weights.

The network is consumed row by row: `row_mpo(r)` yields, per column, the
operator that absorbs row r into a boundary chain living on the interface
between rows. Horizontal and diagonal pair factors travel along the chain
bond, which carries the triple (east projection of the current cell,
southeast part of the upper cell, northeast projection of the current cell).

All Boltzmann factors are shifted so their largest entry is 1; the shifts
accumulate in `log_shift` and are restored in partition-function values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import DomainError
from .potts import Cell, PottsEdge, PottsHamiltonian, Projector

TRANSFORMS = (
    "identity", "rot90", "rot180", "rot270",
    "reflect_h", "reflect_v", "reflect_diag", "reflect_antidiag",
)

# within-row directions an edge can take from its earlier (row-major) cell
_A_SIDE_DIRS = {(0, 1): "e", (1, 0): "s", (1, 1): "se", (1, -1): "sw"}
_OPPOSITE = {"e": "w", "s": "n", "se": "nw", "sw": "ne",
             "w": "e", "n": "s", "nw": "se", "ne": "sw"}


def transform_coords(cell: Cell, rows: int, cols: int,
                     name: str) -> tuple[Cell, int, int]:
    """Apply one of the eight square symmetries to grid coordinates."""
    r, c = cell
    if name == "identity":
        return (r, c), rows, cols
    if name == "rot90":
        return (c, rows - 1 - r), cols, rows
    if name == "rot180":
        return (rows - 1 - r, cols - 1 - c), rows, cols
    if name == "rot270":
        return (cols - 1 - c, r), cols, rows
    if name == "reflect_h":
        return (rows - 1 - r, c), rows, cols
    if name == "reflect_v":
        return (r, cols - 1 - c), rows, cols
    if name == "reflect_diag":
        return (c, r), cols, rows
    if name == "reflect_antidiag":
        return (cols - 1 - c, rows - 1 - r), cols, rows
    raise DomainError(f"unknown transform {name!r}")


def transform_potts(potts: PottsHamiltonian, name: str) -> PottsHamiltonian:
    """Remap the grid under a symmetry; factors and spin content are unchanged."""
    if name == "identity":
        return potts
    mapped: dict[Cell, Cell] = {}
    new_rows = new_cols = 0
    for cell in potts.cells:
        new_cell, new_rows, new_cols = transform_coords(
            cell, potts.rows, potts.cols, name)
        mapped[cell] = new_cell
    cells = {mapped[cell]: info for cell, info in potts.cells.items()}
    edges: dict[tuple[Cell, Cell], PottsEdge] = {}
    for edge in potts.edges.values():
        a, b = mapped[edge.cell_a], mapped[edge.cell_b]
        if a <= b:
            edges[(a, b)] = PottsEdge(a, b, edge.proj_a, edge.proj_b,
                                      edge.pair_energies)
        else:
            edges[(b, a)] = PottsEdge(b, a, edge.proj_b, edge.proj_a,
                                      edge.pair_energies.T)
    return PottsHamiltonian(new_rows, new_cols, potts.num_spins, cells, edges,
                            source=potts.source)


def _submap(union_positions: tuple[int, ...],
            edge_positions: tuple[int, ...]) -> np.ndarray:
    """Map a union-projection index to the sub-index of one edge's positions."""
    where = {pos: t for t, pos in enumerate(union_positions)}
    out = np.zeros(1 << len(union_positions), dtype=np.int64)
    for t, pos in enumerate(edge_positions):
        u = np.arange(1 << len(union_positions), dtype=np.int64)
        out |= ((u >> where[pos]) & 1) << t
    return out


_TRIVIAL_BOLT = np.ones((1, 1))


@dataclass
class _CellData:
    """Per-cell tensors and index machinery used by the row operators."""

    weights: np.ndarray  # (d,) Boltzmann factors, max-shifted to 1
    proj: dict[str, np.ndarray]  # own reduced-index map per direction
    rdim: dict[str, int]
    bolt: dict[str, np.ndarray]  # a-side directions only: (my_red, other_red)
    down_map: np.ndarray = field(default=None)  # (d,) union index for s|se|sw
    down_dim: int = 1
    sub: dict[str, np.ndarray] = field(default_factory=dict)  # union -> edge index


@dataclass
class PepsNetwork:
    """Grid of Boltzmann-weighted site factors plus projected pair factors."""

    potts: PottsHamiltonian
    beta: float
    transform: str
    log_shift: float
    cell_data: dict[Cell, _CellData]

    @property
    def rows(self) -> int:
        return self.potts.rows

    @property
    def cols(self) -> int:
        return self.potts.cols

    def dims(self, cell: Cell) -> int:
        return self.potts.cells[cell].dim

    @cached_property
    def node_order(self) -> list[Cell]:
        return self.potts.node_order

    def _data(self, r: int, c: int) -> _CellData | None:
        if 0 <= r < self.rows and 0 <= c < self.cols:
            return self.cell_data[(r, c)]
        return None

    def incoming(self, r: int, c: int, direction: str) -> np.ndarray:
        """Boltzmann matrix of the edge entering (r, c) from `direction`.

        Oriented (other_red, my_red); a trivial [[1]] when off-grid.
        """
        offsets = {"n": (-1, 0), "w": (0, -1), "nw": (-1, -1), "ne": (-1, 1)}
        dr, dc = offsets[direction]
        other = self._data(r + dr, c + dc)
        if other is None:
            return _TRIVIAL_BOLT
        return other.bolt[_OPPOSITE[direction]]

    def row_mpo(self, r: int) -> list[np.ndarray]:
        """Operators absorbing row r, one per column.

        Tensor indices: [left bond, top leg, bottom leg, right bond] where the
        top leg enumerates the union projection of cell (r-1, c), the bottom
        leg that of cell (r, c), and the bonds carry (east, southeast-from-top,
        northeast) triples.
        """
        out = []
        for c in range(self.cols):
            me = self.cell_data[(r, c)]
            top = self._data(r - 1, c)
            top_dim = top.down_dim if top else 1
            top_sub_s = top.sub["s"] if top else np.zeros(1, dtype=np.int64)
            top_sub_se = top.sub["se"] if top else np.zeros(1, dtype=np.int64)
            top_sub_sw = top.sub["sw"] if top else np.zeros(1, dtype=np.int64)

            b_s = self.incoming(r, c, "n")  # (top_s_red, my_n_red)
            b_e = self.incoming(r, c, "w")  # (left_e_red, my_w_red)
            b_se = self.incoming(r, c, "nw")  # (topleft_se_red, my_nw_red)

            d = len(me.weights)
            left = self._data(r, c - 1)
            e_in = left.rdim["e"] if left else 1
            ne_in = left.rdim["ne"] if left else 1
            se_in = (self._data(r - 1, c - 1).rdim["se"]
                     if self._data(r - 1, c - 1) else 1)
            e_out = me.rdim["e"]
            ne_out = me.rdim["ne"]
            se_out = (top.rdim["se"] if top else 1)

            # per-state factor tables
            f_s = b_s[top_sub_s][:, me.proj["n"]]  # (top_dim, d)
            f_e = b_e[:, me.proj["w"]]  # (e_in, d)
            f_se = b_se[:, me.proj["nw"]]  # (se_in, d)
            # the sw edge from the cell above lands one column left: couple the
            # incoming northeast index with the top cell's sw sub-state
            top_bolt_sw = top.bolt.get("sw", _TRIVIAL_BOLT) if top else _TRIVIAL_BOLT
            f_sw = top_bolt_sw[top_sub_sw]  # (top_dim, ne_in)

            one_e = np.eye(e_out)[me.proj["e"]]  # (d, e_out)
            one_ne = np.eye(ne_out)[me.proj["ne"]]  # (d, ne_out)
            one_se = np.eye(se_out)[top_sub_se]  # (top_dim, se_out)
            one_down = np.eye(me.down_dim)[me.down_map]  # (d, down_dim)

            # axes: a=e_in, b=se_in, c=ne_in, t=top leg, D=down leg,
            # E=e_out, S=se_out, N=ne_out; the cell state y is traced out
            tensor = np.einsum(
                "ty,ay,by,tc,y,yD,yE,yN,tS->abctDESN",
                f_s, f_e, f_se, f_sw, me.weights,
                one_down, one_e, one_ne, one_se, optimize=True)
            out.append(tensor.reshape(e_in * se_in * ne_in, top_dim,
                                      me.down_dim, e_out * se_out * ne_out))
        return out


def build_peps(potts: PottsHamiltonian, beta: float,
               transform: str = "identity") -> PepsNetwork:
    """Boltzmann-weight network for the (transformed) Potts model."""
    if beta < 0:
        raise DomainError("beta must be nonnegative")
    if transform not in TRANSFORMS:
        raise DomainError(f"unknown transform {transform!r}")
    potts = transform_potts(potts, transform)

    log_shift = 0.0
    cell_data: dict[Cell, _CellData] = {}
    for cell, info in potts.cells.items():
        e_min = float(np.min(info.local_energies))
        weights = np.exp(-beta * (info.local_energies - e_min))
        log_shift += -beta * e_min
        cell_data[cell] = _CellData(weights=weights, proj={}, rdim={}, bolt={})

    trivial = {c: Projector(potts.cells[c].dim, 1,
                            np.zeros(potts.cells[c].dim, dtype=np.int64), ())
               for c in potts.cells}
    for cell in potts.cells:
        for direction in ("e", "w", "n", "s", "ne", "nw", "se", "sw"):
            cell_data[cell].proj[direction] = trivial[cell].index_map
            cell_data[cell].rdim[direction] = 1

    projs: dict[Cell, dict[str, Projector]] = {c: {} for c in potts.cells}
    for (a, b), edge in potts.edges.items():
        da, dc = b[0] - a[0], b[1] - a[1]
        dir_a = _A_SIDE_DIRS[(da, dc)]
        dir_b = _OPPOSITE[dir_a]
        e_shift = float(np.min(edge.pair_energies))
        log_shift += -beta * e_shift
        bolt = np.exp(-beta * (edge.pair_energies - e_shift))
        cell_data[a].bolt[dir_a] = bolt
        cell_data[a].proj[dir_a] = edge.proj_a.index_map
        cell_data[a].rdim[dir_a] = edge.proj_a.reduced_dim
        cell_data[b].proj[dir_b] = edge.proj_b.index_map
        cell_data[b].rdim[dir_b] = edge.proj_b.reduced_dim
        projs[a][dir_a] = edge.proj_a
        projs[b][dir_b] = edge.proj_b

    for cell, info in potts.cells.items():
        data = cell_data[cell]
        down_dirs = [projs[cell][d] for d in ("s", "se", "sw") if d in projs[cell]]
        union_positions = tuple(sorted({p for pr in down_dirs
                                        for p in pr.positions}))
        k = len(info.spins)
        states = np.arange(1 << k, dtype=np.int64)
        down_map = np.zeros(1 << k, dtype=np.int64)
        for t, pos in enumerate(union_positions):
            down_map |= ((states >> pos) & 1) << t
        data.down_map = down_map
        data.down_dim = 1 << len(union_positions)
        for d in ("s", "se", "sw"):
            positions = projs[cell][d].positions if d in projs[cell] else ()
            data.sub[d] = _submap(union_positions, positions)
    return PepsNetwork(potts=potts, beta=float(beta), transform=transform,
                       log_shift=log_shift, cell_data=cell_data)
