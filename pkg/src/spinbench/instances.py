"""Benchmark instance families and the COO text format.

Randomness policy: one PCG64 generator per call, seeded explicitly. Coupling
values are drawn in lexicographic edge order, then field values in ascending
node order, so instance bytes are reproducible across platforms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import CooFormatError, DimensionError
from .model import IsingModel


@dataclass(frozen=True)
class LatticeSpec:
    """Grid of cells: `rows x cols` cells of `cell_size` spins each.

    Cells are cliques; spins in adjacent cells are fully connected. With
    `diagonal_edges` the cell graph is a king's graph, otherwise a square
    lattice.
    """

    rows: int
    cols: int
    cell_size: int = 1
    diagonal_edges: bool = True

    def __post_init__(self):
        if min(self.rows, self.cols, self.cell_size) < 1:
            raise DimensionError("rows, cols, and cell_size must be >= 1")

    @property
    def num_spins(self) -> int:
        return self.rows * self.cols * self.cell_size

    def cell_index(self, row: int, col: int) -> int:
        return row * self.cols + col

    def cell_spins(self, row: int, col: int) -> list[int]:
        """1-based spin ids of a cell; numbering is row-major, then cell-local."""
        base = self.cell_index(row, col) * self.cell_size
        return [base + t + 1 for t in range(self.cell_size)]


class InstanceClass(enum.Enum):
    RAU = "rau"
    RCO = "rco"
    CBFM_P = "cbfm-p"


def build_lattice(spec: LatticeSpec) -> list[tuple[int, int]]:
    """Edge list of the lattice, each unordered pair once with i < j."""
    edges: list[tuple[int, int]] = []
    for r in range(spec.rows):
        for c in range(spec.cols):
            cell = spec.cell_spins(r, c)
            for a in range(len(cell)):
                for b in range(a + 1, len(cell)):
                    edges.append((cell[a], cell[b]))
            steps = [(0, 1), (1, 0)]
            if spec.diagonal_edges:
                steps += [(1, 1), (1, -1)]
            for dr, dc in steps:
                r2, c2 = r + dr, c + dc
                if 0 <= r2 < spec.rows and 0 <= c2 < spec.cols:
                    other = spec.cell_spins(r2, c2)
                    for i in cell:
                        for j in other:
                            edges.append((min(i, j), max(i, j)))
    return edges


# CBFM-P parameter distribution; the +1 field value has probability 0 but is
# kept in the table for clarity.
CBFM_P_COUPLING_VALUES = (0.0, -1.0, 1.0)
CBFM_P_COUPLING_PROBS = (0.35, 0.10, 0.55)
CBFM_P_FIELD_VALUES = (0.0, -1.0, 1.0)
CBFM_P_FIELD_PROBS = (0.15, 0.85, 0.0)


def generate(instance_class: InstanceClass, edges: list[tuple[int, int]],
             seed: int, num_spins: int | None = None) -> IsingModel:
    """Draw an instance of the given class on the given edges."""
    if not edges:
        raise DimensionError("edge list must be nonempty")
    ordered = sorted((min(i, j), max(i, j)) for (i, j) in edges)
    n = num_spins if num_spins is not None else max(j for _, j in ordered)
    rng = np.random.Generator(np.random.PCG64(seed))

    if instance_class in (InstanceClass.RAU, InstanceClass.RCO):
        values = rng.uniform(-1.0, 1.0, size=len(ordered))
        couplings = {pair: float(v) for pair, v in zip(ordered, values)}
        fields: dict[int, float] = {}
        if instance_class is InstanceClass.RAU:
            hvals = rng.uniform(-0.1, 0.1, size=n)
            fields = {i + 1: float(hvals[i]) for i in range(n)}
    elif instance_class is InstanceClass.CBFM_P:
        jvals = rng.choice(CBFM_P_COUPLING_VALUES, size=len(ordered),
                           p=CBFM_P_COUPLING_PROBS)
        couplings = {pair: float(v) for pair, v in zip(ordered, jvals)}
        hvals = rng.choice(CBFM_P_FIELD_VALUES, size=n, p=CBFM_P_FIELD_PROBS)
        fields = {i + 1: float(hvals[i]) for i in range(n)}
    else:
        raise ValueError(f"unknown instance class {instance_class!r}")
    return IsingModel(n, couplings, fields)


def parse_coo(text: str) -> IsingModel:
    """Parse "i j v" rows (1-indexed; i = j encodes the local field h_i)."""
    couplings: dict[tuple[int, int], float] = {}
    fields: dict[int, float] = {}
    max_node = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise CooFormatError(f"expected 'i j v', got {line!r}", lineno)
        try:
            i, j = int(tokens[0]), int(tokens[1])
            v = float(tokens[2])
        except ValueError:
            raise CooFormatError(f"non-numeric token in {line!r}", lineno) from None
        if i < 1 or j < 1:
            raise CooFormatError("node ids must be >= 1", lineno)
        max_node = max(max_node, i, j)
        if i == j:
            if i in fields:
                raise CooFormatError(f"duplicate field entry for node {i}", lineno)
            fields[i] = v
        else:
            key = (min(i, j), max(i, j))
            if key in couplings:
                raise CooFormatError(f"duplicate coupling pair {key}", lineno)
            couplings[key] = v
    if max_node == 0:
        raise CooFormatError("no data rows found", 0)
    return IsingModel(max_node, couplings, fields)


def write_coo(model: IsingModel) -> str:
    """Serialize to COO text: LF endings, 17 significant digits."""
    lines = []
    covered = 0
    for i in sorted(model.fields):
        lines.append(f"{i} {i} {model.fields[i]:.17g}")
        covered = max(covered, i)
    for (i, j) in sorted(model.couplings):
        lines.append(f"{i} {j} {model.couplings[(i, j)]:.17g}")
        covered = max(covered, j)
    if covered < model.num_spins:
        # pin the system size for round-tripping when the last spin is bare
        lines.append(f"{model.num_spins} {model.num_spins} 0")
    return "\n".join(lines) + "\n"
