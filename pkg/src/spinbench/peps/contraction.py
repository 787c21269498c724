"""Boundary-MPS contraction: row absorption, compression, and conditionals.

The boundary for row r is the contraction of all rows strictly below it,
an MPS over the down-union legs of row r. Rows are absorbed one at a time
starting from the bottom; each absorption multiplies the chain by the row
operator and is followed by singular-value truncation to the bond cap and
optional variational refinement sweeps. Chain norms are pulled out into a
log-domain scale so deep grids cannot underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractionError, DomainError
from .network import PepsNetwork

Cell = tuple[int, int]


@dataclass
class BoundaryMps:
    """Chain of [left bond, leg, right bond] tensors with a log-domain scale."""

    tensors: list[np.ndarray]
    log_scale: float = 0.0

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def leg_dims(self) -> list[int]:
        return [t.shape[1] for t in self.tensors]

    def copy(self) -> "BoundaryMps":
        return BoundaryMps([t.copy() for t in self.tensors], self.log_scale)

    def contract_with(self, leg_indices) -> float:
        """Value at fixed leg indices, excluding the log-domain scale."""
        vec = np.ones(1)
        for tensor, leg in zip(self.tensors, leg_indices):
            vec = vec @ tensor[:, leg, :]
        return float(vec[0])


def trivial_boundary(length: int) -> BoundaryMps:
    return BoundaryMps([np.ones((1, 1, 1)) for _ in range(length)])


def apply_row_mpo(boundary: BoundaryMps, mpo: list[np.ndarray]) -> BoundaryMps:
    """Operator-chain x chain product; bonds multiply, legs become the tops."""
    if len(mpo) != len(boundary.tensors):
        raise DomainError("operator row and boundary have different lengths")
    tensors = []
    for m, o in zip(boundary.tensors, mpo):
        # m: [a, d, b]; o: [l, t, d, r] -> [(l a), t, (r b)]
        t = np.einsum("adb,ltdr->latrb", m, o, optimize=True)
        shape = t.shape
        tensors.append(t.reshape(shape[0] * shape[1], shape[2],
                                 shape[3] * shape[4]))
    return BoundaryMps(tensors, boundary.log_scale)


def _left_canonicalize(tensors: list[np.ndarray]) -> tuple[list[np.ndarray], float]:
    """QR sweep; returns left-orthogonal tensors and the extracted norm."""
    out = []
    carry = np.ones((1, 1))
    for tensor in tensors:
        t = np.einsum("xa,alb->xlb", carry, tensor, optimize=True)
        x, leg, b = t.shape
        q, r = np.linalg.qr(t.reshape(x * leg, b))
        out.append(q.reshape(x, leg, q.shape[1]))
        carry = r
    norm = float(np.linalg.norm(carry))
    if norm == 0.0 or not math.isfinite(norm):
        raise ContractionError(f"boundary chain norm degenerated to {norm}")
    out[-1] = np.einsum("alb,bx->alx", out[-1], carry / norm, optimize=True)
    return out, norm


def _svd_truncate(tensors: list[np.ndarray], chi: int,
                  tol: float) -> list[np.ndarray]:
    """Right-to-left SVD sweep keeping values >= tol * largest, capped at chi."""
    out = list(tensors)
    for c in range(len(out) - 1, 0, -1):
        a, leg, b = out[c].shape
        u, s, vt = np.linalg.svd(out[c].reshape(a, leg * b),
                                 full_matrices=False)
        if s[0] > 0:
            keep = max(1, min(chi, int(np.sum(s >= tol * s[0]))))
        else:
            keep = 1
        out[c] = vt[:keep].reshape(keep, leg, b)
        carry = u[:, :keep] * s[:keep]
        out[c - 1] = np.einsum("alb,bx->alx", out[c - 1], carry, optimize=True)
    return out


def _fit_sweep(trial: list[np.ndarray],
               target: list[np.ndarray]) -> list[np.ndarray]:
    """One left-to-right pass of one-site variational fitting against target."""
    n = len(trial)
    right = [np.ones((1, 1)) for _ in range(n + 1)]  # (trial bond, target bond)
    for c in range(n - 1, 0, -1):
        right[c] = np.einsum("alb,xly,by->ax", trial[c], target[c],
                             right[c + 1], optimize=True)
    left = np.ones((1, 1))
    for c in range(n):
        new = np.einsum("ax,xly,by->alb", left, target[c], right[c + 1],
                        optimize=True)
        if c == n - 1:
            trial[c] = new  # keeps the overall scale of the projection
            break
        a, leg, b = new.shape
        q, _ = np.linalg.qr(new.reshape(a * leg, b))
        trial[c] = q.reshape(a, leg, q.shape[1])
        left = np.einsum("ax,alb,xly->by", left, trial[c], target[c],
                         optimize=True)
    return trial


def compress(boundary: BoundaryMps, chi: int, tol: float = 1e-12,
             sweeps: int = 1) -> BoundaryMps:
    """SVD truncation to bond chi plus optional variational refinement."""
    if chi < 1:
        raise DomainError("chi must be >= 1")
    needs_fit = sweeps > 0 and any(d > chi for d in boundary.bond_dims)
    target = [t.copy() for t in boundary.tensors] if needs_fit else None
    tensors, norm = _left_canonicalize(boundary.tensors)
    log_scale = boundary.log_scale + math.log(norm)
    tensors = _svd_truncate(tensors, chi, tol)
    if target is not None:
        target[-1] = target[-1] / norm
        for _ in range(sweeps):
            tensors = _fit_sweep(tensors, target)
    return BoundaryMps(tensors, log_scale)


def boundary_mps(network: PepsNetwork, up_to_row: int, chi: int = 64,
                 tol: float = 1e-12, sweeps: int = 1) -> BoundaryMps:
    """Environment of everything below `up_to_row`, absorbed bottom-up."""
    if not 0 <= up_to_row < network.rows:
        raise DomainError(f"row {up_to_row} outside 0..{network.rows - 1}")
    boundary = trivial_boundary(network.cols)
    for r in range(network.rows - 1, up_to_row, -1):
        boundary = compress(apply_row_mpo(boundary, network.row_mpo(r)),
                            chi, tol, sweeps)
    return boundary


def log_partition_function(network: PepsNetwork, chi: int = 64,
                           tol: float = 1e-12, sweeps: int = 1) -> float:
    """log Z of the (transformed) Potts model via full boundary absorption."""
    boundary = boundary_mps(network, 0, chi, tol, sweeps)
    closed = apply_row_mpo(boundary, network.row_mpo(0))
    value = closed.contract_with([0] * network.cols)
    if value <= 0 or not math.isfinite(value):
        raise ContractionError(
            f"contracted weight {value}; beta or chi too aggressive")
    return math.log(value) + closed.log_scale + network.log_shift


def _row_factors(network: PepsNetwork, row: int,
                 top_states: tuple[int, ...] | None) -> list[np.ndarray]:
    """Per-column weights u_c(y): local factor times the fixed upper-row bonds."""
    cols = network.cols
    factors = []
    for c in range(cols):
        me = network.cell_data[(row, c)]
        u = me.weights.copy()
        if top_states is not None:
            top = network.cell_data[(row - 1, c)]
            t_c = int(top.down_map[top_states[c]])
            u = u * network.incoming(row, c, "n")[top.sub["s"][t_c],
                                                  me.proj["n"]]
            if c > 0:
                topleft = network.cell_data[(row - 1, c - 1)]
                t_l = int(topleft.down_map[top_states[c - 1]])
                u = u * network.incoming(row, c, "nw")[topleft.sub["se"][t_l],
                                                       me.proj["nw"]]
            if c + 1 < cols:
                topright = network.cell_data[(row - 1, c + 1)]
                t_r = int(topright.down_map[top_states[c + 1]])
                u = u * network.incoming(row, c, "ne")[topright.sub["sw"][t_r],
                                                       me.proj["ne"]]
        scale = float(np.max(u))
        if scale <= 0 or not math.isfinite(scale):
            raise ContractionError("row factors washed out numerically")
        factors.append(u / scale)
    return factors


def _right_environments(network: PepsNetwork, row: int,
                        factors: list[np.ndarray],
                        below: BoundaryMps) -> list[np.ndarray]:
    """right[c][a, e]: columns >= c summed, given the below bond a entering
    column c and the east projection e of the fixed cell at column c-1."""
    cols = network.cols
    right: list[np.ndarray] = [None] * (cols + 1)
    right[cols] = np.ones((1, 1))
    for c in range(cols - 1, -1, -1):
        me = network.cell_data[(row, c)]
        m = below.tensors[c]
        b_e = network.incoming(row, c, "w")  # (left_e_red, my_w_red)
        nxt = right[c + 1]
        out = np.zeros((m.shape[0], b_e.shape[0]))
        for y in range(len(factors[c])):
            vec = m[:, me.down_map[y], :] @ nxt[:, me.proj["e"][y]]
            out += factors[c][y] * np.outer(vec, b_e[:, me.proj["w"][y]])
        scale = float(np.max(np.abs(out)))
        if scale <= 0 or not math.isfinite(scale):
            raise ContractionError("right environment washed out numerically")
        right[c] = out / scale
    return right


@dataclass
class SweepCache:
    """Row-keyed memoization for conditionals, cleared as the sweep advances."""

    network: PepsNetwork
    chi: int = 64
    tol: float = 1e-12
    sweeps: int = 1
    row: int = -1
    below: BoundaryMps | None = None
    row_data: dict[tuple, tuple[list[np.ndarray], list[np.ndarray]]] = \
        field(default_factory=dict)
    _ladder: list[BoundaryMps] | None = None

    def _boundary_for(self, row: int) -> BoundaryMps:
        if self._ladder is None:
            ladder: list[BoundaryMps] = [None] * self.network.rows
            boundary = trivial_boundary(self.network.cols)
            for r in range(self.network.rows - 1, -1, -1):
                ladder[r] = boundary
                if r > 0:
                    boundary = compress(
                        apply_row_mpo(boundary, self.network.row_mpo(r)),
                        self.chi, self.tol, self.sweeps)
            self._ladder = ladder
        return self._ladder[row]

    def advance_to(self, row: int) -> None:
        if row != self.row:
            self.row = row
            self.below = self._boundary_for(row)
            self.row_data.clear()

    def factors_and_envs(self, top_states: tuple[int, ...] | None):
        key = top_states if top_states is not None else ()
        if key not in self.row_data:
            factors = _row_factors(self.network, self.row, top_states)
            envs = _right_environments(self.network, self.row, factors,
                                       self.below)
            self.row_data[key] = (factors, envs)
        return self.row_data[key]


def conditional_probability(network: PepsNetwork, partial,
                            node: Cell, chi: int = 64, tol: float = 1e-12,
                            sweeps: int = 1,
                            cache: SweepCache | None = None) -> np.ndarray:
    """p(x_node | partial) over the node's states.

    `partial` lists the Potts states of every node before `node` in row-major
    order. The environment combines the cached boundary below the node's row
    with the projected (fixed) tensors to its left and the fully fixed row
    above; the result is normalized.
    """
    order = network.node_order
    pos = order.index(node)
    partial = tuple(int(v) for v in partial)
    if len(partial) != pos:
        raise DomainError(
            f"partial assignment covers {len(partial)} nodes, expected {pos}")
    row, col = node
    if cache is None:
        cache = SweepCache(network, chi=chi, tol=tol, sweeps=sweeps)
    cache.advance_to(row)

    cols = network.cols
    top_states = None
    if row > 0:
        start = (row - 1) * cols
        top_states = partial[start:start + cols]
    prefix = partial[row * cols:]

    factors, right = cache.factors_and_envs(top_states)
    below = cache.below

    left = np.ones(1)
    e_prev = 0
    for j, y in enumerate(prefix):
        me = network.cell_data[(row, j)]
        b_e = network.incoming(row, j, "w")
        w = factors[j][y] * b_e[e_prev, me.proj["w"][y]]
        left = w * (left @ below.tensors[j][:, me.down_map[y], :])
        scale = float(np.max(np.abs(left)))
        if scale <= 0 or not math.isfinite(scale):
            raise ContractionError("prefix environment washed out numerically")
        left = left / scale
        e_prev = int(me.proj["e"][y])

    me = network.cell_data[(row, col)]
    b_e = network.incoming(row, col, "w")
    nxt = right[col + 1]
    d = len(factors[col])
    values = np.empty(d)
    for v in range(d):
        vec = below.tensors[col][:, me.down_map[v], :] @ nxt[:, me.proj["e"][v]]
        values[v] = factors[col][v] * b_e[e_prev, me.proj["w"][v]] * (left @ vec)
    total = float(values.sum())
    if total <= 0 or not math.isfinite(total):
        raise ContractionError(
            "conditional washed out to zero; beta or chi too aggressive")
    return values / total
