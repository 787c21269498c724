"""Pure NumPy/Python fallback for the hot kernels.

Bit convention matches `spinbench.model`: bit (i-1) of a state word is 0 for
s_i = +1 and 1 for s_i = -1. All three entry points return the same values as
the compiled twin in `_cykernels.pyx` for identical inputs, so the two
backends are interchangeable (see tests/test_kernels.py).
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

# Extra candidates kept beyond k so that exact re-scoring by the caller can
# never lose a state whose true energy ties the k-th level.
TOPK_PAD = 64

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One step of SplitMix64; returns (new_state, output word)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, (z ^ (z >> 31)) & _MASK


def _block_energies(n: int, indptr, indices, weights, h, start: int,
                    count: int) -> np.ndarray:
    idx = np.arange(start, start + count, dtype=np.uint64)[:, None]
    bits = (idx >> np.arange(n, dtype=np.uint64)[None, :]) & 1
    s = 1.0 - 2.0 * bits
    out = s @ h
    for i in range(n):
        lo, hi = indptr[i], indptr[i + 1]
        for p in range(lo, hi):
            j = indices[p]
            if j > i:  # each pair once
                out += weights[p] * s[:, i] * s[:, j]
    return out


def gray_min(n: int, indptr, indices, weights, h) -> tuple[int, float]:
    """Exhaustive scan over all 2^n states; returns (best_bits, best_energy).

    The fallback enumerates energies blockwise with vectorized NumPy instead
    of walking a Gray code, which keeps it usable up to n ~ 24.
    """
    n_states = 1 << n
    block = 1 << min(20, n)
    best_e = math.inf
    best_bits = 0
    for start in range(0, n_states, block):
        e = _block_energies(n, indptr, indices, weights, h, start, block)
        k = int(np.argmin(e))
        if e[k] < best_e:
            best_e = float(e[k])
            best_bits = start + k
    return best_bits, best_e


def gray_topk(n: int, indptr, indices, weights, h,
              k: int) -> tuple[np.ndarray, np.ndarray]:
    """Candidate set of (at least) the k lowest-energy states.

    Returns (bits, energies) of up to k + TOPK_PAD states, unordered. The
    caller re-scores exactly and applies the documented tie-break.
    """
    n_states = 1 << n
    keep = min(n_states, k + TOPK_PAD)
    block = 1 << min(20, n)
    cand_bits = np.empty(0, dtype=np.uint64)
    cand_e = np.empty(0)
    for start in range(0, n_states, block):
        e = _block_energies(n, indptr, indices, weights, h, start, block)
        take = min(keep, block)
        part = np.argpartition(e, take - 1)[:take]
        cand_bits = np.concatenate([cand_bits,
                                    (start + part).astype(np.uint64)])
        cand_e = np.concatenate([cand_e, e[part]])
        if cand_e.size > keep:
            part = np.argpartition(cand_e, keep - 1)[:keep]
            cand_bits, cand_e = cand_bits[part], cand_e[part]
    return cand_bits, cand_e


def sa_run(n: int, indptr, indices, weights, h, betas, updates_per_temp: int,
           seed: int) -> tuple[np.ndarray, float, np.ndarray, float]:
    """One simulated-annealing replica with single-spin Metropolis updates.

    Returns (best_config, best_energy, final_config, final_energy); energies
    are the incrementally tracked values, re-verified by the caller.
    """
    state = seed & _MASK
    s = np.empty(n, dtype=np.int8)
    for i in range(n):
        state, z = splitmix64(state)
        s[i] = 1 - 2 * (z & 1)

    # local fields f_i = h_i + sum_j J_ij s_j
    f = h.astype(np.float64).copy()
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            f[i] += weights[p] * s[indices[p]]
    e = 0.5 * float(np.dot(f + h, s.astype(np.float64)))

    best = s.copy()
    best_e = e
    for beta in betas:
        for _ in range(updates_per_temp):
            state, z = splitmix64(state)
            kdx = z % n
            de = -2.0 * s[kdx] * f[kdx]
            if de >= 0.0:
                state, z = splitmix64(state)
                u = (z >> 11) * 2.0 ** -53
                if u >= math.exp(-beta * de):
                    continue
            sk_old = s[kdx]
            s[kdx] = -sk_old
            e += de
            for p in range(indptr[kdx], indptr[kdx + 1]):
                f[indices[p]] -= 2.0 * weights[p] * sk_old
            if e < best_e:
                best_e = e
                best = s.copy()
    return best, best_e, s, e
