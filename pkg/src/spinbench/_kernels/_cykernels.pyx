"""Compiled hot kernels: Gray-code exhaustive scans and Metropolis sweeps.

Mirrors `_pykernels` exactly: same bit convention (bit i-1 clear = spin +1),
same SplitMix64 stream, same return values. Keep the two files in sync.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, INFINITY

BACKEND = "cython"

TOPK_PAD = 64

cdef extern from *:
    """
    static inline unsigned long long sm64_next(unsigned long long *state) {
        unsigned long long z = (*state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    unsigned long long sm64_next(unsigned long long *state) nogil


def splitmix64(state):
    """One step of SplitMix64; returns (new_state, output word)."""
    cdef unsigned long long s = state
    cdef unsigned long long z = sm64_next(&s)
    return s, z


cdef inline int _ctz(unsigned long long t) nogil:
    cdef int k = 0
    while not (t >> k) & 1:
        k += 1
    return k


def gray_min(int n, long long[::1] indptr, long long[::1] indices,
             double[::1] weights, double[::1] h):
    """Exhaustive Gray-code scan; returns (best_bits, best_energy)."""
    cdef unsigned long long n_states = (<unsigned long long>1) << n
    cdef cnp.ndarray[cnp.int8_t, ndim=1] s_arr = np.ones(n, dtype=np.int8)
    cdef signed char[::1] s = s_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] f_arr = np.asarray(h).copy()
    cdef double[::1] f = f_arr
    cdef unsigned long long t, bits = 0, best_bits = 0
    cdef long long p
    cdef int i, k
    cdef double e = 0.0, de, best_e
    cdef signed char sk

    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            f[i] += weights[p] * s[indices[p]]
        e += 0.5 * (f[i] + h[i]) * s[i]
    best_e = e

    with nogil:
        for t in range(1, n_states):
            k = _ctz(t)
            sk = s[k]
            de = -2.0 * sk * f[k]
            e += de
            s[k] = -sk
            bits ^= (<unsigned long long>1) << k
            for p in range(indptr[k], indptr[k + 1]):
                f[indices[p]] -= 2.0 * weights[p] * sk
            if e < best_e:
                best_e = e
                best_bits = bits
    return int(best_bits), float(best_e)


def gray_topk(int n, long long[::1] indptr, long long[::1] indices,
              double[::1] weights, double[::1] h, int k):
    """Gray-code scan keeping the k + TOPK_PAD lowest accumulated energies.

    Returns (bits, energies), unordered; the caller re-scores exactly.
    """
    cdef unsigned long long n_states = (<unsigned long long>1) << n
    cdef unsigned long long keep64 = <unsigned long long>(k + TOPK_PAD)
    cdef int keep = <int>(keep64 if keep64 < n_states else n_states)
    cdef cnp.ndarray[cnp.int8_t, ndim=1] s_arr = np.ones(n, dtype=np.int8)
    cdef signed char[::1] s = s_arr
    cdef cnp.ndarray[cnp.float64_t, ndim=1] f_arr = np.asarray(h).copy()
    cdef double[::1] f = f_arr
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] hb_arr = np.zeros(keep, dtype=np.uint64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] he_arr = np.full(keep, INFINITY)
    cdef unsigned long long[::1] hb = hb_arr
    cdef double[::1] he = he_arr
    cdef unsigned long long t, bits = 0
    cdef long long p
    cdef int i, kk, size = 0, pos, child
    cdef double e = 0.0, de, tmp_e
    cdef unsigned long long tmp_b
    cdef signed char sk

    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            f[i] += weights[p] * s[indices[p]]
        e += 0.5 * (f[i] + h[i]) * s[i]

    with nogil:
        # max-heap on he[0..size)
        size = 1
        he[0] = e
        hb[0] = 0
        for t in range(1, n_states):
            kk = _ctz(t)
            sk = s[kk]
            de = -2.0 * sk * f[kk]
            e += de
            s[kk] = -sk
            bits ^= (<unsigned long long>1) << kk
            for p in range(indptr[kk], indptr[kk + 1]):
                f[indices[p]] -= 2.0 * weights[p] * sk
            if size < keep:
                pos = size
                size += 1
                he[pos] = e
                hb[pos] = bits
                while pos > 0 and he[(pos - 1) >> 1] < he[pos]:
                    tmp_e = he[pos]; he[pos] = he[(pos - 1) >> 1]; he[(pos - 1) >> 1] = tmp_e
                    tmp_b = hb[pos]; hb[pos] = hb[(pos - 1) >> 1]; hb[(pos - 1) >> 1] = tmp_b
                    pos = (pos - 1) >> 1
            elif e < he[0]:
                he[0] = e
                hb[0] = bits
                pos = 0
                while True:
                    child = 2 * pos + 1
                    if child >= keep:
                        break
                    if child + 1 < keep and he[child + 1] > he[child]:
                        child += 1
                    if he[child] <= he[pos]:
                        break
                    tmp_e = he[pos]; he[pos] = he[child]; he[child] = tmp_e
                    tmp_b = hb[pos]; hb[pos] = hb[child]; hb[child] = tmp_b
                    pos = child
    return hb_arr[:size].copy(), he_arr[:size].copy()


def sa_run(int n, long long[::1] indptr, long long[::1] indices,
           double[::1] weights, double[::1] h, double[::1] betas,
           long long updates_per_temp, seed):
    """One simulated-annealing replica; see the fallback for the contract."""
    cdef unsigned long long state = seed
    cdef unsigned long long z
    cdef cnp.ndarray[cnp.int8_t, ndim=1] s_arr = np.empty(n, dtype=np.int8)
    cdef signed char[::1] s = s_arr
    cdef int i, kdx
    cdef long long p, m
    cdef double beta, de, u, e = 0.0
    cdef signed char sk_old

    for i in range(n):
        z = sm64_next(&state)
        s[i] = 1 - 2 * <int>(z & 1)

    cdef cnp.ndarray[cnp.float64_t, ndim=1] f_arr = np.asarray(h).copy()
    cdef double[::1] f = f_arr
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            f[i] += weights[p] * s[indices[p]]
        e += 0.5 * (f[i] + h[i]) * s[i]

    cdef cnp.ndarray[cnp.int8_t, ndim=1] best_arr = s_arr.copy()
    cdef signed char[::1] best = best_arr
    cdef double best_e = e
    cdef Py_ssize_t nt = betas.shape[0], it

    with nogil:
        for it in range(nt):
            beta = betas[it]
            for m in range(updates_per_temp):
                z = sm64_next(&state)
                kdx = <int>(z % <unsigned long long>n)
                de = -2.0 * s[kdx] * f[kdx]
                if de >= 0.0:
                    z = sm64_next(&state)
                    u = (z >> 11) * (2.0 ** -53)
                    if u >= exp(-beta * de):
                        continue
                sk_old = s[kdx]
                s[kdx] = -sk_old
                e += de
                for p in range(indptr[kdx], indptr[kdx + 1]):
                    f[indices[p]] -= 2.0 * weights[p] * sk_old
                if e < best_e:
                    best_e = e
                    for i in range(n):
                        best[i] = s[i]
    return best_arr, float(best_e), s_arr, float(e)
