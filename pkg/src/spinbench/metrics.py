"""Benchmark scoring: approximation ratio, time-to-solution, diversity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class MetricConfig:
    target_confidence: float = 0.99
    approx_ratio: float = 0.01
    independence_fraction: float = 0.5  # R: Hamming threshold as fraction of N
    restarts: int = 100

    def __post_init__(self):
        if not 0 < self.target_confidence < 1:
            raise DomainError("target_confidence must lie in (0, 1)")
        if self.approx_ratio < 0:
            raise DomainError("approx_ratio must be nonnegative")
        if not 0 < self.independence_fraction <= 1:
            raise DomainError("independence_fraction must lie in (0, 1]")
        if self.restarts < 1:
            raise DomainError("restarts must be >= 1")


def e_approx(e: float, e_best: float) -> float:
    """Relative gap (E - E_best) / (2 |E_best|); negative means a new best."""
    if e_best == 0:
        raise DomainError("e_approx is undefined for E_best = 0")
    return (e - e_best) / (2.0 * abs(e_best))


def tts(p_s: float, p_t: float = 0.99, t_run: float = 1.0) -> float:
    """Expected time to hit the target with confidence p_t.

    p_s = 0 maps to +inf; p_s >= p_t clamps to t_run (one run is always needed).
    """
    if not 0 <= p_s <= 1:
        raise DomainError("p_s must lie in [0, 1]")
    if not 0 < p_t < 1:
        raise DomainError("p_t must lie in (0, 1)")
    if t_run <= 0:
        raise DomainError("t_run must be positive")
    if p_s <= 0:
        return math.inf
    if p_s >= p_t:
        return t_run
    return t_run * math.log(1.0 - p_t) / math.log(1.0 - p_s)


def time_to_target(sample_sets: Sequence, threshold: float,
                   p_t: float = 0.99) -> float:
    """Plug the empirical success fraction into the TTS formula.

    A run succeeds when its best energy is <= threshold; t_run is the mean
    wall-clock time of the observed runs.
    """
    runs = list(sample_sets)
    if not runs:
        raise ValueError("at least one run is required")
    succ = sum(1 for r in runs if r.best_energy <= threshold)
    t_mean = float(np.mean([r.run_time for r in runs]))
    return tts(succ / len(runs), p_t, t_mean)


def diversity(states: np.ndarray, energies: Iterable[float], e_best: float,
              approx_ratio: float = 0.01, independence_fraction: float = 0.5,
              restarts: int = 100, seed: int = 0) -> tuple[int, np.ndarray]:
    """Largest found set of mutually distant near-optimal states.

    Filters to E_approx <= approx_ratio, then repeats a randomized greedy
    pass: visit states in random order, accept one if its Hamming distance
    to every accepted state is >= independence_fraction * N. Returns the
    best (count, witness states) over `restarts` permutations.
    """
    states = np.asarray(states, dtype=np.int8)
    if states.ndim != 2 or states.shape[0] == 0:
        raise DomainError("states must be a nonempty (M, N) array")
    energies = np.asarray(list(energies), dtype=float)
    if energies.shape[0] != states.shape[0]:
        raise DomainError("energies and states must have equal length")

    n = states.shape[1]
    eligible = np.array([e_approx(e, e_best) <= approx_ratio for e in energies])
    pool = states[eligible]
    if pool.shape[0] == 0:
        return 0, np.empty((0, n), dtype=np.int8)

    threshold = independence_fraction * n
    dist = np.count_nonzero(pool[:, None, :] != pool[None, :, :], axis=2)
    rng = np.random.default_rng(seed)
    best: list[int] = []
    for _ in range(restarts):
        order = rng.permutation(pool.shape[0])
        chosen: list[int] = []
        for idx in order:
            if all(dist[idx, j] >= threshold for j in chosen):
                chosen.append(idx)
        if len(chosen) > len(best):
            best = chosen
    return len(best), pool[sorted(best)]


def d_approx(d_solver: int, d_total: int) -> float:
    """Fraction of the pooled reference diversity recovered by one solver."""
    if d_total < 1:
        raise DomainError("d_total must be >= 1")
    return d_solver / d_total
