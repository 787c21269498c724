"""Exact closed-system simulation of transverse-field Ising annealing.

Dense-matrix Schroedinger evolution with a fourth-order Magnus stepper
(two-point Gauss-Legendre quadrature), programmable piecewise-linear anneal
paths, Gaussian coupling-noise ensembles, and distribution comparisons.
Natural units hbar = 1; basis convention as in `spinbench.model`.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import CapacityError, DimensionError, DomainError
from .model import IsingModel, _all_energies, as_spins, spins_to_index

DYNAMICS_CAP = 12  # dense 2^N x 2^N matrices

PATH_FORWARD = "forward"
PATH_REVERSE = "reverse"
PATH_REVERSE_PAUSE = "reverse_pause"


@dataclass(frozen=True)
class AnnealSchedule:
    """Envelopes A(s), B(s) plus a piecewise-linear path s(t) on [0, tau].

    Default envelopes are A(s) = 1 - s, B(s) = s; device-like tables load
    from CSV via `envelopes_from_csv` and interpolate linearly.
    """

    total_time: float
    path: str = PATH_FORWARD
    turning_point: float | None = None  # s_a for the reverse variants
    envelope_table: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        if self.total_time <= 0:
            raise DomainError("total_time must be positive")
        if self.path not in (PATH_FORWARD, PATH_REVERSE, PATH_REVERSE_PAUSE):
            raise DomainError(f"unknown path {self.path!r}")
        if self.path != PATH_FORWARD:
            if self.turning_point is None or not 0 <= self.turning_point < 1:
                raise DomainError("reverse paths need a turning point in [0, 1)")

    def s_at(self, t: float) -> float:
        tau = self.total_time
        if not 0 <= t <= tau * (1 + 1e-12):
            raise DomainError(f"t = {t} outside [0, {tau}]")
        t = min(t, tau)
        if self.path == PATH_FORWARD:
            return t / tau
        sa = self.turning_point
        if self.path == PATH_REVERSE:
            if t <= tau / 2:
                return 1.0 - 2.0 * (1.0 - sa) * t / tau
            return -1.0 + 2.0 * sa + 2.0 * (1.0 - sa) * t / tau
        if t <= tau / 3:
            return 1.0 - 3.0 * (1.0 - sa) * t / tau
        if t <= 2 * tau / 3:
            return sa
        # continuity at 2 tau / 3 and s(tau) = 1 fix the constant at -2
        return -2.0 + 3.0 * sa + 3.0 * (1.0 - sa) * t / tau

    def a_at(self, s: float) -> float:
        if self.envelope_table is None:
            return 1.0 - s
        grid, a_vals, _ = self.envelope_table
        return float(np.interp(s, grid, a_vals))

    def b_at(self, s: float) -> float:
        if self.envelope_table is None:
            return s
        grid, _, b_vals = self.envelope_table
        return float(np.interp(s, grid, b_vals))


def envelopes_from_csv(text: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Parse 's,A,B' rows (header line optional) into interpolation tables."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            rows.append(tuple(float(p) for p in parts[:3]))
        except ValueError:
            continue  # header
    if len(rows) < 2:
        raise DomainError("envelope CSV needs at least two numeric rows")
    data = np.array(sorted(rows))
    return data[:, 0], data[:, 1], data[:, 2]


@functools.lru_cache(maxsize=8)
def _transverse_sum(n: int) -> np.ndarray:
    """Sum of sigma^x_i as a dense (2^n, 2^n) real matrix."""
    dim = 1 << n
    out = np.zeros((dim, dim))
    for b in range(dim):
        for i in range(n):
            out[b ^ (1 << i), b] += 1.0
    return out


def build_hamiltonian(model: IsingModel, schedule: AnnealSchedule,
                      s: float) -> np.ndarray:
    """-A(s)/2 sum sigma^x + B(s)/2 (sum J sigma^z sigma^z + sum h sigma^z)."""
    n = model.num_spins
    if n > DYNAMICS_CAP:
        raise CapacityError(f"{n} spins exceeds dynamics cap {DYNAMICS_CAP}")
    h = (-0.5 * schedule.a_at(s)) * _transverse_sum(n).astype(complex)
    h[np.diag_indices_from(h)] += 0.5 * schedule.b_at(s) * _all_energies(model)
    return h


def initial_state(n: int) -> np.ndarray:
    """|+>^N: the transverse-field ground state, uniform over the basis."""
    dim = 1 << n
    return np.full(dim, 1.0 / math.sqrt(dim), dtype=complex)


def magnus_step(h1: np.ndarray, h2: np.ndarray, dt: float,
                psi: np.ndarray) -> np.ndarray:
    """One fourth-order Magnus step from the two Gauss-node Hamiltonians.

    Omega = -i dt (H1 + H2)/2 - (sqrt(3) dt^2 / 12) [H2, H1]; the propagator
    exp(Omega) is evaluated by eigendecomposition of the Hermitian i*Omega,
    so each step is unitary to rounding.
    """
    h_eff = 0.5 * dt * (h1 + h2)
    comm = h2 @ h1 - h1 @ h2
    h_eff = h_eff - 1j * (math.sqrt(3.0) * dt * dt / 12.0) * comm
    eigvals, eigvecs = np.linalg.eigh(h_eff)
    phases = np.exp(-1j * eigvals)
    return eigvecs @ (phases * (eigvecs.conj().T @ psi))


_GAUSS_OFFSETS = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)


def evolve(model: IsingModel, schedule: AnnealSchedule, steps: int,
           state0: np.ndarray | None = None, t0: float = 0.0,
           t1: float | None = None) -> np.ndarray:
    """Integrate the Schroedinger equation across [t0, t1] (default [0, tau])."""
    if steps < 1:
        raise DomainError("steps must be >= 1")
    n = model.num_spins
    if n > DYNAMICS_CAP:
        raise CapacityError(f"{n} spins exceeds dynamics cap {DYNAMICS_CAP}")
    t1 = schedule.total_time if t1 is None else t1
    psi = initial_state(n) if state0 is None else np.asarray(state0, dtype=complex)
    if psi.shape != (1 << n,):
        raise DimensionError(f"state has dimension {psi.shape}, expected {1 << n}")
    dt = (t1 - t0) / steps
    for k in range(steps):
        t = t0 + k * dt
        h1 = build_hamiltonian(model, schedule, schedule.s_at(t + _GAUSS_OFFSETS[0] * dt))
        h2 = build_hamiltonian(model, schedule, schedule.s_at(t + _GAUSS_OFFSETS[1] * dt))
        psi = magnus_step(h1, h2, dt, psi)
    return psi


@dataclass(frozen=True)
class OutcomeDistribution:
    """Probabilities over computational-basis configurations."""

    num_spins: int
    probabilities: np.ndarray = field(repr=False)

    def prob_of(self, config: Iterable[int]) -> float:
        s = as_spins(config, self.num_spins)
        return float(self.probabilities[spins_to_index(s)])

    def check_normalized(self, tol: float = 1e-6) -> None:
        total = float(np.sum(self.probabilities))
        if abs(total - 1.0) > tol or np.any(self.probabilities < -tol):
            raise DomainError(f"distribution not normalized (sum = {total})")


def measure(state: np.ndarray) -> OutcomeDistribution:
    """Born-rule outcome probabilities of a normalized state."""
    psi = np.asarray(state, dtype=complex)
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > 1e-6:
        raise DomainError(f"state norm {norm} is not 1")
    n = int(round(math.log2(psi.size)))
    return OutcomeDistribution(n, np.abs(psi) ** 2)


def ground_state_probability(dist: OutcomeDistribution,
                             ground_states: np.ndarray) -> float:
    """Total probability of the certified ground set (degeneracies included)."""
    ground_states = np.atleast_2d(np.asarray(ground_states, dtype=np.int8))
    return float(sum(dist.prob_of(g) for g in ground_states))


def ice_ensemble(model: IsingModel, sigma: float, draws: int,
                 schedule: AnnealSchedule, steps: int,
                 seed: int = 0) -> OutcomeDistribution:
    """Average outcome distribution under Gaussian coupling perturbations.

    Each draw adds i.i.d. N(0, sigma) noise to every coupling (fields are
    untouched), evolves, and measures; sigma = 0 short-circuits to the clean
    run so the result is bit-identical regardless of the draw count.
    """
    if sigma < 0:
        raise DomainError("sigma must be nonnegative")
    if draws < 1:
        raise DomainError("draws must be >= 1")
    if sigma == 0.0:
        return measure(evolve(model, schedule, steps))
    pairs = sorted(model.couplings)
    acc = np.zeros(1 << model.num_spins)
    for child in np.random.SeedSequence(seed).spawn(draws):
        rng = np.random.default_rng(child)
        noise = rng.normal(0.0, sigma, size=len(pairs))
        couplings = {p: model.couplings[p] + float(noise[k])
                     for k, p in enumerate(pairs)}
        perturbed = IsingModel(model.num_spins, couplings, dict(model.fields))
        acc += measure(evolve(perturbed, schedule, steps)).probabilities
    return OutcomeDistribution(model.num_spins, acc / draws)


def _paired_probs(p: OutcomeDistribution | np.ndarray,
                  q: OutcomeDistribution | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pv = p.probabilities if isinstance(p, OutcomeDistribution) else np.asarray(p, dtype=float)
    qv = q.probabilities if isinstance(q, OutcomeDistribution) else np.asarray(q, dtype=float)
    if pv.shape != qv.shape:
        raise DimensionError("distributions have different support sizes")
    for name, v in (("P", pv), ("Q", qv)):
        if abs(float(np.sum(v)) - 1.0) > 1e-6:
            raise DomainError(f"{name} is not normalized")
    return pv, qv


def tvd(p, q) -> float:
    """Total variation distance (1/2) sum |P - Q|."""
    pv, qv = _paired_probs(p, q)
    return 0.5 * float(np.sum(np.abs(pv - qv)))


def classical_fidelity(p, q) -> float:
    """Bhattacharyya overlap squared: (sum sqrt(P Q))^2."""
    pv, qv = _paired_probs(p, q)
    return float(np.sum(np.sqrt(pv * qv))) ** 2
