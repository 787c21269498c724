"""Stochastic heuristics: simulated annealing, parallel annealing, discrete
simulated bifurcation, and the greedy single-flip descent post-processor.

Every solver is seed-deterministic: replicas draw independent sub-seeds from
one SeedSequence, and all reported energies are re-evaluated from scratch.
sign(0) binarizes to +1 everywhere.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from typing import Iterable

import numpy as np

from . import _kernels
from .errors import DomainError
from .model import IsingModel, as_spins, energy, energy_many


@dataclass(frozen=True)
class SampleRecord:
    spins: np.ndarray  # int8, +-1
    energy: float
    replica: int


@dataclass
class SampleSet:
    """Timed, seeded collection of configurations returned by one solver run."""

    solver: str
    seed: int
    params: dict
    records: list[SampleRecord]
    run_time: float  # wall-clock seconds of the solver core, > 0

    @property
    def best_record(self) -> SampleRecord:
        return min(self.records, key=lambda r: (r.energy, r.replica))

    @property
    def best_energy(self) -> float:
        return self.best_record.energy

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def configs(self) -> np.ndarray:
        return np.stack([r.spins for r in self.records])

    def verify(self, model: IsingModel, tol: float = 1e-10) -> None:
        fresh = energy_many(model, self.configs)
        drift = np.abs(fresh - self.energies)
        if np.any(drift > tol):
            raise AssertionError(f"stored energies drift up to {drift.max():.3e}")
        if not self.run_time > 0:
            raise AssertionError("run_time must be positive")

    def to_json_dict(self, instance_hash: str | None = None) -> dict:
        return {
            "instance_hash": instance_hash,
            "solver": self.solver,
            "params": self.params,
            "seed": self.seed,
            "t_run_seconds": self.run_time,
            "samples": [
                {"spins": [int(v) for v in r.spins], "energy": r.energy,
                 "replica": r.replica}
                for r in self.records
            ],
            "best_energy": self.best_energy,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "SampleSet":
        records = [
            SampleRecord(spins=np.array(s["spins"], dtype=np.int8),
                         energy=float(s["energy"]),
                         replica=int(s.get("replica", k)))
            for k, s in enumerate(data["samples"])
        ]
        return cls(solver=data["solver"], seed=int(data["seed"]),
                   params=dict(data["params"]), records=records,
                   run_time=float(data["t_run_seconds"]))

    def canonical_bytes(self) -> bytes:
        """Deterministic serialization (timing excluded) for reproducibility checks."""
        payload = self.to_json_dict()
        payload.pop("t_run_seconds")
        payload.pop("instance_hash")
        return json.dumps(payload, sort_keys=True).encode()


def _subseeds(seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def _binarize(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 1, -1).astype(np.int8)


@dataclass(frozen=True)
class SaParams:
    """Metropolis annealing controls: K temperature steps of M single-spin updates."""

    t0: float = 2.0
    steps: int = 200
    updates_per_step: int | None = None  # defaults to 8 * N at run time
    schedule: str = "geometric"  # "geometric" or "linear"
    alpha: float = 0.97
    t_min: float = 1e-3
    replicas: int = 16

    def __post_init__(self):
        if self.t0 <= 0:
            raise DomainError("t0 must be positive")
        if not 0 < self.alpha < 1:
            raise DomainError("alpha must lie in (0, 1)")
        if min(self.steps, self.replicas) < 1:
            raise DomainError("steps and replicas must be >= 1")
        if self.schedule not in ("geometric", "linear"):
            raise DomainError(f"unknown schedule {self.schedule!r}")

    def temperatures(self) -> np.ndarray:
        k = np.arange(self.steps, dtype=np.float64)
        if self.schedule == "geometric":
            return self.t0 * self.alpha**k
        span = max(self.steps - 1, 1)
        return self.t0 + (self.t_min - self.t0) * k / span


def simulated_annealing(model: IsingModel, params: SaParams = SaParams(),
                        seed: int = 0) -> SampleSet:
    """Independent Metropolis replicas; returns the best-seen config per replica."""
    n = model.num_spins
    updates = params.updates_per_step or 8 * n
    betas = 1.0 / params.temperatures()
    indptr, indices, weights = model.adjacency
    h = model.fields_vector
    seeds = _subseeds(seed, params.replicas)

    t0 = time.perf_counter()
    raw = [_kernels.sa_run(n, indptr, indices, weights, h, betas, updates, s)
           for s in seeds]
    run_time = max(time.perf_counter() - t0, 1e-9)

    records = []
    for rep, (best, _, _, _) in enumerate(raw):
        cfg = np.asarray(best, dtype=np.int8)
        records.append(SampleRecord(cfg, energy(model, cfg), rep))
    return SampleSet("sa", seed, asdict(params), records, run_time)


@dataclass(frozen=True)
class PaParams:
    """Gradient-descent annealing with a decaying quadratic confinement term."""

    step_size: float = 0.05
    momentum: float | None = None  # defaults to 1 - step_size
    steps: int = 1000
    trajectories: int = 32
    lambda0: float = 2.0

    def __post_init__(self):
        if not 0 < self.step_size <= 1:
            raise DomainError("step_size must lie in (0, 1]")
        beta_m = self.resolved_momentum
        if not 0 <= beta_m < 1:
            raise DomainError("momentum must lie in [0, 1)")
        if min(self.steps, self.trajectories) < 1:
            raise DomainError("steps and trajectories must be >= 1")

    @property
    def resolved_momentum(self) -> float:
        return 1.0 - self.step_size if self.momentum is None else self.momentum

    def lambda_at(self, step: int) -> float:
        span = max(self.steps - 1, 1)
        return self.lambda0 * (span - step) / span


def parallel_annealing(model: IsingModel, params: PaParams = PaParams(),
                       seed: int = 0) -> SampleSet:
    """Momentum gradient flow on clipped analog spins; best energy per trajectory."""
    n = model.num_spins
    jsym = model.coupling_matrix
    h = model.fields_vector
    beta_m = params.resolved_momentum
    rng = np.random.default_rng(seed)

    t0 = time.perf_counter()
    m_traj = params.trajectories
    x = np.zeros((m_traj, n))
    mom = np.zeros((m_traj, n))
    s = rng.choice(np.array([-1, 1], dtype=np.int8), size=(m_traj, n))
    best_cfg = s.copy()
    best_e = energy_many(model, s)
    for step in range(params.steps):
        lam = params.lambda_at(step)
        grad = s @ jsym + h + lam * x
        mom = beta_m * mom - params.step_size * grad
        np.clip(mom, -1.0, 1.0, out=mom)
        x += mom
        np.clip(x, -1.0, 1.0, out=x)
        assert np.all(np.abs(x) <= 1.0)
        s = _binarize(x)
        e = energy_many(model, s)
        improved = e < best_e
        best_e[improved] = e[improved]
        best_cfg[improved] = s[improved]
    run_time = max(time.perf_counter() - t0, 1e-9)

    records = [SampleRecord(best_cfg[r].copy(), energy(model, best_cfg[r]), r)
               for r in range(m_traj)]
    return SampleSet("pa", seed, asdict(params), records, run_time)


@dataclass(frozen=True)
class SbParams:
    """Discrete simulated bifurcation (symplectic Euler with inelastic walls)."""

    a0: float = 1.0
    c0: float | None = None  # defaults to 0.7 * a0 / (sigma_J * sqrt(N))
    dt: float = 0.5
    steps: int = 1000
    replicas: int = 32

    def __post_init__(self):
        if self.a0 <= 0 or self.dt <= 0:
            raise DomainError("a0 and dt must be positive")
        if self.c0 is not None and self.c0 <= 0:
            raise DomainError("c0 must be positive")
        if min(self.steps, self.replicas) < 1:
            raise DomainError("steps and replicas must be >= 1")

    def resolve_c0(self, model: IsingModel) -> float:
        if self.c0 is not None:
            return self.c0
        n = model.num_spins
        offdiag = model.coupling_matrix[~np.eye(n, dtype=bool)]
        sigma = float(np.std(offdiag))
        if sigma == 0.0:
            raise DomainError(
                "off-diagonal couplings have zero spread; supply c0 explicitly")
        return 0.7 * self.a0 / (sigma * np.sqrt(n))

    def ramp(self, step: int) -> float:
        span = max(self.steps - 1, 1)
        return self.a0 * step / span


def simulated_bifurcation(model: IsingModel, params: SbParams = SbParams(),
                          seed: int = 0) -> SampleSet:
    """Discrete simulated bifurcation; returns the binarized final state per replica.

    The Ising gradient enters with a minus sign so the oscillator network
    minimizes H(s) = sum J_ij s_i s_j + sum h_i s_i under this package's sign
    convention.
    """
    n = model.num_spins
    jsym = model.coupling_matrix
    h = model.fields_vector
    c0 = params.resolve_c0(model)
    rng = np.random.default_rng(seed)

    t0 = time.perf_counter()
    x = np.zeros((params.replicas, n))
    y = rng.uniform(-0.1, 0.1, size=(params.replicas, n))
    for step in range(params.steps):
        a_t = params.ramp(step)
        grad = -(_binarize(x) @ jsym + h)
        y += (-(params.a0 - a_t) * x + c0 * grad) * params.dt
        x += params.a0 * y * params.dt
        stuck = np.abs(x) > 1.0
        x[stuck] = np.sign(x[stuck])
        y[stuck] = 0.0
        assert np.all(np.abs(x) <= 1.0)
    run_time = max(time.perf_counter() - t0, 1e-9)

    final = _binarize(x)
    records = [SampleRecord(final[r].copy(), energy(model, final[r]), r)
               for r in range(params.replicas)]
    return SampleSet("sbm", seed, asdict(params), records, run_time)


def steepest_descent(model: IsingModel, start: Iterable[int]) -> np.ndarray:
    """Greedy single-spin-flip descent; deterministic (lowest index wins ties)."""
    s = as_spins(start, model.num_spins).copy()
    jsym = model.coupling_matrix
    f = model.fields_vector + jsym @ s
    while True:
        gains = -2.0 * s * f
        k = int(np.argmin(gains))  # argmin takes the first (lowest) index on ties
        if gains[k] >= 0.0:
            return s
        f += -2.0 * s[k] * jsym[:, k]
        s[k] = -s[k]


def descent_sample_set(model: IsingModel, seed: int = 0,
                       restarts: int = 16) -> SampleSet:
    """Steepest descent from random starts, packaged like the other solvers."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    records = []
    for rep in range(restarts):
        start = rng.choice(np.array([-1, 1], dtype=np.int8), size=model.num_spins)
        cfg = steepest_descent(model, start)
        records.append(SampleRecord(cfg, energy(model, cfg), rep))
    run_time = max(time.perf_counter() - t0, 1e-9)
    return SampleSet("descent", seed, {"restarts": restarts}, records, run_time)
