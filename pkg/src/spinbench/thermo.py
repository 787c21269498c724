"""Thermodynamic characterization from sample statistics.

Effective-temperature estimation by pseudo-likelihood, uncertainty-relation
lower bounds on entropy production / heat / work built from the first two
moments of the observed energy change, operating-mode classification, and
efficiency figures. Everything is dimensionless (k_B = 1).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDataError, DomainError, InconsistencyError
from .model import IsingModel, energy_many

DEFAULT_BETA_MAX = 50.0


def snr_bound_function(x: float) -> float:
    """g(x) = x * atanh(x): even, convex on (-1, 1), g(0) = 0; inf at |x| = 1."""
    if abs(x) > 1:
        raise DomainError("argument must lie in [-1, 1]")
    if abs(x) == 1.0:
        return math.inf
    return x * math.atanh(x)


@dataclass(frozen=True)
class EnergyChangeStats:
    """First two raw moments of the per-run system energy change."""

    mean: float
    second_moment: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise DomainError("at least two observations are required")
        if self.second_moment < self.mean**2 - 1e-9 * max(1.0, self.mean**2):
            raise DomainError("second moment below mean^2: inconsistent moments")

    @classmethod
    def from_samples(cls, deltas) -> "EnergyChangeStats":
        d = np.asarray(deltas, dtype=float).ravel()
        return cls(mean=float(np.mean(d)), second_moment=float(np.mean(d**2)),
                   count=d.size)


def energy_change_stats(model: IsingModel, before: np.ndarray,
                        after: np.ndarray) -> EnergyChangeStats:
    """Stats of Delta E_1 = E(after) - E(before) under the problem Hamiltonian."""
    e0 = energy_many(model, np.asarray(before, dtype=np.int8))
    e1 = energy_many(model, np.asarray(after, dtype=np.int8))
    if e0.shape != e1.shape:
        raise DomainError("before/after sample counts differ")
    return EnergyChangeStats.from_samples(e1 - e0)


@dataclass(frozen=True)
class ThermoBounds:
    """Certified lower bounds derived from the signal-to-noise ratio of dE1."""

    entropy_lb: float  # on <Sigma>
    heat_lb: float  # on -<Q>
    work_lb: float  # on <W>
    num_spins: int | None = None

    @property
    def entropy_lb_per_spin(self) -> float:
        return self.entropy_lb / self._n()

    @property
    def heat_lb_per_spin(self) -> float:
        return self.heat_lb / self._n()

    @property
    def work_lb_per_spin(self) -> float:
        return self.work_lb / self._n()

    def _n(self) -> int:
        if self.num_spins is None:
            raise DomainError("per-spin values need num_spins")
        return self.num_spins


def tur_bounds(stats: EnergyChangeStats, beta1: float, beta2: float,
               num_spins: int | None = None) -> ThermoBounds:
    """Lower bounds on entropy production, dumped heat, and work.

    With r = <dE1> / sqrt(<dE1^2>) and g(x) = x atanh(x):
      <Sigma> >= 2 g(r)
      -<Q>    >= (2/b2) g(r) - (b1/b2) <dE1>
      <W>     >= (2/b2) g(r) + (1 - b1/b2) <dE1>
    """
    if beta1 <= 0 or beta2 <= 0:
        raise DomainError("inverse temperatures must be positive")
    if stats.second_moment <= 0:
        raise DegenerateDataError("second moment of dE1 vanishes")
    r = stats.mean / math.sqrt(stats.second_moment)
    r = max(-1.0, min(1.0, r))  # Cauchy-Schwarz guarantees |r| <= 1 up to rounding
    g = snr_bound_function(r)
    if math.isinf(g):
        return ThermoBounds(math.inf, math.inf, math.inf, num_spins)
    return ThermoBounds(
        entropy_lb=2.0 * g,
        heat_lb=(2.0 / beta2) * g - (beta1 / beta2) * stats.mean,
        work_lb=(2.0 / beta2) * g + (1.0 - beta1 / beta2) * stats.mean,
        num_spins=num_spins,
    )


class OperatingMode(enum.Enum):
    REFRIGERATOR = "R"
    ENGINE = "E"
    ACCELERATOR = "A"
    HEATER = "H"


def classify_mode(de1_mean: float, de2_mean: float,
                  w_mean: float) -> OperatingMode:
    """Sign-pattern classification of (dE1, dE2, W).

    Exact zeros match the ">= 0" side, so (0, 0, 0) lands on Heater; rows are
    checked in R, E, A, H order.
    """
    s1, s2, sw = (v < 0 for v in (de1_mean, de2_mean, w_mean))
    # si is True for strictly negative values; zeros count as nonnegative
    if not s1 and s2 and not sw:
        return OperatingMode.REFRIGERATOR
    if s1 and not s2 and sw:
        return OperatingMode.ENGINE
    if s1 and not s2 and not sw:
        return OperatingMode.ACCELERATOR
    if not s1 and not s2 and not sw:
        return OperatingMode.HEATER
    raise InconsistencyError(
        f"sign pattern ({de1_mean}, {de2_mean}, {w_mean}) matches no operating mode")


def infer_mode(de1_mean: float, bounds: ThermoBounds) -> OperatingMode | None:
    """Mode inference when only dE1 and the TUR bounds are available.

    dE2 = -Q >= heat_lb and W >= work_lb certify strict positivity only; when
    the bounds straddle zero the mode is indeterminate and None is returned.
    """
    de2_positive = bounds.heat_lb > 0
    w_positive = bounds.work_lb > 0
    if de2_positive and w_positive:
        return OperatingMode.ACCELERATOR if de1_mean < 0 else OperatingMode.HEATER
    return None


def ground_state_fraction(configs: np.ndarray, ground_states: np.ndarray) -> float:
    """P_GS: fraction of sampled configurations equal to a certified ground state."""
    configs = np.asarray(configs, dtype=np.int8)
    ground_states = np.atleast_2d(np.asarray(ground_states, dtype=np.int8))
    hits = np.zeros(len(configs), dtype=bool)
    for g in ground_states:
        hits |= np.all(configs == g, axis=1)
    return float(np.mean(hits))


def solution_quality(energies, e_star: float) -> float:
    """Q_GS: mean ratio of sampled energies to the certified optimum."""
    if e_star == 0:
        raise DomainError("solution quality is undefined for E* = 0")
    return float(np.mean(np.asarray(energies, dtype=float) / e_star))


def efficiencies(p_gs: float, work_lb: float,
                 heat_lb: float) -> tuple[float, float]:
    """Upper bounds (eta_comp, eta_th) evaluated with the certified bounds.

    eta_comp <= P_GS / <W> becomes P_GS / work_lb; eta_th <= -<W>/<Q> becomes
    work_lb / heat_lb with -<Q> replaced by its bound.
    """
    if p_gs == 0:
        eta_comp = 0.0
    else:
        if work_lb <= 0:
            raise DomainError("eta_comp needs a positive work bound")
        eta_comp = p_gs / work_lb
    if heat_lb == 0:
        raise DomainError("eta_th needs a nonzero heat bound")
    eta_th = work_lb / heat_lb
    return eta_comp, eta_th


@dataclass(frozen=True)
class BetaEstimate:
    beta: float
    log_pseudo_likelihood: float
    boundary_hit: bool


def log_pseudo_likelihood(model: IsingModel, samples: np.ndarray,
                          beta: float) -> float:
    """Mean log pseudo-likelihood of the samples at inverse temperature beta.

    Under H(s) = sum J_ij s_i s_j + sum h_i s_i the single-spin conditional is
    p(s_i | rest) = 1 / (1 + exp(+2 beta s_i f_i)) with f_i the local field,
    so the summand is ln(1 + exp(+2 beta s_i f_i)); a sample anti-aligned
    with its local field becomes more likely as beta grows.
    """
    a = _effective_alignments(model, samples)
    return -float(np.mean(np.logaddexp(0.0, 2.0 * beta * a)))


def _effective_alignments(model: IsingModel, samples: np.ndarray) -> np.ndarray:
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] != model.num_spins:
        raise DomainError(f"expected (D, {model.num_spins}) samples, got {s.shape}")
    local = s @ model.coupling_matrix + model.fields_vector
    return s * local


def pseudo_likelihood_beta(model: IsingModel, samples: np.ndarray,
                           beta_max: float = DEFAULT_BETA_MAX,
                           tol: float = 1e-6) -> BetaEstimate:
    """Maximize the pseudo-likelihood over beta in [0, beta_max].

    Golden-section search on the bracketed interval; an argmax within 100*tol
    of beta_max is flagged as a boundary hit (perfectly ordered data drives
    the estimator to the edge).
    """
    if np.asarray(samples).shape[0] < 1:
        raise DomainError("at least one sample is required")
    a = _effective_alignments(model, samples)
    if np.all(a == 0):
        raise DegenerateDataError(
            "all effective local fields vanish; pseudo-likelihood is flat")

    def objective(beta: float) -> float:
        return -float(np.mean(np.logaddexp(0.0, 2.0 * beta * a)))

    golden = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, beta_max
    x1 = hi - golden * (hi - lo)
    x2 = lo + golden * (hi - lo)
    f1, f2 = objective(x1), objective(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + golden * (hi - lo)
            f2 = objective(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - golden * (hi - lo)
            f1 = objective(x1)
    beta = (lo + hi) / 2.0
    return BetaEstimate(beta=beta, log_pseudo_likelihood=objective(beta),
                        boundary_hit=beta >= beta_max - 100 * tol)
