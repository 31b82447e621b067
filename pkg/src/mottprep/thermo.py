"""Grand-canonical occupation statistics in the zero-tunneling limit.

Site occupation probabilities follow the atomic-limit Boltzmann weights
exp(beta * [mu*n - U*n*(n-1)/2]) / Z, parameterized by the two dimensionless
numbers mu_U = mu/U and T_U = kT/U.  Also provides on-site entropy, the local
chemical potential of a harmonically trapped cloud, and the many-body overlap
with the unit-filled target state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import atomic_mass, h
from scipy.special import logsumexp

from .exceptions import ContractError

TAIL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ThermalParams:
    """Dimensionless chemical potential and temperature, plus an occupation cap.

    The cap is a starting point only: distributions grow it automatically
    until the retained tail mass is below 1e-12.
    """

    mu_U: float
    T_U: float
    n_cap: int = 10

    def __post_init__(self):
        if self.T_U <= 0:
            raise ContractError("T_U must be positive")
        if self.n_cap < 2:
            raise ContractError("n_cap must be at least 2")


@dataclass(frozen=True)
class TrapParams:
    """Harmonic confinement and lattice geometry for 87Rb-like experiments."""

    omega_trap_hz: float = 80.0       # trap frequency omega / 2 pi
    u_int_hz: float = 1000.0          # on-site interaction U / h
    mass_kg: float = 87.0 * atomic_mass
    spacing_um: float = 0.5

    def __post_init__(self):
        for name in ("omega_trap_hz", "u_int_hz", "mass_kg", "spacing_um"):
            if getattr(self, name) <= 0:
                raise ContractError(f"{name} must be positive")


@dataclass(frozen=True)
class OccupationDistribution:
    """Probability mass over site occupation numbers n = 0..n_cap."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise ContractError("occupation distribution needs entries for n >= 1")
        if np.any(p < -1e-15) or np.any(p > 1 + 1e-15):
            raise ContractError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > 1e-10:
            raise ContractError(f"probabilities sum to {p.sum()}, not 1")
        object.__setattr__(self, "p", p)

    @property
    def n_cap(self) -> int:
        return self.p.size - 1

    def mean(self) -> float:
        return float(np.dot(np.arange(self.p.size), self.p))


def occupation_distribution(params: ThermalParams) -> OccupationDistribution:
    """Thermal number distribution at (mu_U, T_U).

    Evaluated with log-sum-exp stabilization, so extreme T_U never overflows.
    The cap grows until the top-bin mass is below 1e-12.
    """
    n_cap = params.n_cap
    while True:
        n = np.arange(n_cap + 1)
        logw = (params.mu_U * n - 0.5 * n * (n - 1)) / params.T_U
        logp = logw - logsumexp(logw)
        p = np.exp(logp)
        if p[-1] < TAIL_TOLERANCE:
            break
        n_cap *= 2
    p /= p.sum()
    return OccupationDistribution(p=p)


def defect_probability(dist: OccupationDistribution) -> float:
    """Probability that a site holds anything other than exactly one atom."""
    return float(1.0 - dist.p[1])


def site_entropy(dist: OccupationDistribution, mode: str = "binary") -> float:
    """On-site entropy in nats.

    binary mode sums -p log p over n in {0, 1} only; full mode sums over all
    occupations.  The 0 log 0 limit is taken as zero.
    """
    if mode == "binary":
        p = dist.p[:2]
    elif mode == "full":
        p = dist.p
    else:
        raise ContractError(f"unknown entropy mode {mode!r}")
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def local_chemical_potential(r_um: float, mu0_U: float, trap: TrapParams) -> float:
    """Local-density chemical potential mu(r) = mu0 - m w^2 r^2 / 2, in U units."""
    if np.any(np.asarray(r_um) < 0):
        raise ContractError("radius must be non-negative")
    omega = 2.0 * math.pi * trap.omega_trap_hz
    v_harm = 0.5 * trap.mass_kg * omega ** 2 * (np.asarray(r_um) * 1e-6) ** 2
    return mu0_U - v_harm / (h * trap.u_int_hz)


def overlap_infidelity(p1_by_site, mask=None) -> tuple[int, float]:
    """Count of selected sites and 1 - OL, with OL the product of their P(1).

    The product is accumulated in log space; a selected site with P(1) = 0
    gives OL = 0 exactly.
    """
    p1 = np.asarray(p1_by_site, dtype=float)
    if np.any(p1 < 0) or np.any(p1 > 1):
        raise ContractError("per-site P(1) values must lie in [0, 1]")
    if mask is not None:
        p1 = p1[np.asarray(mask, dtype=bool)]
    count = int(p1.size)
    if count == 0:
        return 0, 0.0
    if np.any(p1 == 0.0):
        return count, 1.0
    log_ol = float(np.sum(np.log(p1)))
    return count, float(-np.expm1(log_ol))
