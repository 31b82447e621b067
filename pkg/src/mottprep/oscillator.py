"""Harmonic-oscillator densities, interaction-strength ratios and level shifts.

Atoms in one well are labeled by (hyperfine state, 1D vibrational quantum
number along the excitation direction).  The on-site interaction energy of a
pair depends on the spatial overlap of their vibrational densities; all
energies here are expressed in units of the ground-ground strength U00.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.special import eval_hermite

from .exceptions import CapabilityError, ContractError, NumericError

ALPHA = "alpha"
BETA = "beta"

DEFAULT_NU_MAX = 4
DEFAULT_WELL_CAP = 8

# Quadrature grid: the integrands are Gaussians times polynomials, so a
# trapezoid rule on a wide fixed window converges exponentially.
_QUAD_HALF_WIDTH = 12.0
_QUAD_POINTS = 4001


def wavefunction_density(nu: int, x, nu_max: int = DEFAULT_NU_MAX):
    """|psi_nu(x)|^2 for the 1D harmonic oscillator in natural units.

    x is measured in oscillator lengths; the density integrates to one.
    """
    if nu < 0 or nu > nu_max:
        raise CapabilityError(f"vibrational level {nu} exceeds cap {nu_max}")
    x = np.asarray(x, dtype=float)
    norm = 1.0 / (math.sqrt(math.pi) * (2.0 ** nu) * math.factorial(nu))
    h = eval_hermite(nu, x)
    return norm * h * h * np.exp(-x * x)


def _overlap_integral(nu: int, mu: int, grid: np.ndarray) -> float:
    dens = wavefunction_density(nu, grid, nu_max=max(nu, mu)) * \
        wavefunction_density(mu, grid, nu_max=max(nu, mu))
    return float(np.trapezoid(dens, grid))


def relative_interaction(nu: int, mu: int, nu_max: int = DEFAULT_NU_MAX) -> float:
    """Pair interaction strength U_{nu,mu} / U_00 by numerical quadrature.

    Includes the exchange factor (2 - delta_{nu,mu}).  Only one direction is
    vibrationally excited, so the transverse overlaps cancel in the ratio.
    """
    if nu > nu_max or mu > nu_max:
        raise CapabilityError(f"levels ({nu},{mu}) exceed cap {nu_max}")
    grid = np.linspace(-_QUAD_HALF_WIDTH, _QUAD_HALF_WIDTH, _QUAD_POINTS)
    ref = _overlap_integral(0, 0, grid)
    norm_check = float(np.trapezoid(wavefunction_density(max(nu, mu), grid,
                                                         nu_max=max(nu, mu)), grid))
    if abs(norm_check - 1.0) > 1e-9:
        raise NumericError(f"quadrature grid does not resolve level {max(nu, mu)}")
    exchange = 2.0 - (1.0 if nu == mu else 0.0)
    return exchange * _overlap_integral(nu, mu, grid) / ref


@dataclass(frozen=True)
class InteractionMatrix:
    """Symmetric table of relative pair strengths U[nu][mu] in units of U00.

    u00_hz carries the absolute scale U00/h so detunings can be converted
    to laboratory frequencies.
    """

    entries: np.ndarray
    u00_hz: float = 1000.0

    @property
    def nu_max(self) -> int:
        return self.entries.shape[0] - 1

    @classmethod
    def compute(cls, nu_max: int = DEFAULT_NU_MAX, u00_hz: float = 1000.0) -> "InteractionMatrix":
        table = np.empty((nu_max + 1, nu_max + 1))
        for nu in range(nu_max + 1):
            for mu in range(nu, nu_max + 1):
                table[nu, mu] = table[mu, nu] = relative_interaction(nu, mu, nu_max=nu_max)
        table.setflags(write=False)
        return cls(entries=table, u00_hz=u00_hz)

    def __getitem__(self, key) -> float:
        nu, mu = key
        if nu > self.nu_max or mu > self.nu_max:
            raise CapabilityError(f"levels ({nu},{mu}) exceed cap {self.nu_max}")
        return float(self.entries[nu, mu])


@dataclass(frozen=True)
class WellConfig:
    """Multiset of atoms in one well, each labeled (hyperfine, vibrational level).

    Stored as a sorted tuple so equal configurations compare equal.
    """

    atoms: tuple = ()

    @classmethod
    def of(cls, *atoms, cap: int = DEFAULT_WELL_CAP, fermionic: bool = False) -> "WellConfig":
        atoms = tuple(sorted(atoms))
        if len(atoms) > cap:
            raise ContractError(f"well holds {len(atoms)} atoms, cap is {cap}")
        for state, nu in atoms:
            if state not in (ALPHA, BETA):
                raise ContractError(f"unknown hyperfine label {state!r}")
            if nu < 0:
                raise ContractError(f"negative vibrational level {nu}")
        if fermionic and len(set(atoms)) != len(atoms):
            raise ContractError("fermionic well holds two atoms in the same state")
        return cls(atoms=atoms)

    def __len__(self) -> int:
        return len(self.atoms)

    def count(self, state: str, nu: int) -> int:
        return self.atoms.count((state, nu))

    def add(self, state: str, nu: int) -> "WellConfig":
        return WellConfig.of(*self.atoms, (state, nu))

    def remove(self, state: str, nu: int) -> "WellConfig":
        atoms = list(self.atoms)
        atoms.remove((state, nu))
        return WellConfig(atoms=tuple(atoms))

    def levels(self) -> Iterable[int]:
        return (nu for _, nu in self.atoms)


def config_energy(config: WellConfig, matrix: InteractionMatrix,
                  cross_state_scale: float = 1.0) -> float:
    """Total interaction energy of a well configuration, in U00 units.

    Sums the pair strength over all unordered atom pairs.  The hyperfine
    label does not change the strength except through the optional
    cross_state_scale applied to alpha-beta pairs (default 1.0).
    """
    atoms = config.atoms
    total = 0.0
    for i in range(len(atoms)):
        si, ni = atoms[i]
        for j in range(i + 1, len(atoms)):
            sj, nj = atoms[j]
            u = matrix[ni, nj]
            if si != sj:
                u *= cross_state_scale
            total += u
    return total


def transition_detuning(initial: WellConfig, final: WellConfig,
                        matrix: InteractionMatrix,
                        cross_state_scale: float = 1.0) -> float:
    """Interaction-energy shift of a transition, final minus initial, in U00 units."""
    if len(initial) != len(final):
        raise ContractError(
            f"atom count changes {len(initial)} -> {len(final)}; "
            "detunings are defined for number-conserving transitions")
    return (config_energy(final, matrix, cross_state_scale)
            - config_energy(initial, matrix, cross_state_scale))
