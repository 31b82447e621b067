"""2D trapped-lattice engine: analytic propagation and Monte Carlo validation.

Each site of a square grid carries a thermal occupation distribution at the
local chemical potential.  Filtering, merging and skimming act per site;
merging treats every site as the target of a three-well group with its actual
neighbors along the merge axis, the consumed atoms being re-supplied from the
unpurified cloud outside the purified domain (transport distances grow with
the iteration count but are not modeled spatially).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .exceptions import ContractError
from .protocol import (ErrorModel, filter_transfer_matrix, merge_protocol,
                       vacancy_recursion)
from .thermo import (OccupationDistribution, ThermalParams, TrapParams,
                     local_chemical_potential, occupation_distribution,
                     overlap_infidelity, site_entropy)

GRID_MARGIN_T_U = 5.0   # grid must reach mu_loc < -5 T_U, where P(n>=1) < 1e-20
MULTI_OCC_TOLERANCE = 1e-9

_AXES = {"x": 0, "y": 1}


@dataclass(frozen=True)
class Filter:
    n_max: int = 10


@dataclass(frozen=True)
class Merge:
    axis: str = "x"
    mode: str = "parallel"


@dataclass(frozen=True)
class Skim:
    r_cut_um: float = math.inf


@dataclass(frozen=True)
class Schedule:
    """Ordered pipeline steps plus the error configuration applied to them."""

    steps: tuple
    per_pulse_error: float = 0.0
    merge_infidelity: float = 0.0
    eps_f: float = 0.0

    def __post_init__(self):
        steps = tuple(self.steps)
        object.__setattr__(self, "steps", steps)
        skims = [i for i, s in enumerate(steps) if isinstance(s, Skim)]
        if len(skims) > 1 or (skims and skims[0] != len(steps) - 1):
            raise ContractError("at most one skim step is allowed, and only as the final step")
        for s in steps:
            if isinstance(s, Merge) and (s.axis not in _AXES or s.mode not in ("parallel", "serial")):
                raise ContractError(f"invalid merge step {s}")


@dataclass(frozen=True)
class LatticeField:
    """Square grid of statistically independent sites around the trap center.

    coords holds integer site coordinates (n, 2); probs holds one occupation
    distribution per site, aligned with coords.
    """

    coords: np.ndarray
    probs: np.ndarray
    spacing_um: float
    grid_radius_sites: int

    @property
    def radii_um(self) -> np.ndarray:
        return np.hypot(self.coords[:, 0], self.coords[:, 1]) * self.spacing_um

    @property
    def p1(self) -> np.ndarray:
        return self.probs[:, 1]

    @property
    def vacancy(self) -> np.ndarray:
        return self.probs[:, 0]

    def total_atoms(self) -> float:
        n = np.arange(self.probs.shape[1])
        return float(np.sum(self.probs @ n))

    def site_index(self) -> dict:
        return {(int(x), int(y)): i for i, (x, y) in enumerate(self.coords)}

    def snapshot(self) -> str:
        """Structured-text dump of the grid for regression pinning."""
        lines = ["# x y " + " ".join(f"p{n}" for n in range(self.probs.shape[1]))]
        order = np.lexsort((self.coords[:, 1], self.coords[:, 0]))
        for i in order:
            probs = " ".join(f"{v:.12e}" for v in self.probs[i])
            lines.append(f"{self.coords[i, 0]} {self.coords[i, 1]} {probs}")
        return "\n".join(lines)


def suggested_grid_radius(thermal: ThermalParams, trap: TrapParams) -> int:
    """Smallest grid radius (in sites) reaching mu_loc = mu0 - 5 T_U."""
    drop = GRID_MARGIN_T_U * thermal.T_U + max(thermal.mu_U, 0.0)
    from scipy.constants import h
    omega = 2.0 * math.pi * trap.omega_trap_hz
    r_m = math.sqrt(2.0 * drop * h * trap.u_int_hz / (trap.mass_kg * omega ** 2))
    return int(math.ceil(r_m * 1e6 / trap.spacing_um))


def build_thermal_lattice(thermal: ThermalParams, trap: TrapParams,
                          grid_radius_sites: int | None = None) -> LatticeField:
    """Thermal state of the trapped lattice in the local-density approximation.

    Every site at radius r gets the homogeneous distribution evaluated at
    mu_loc(r).  Deterministic; sites at equal radius share one distribution.
    """
    needed = suggested_grid_radius(thermal, trap)
    if grid_radius_sites is None:
        grid_radius_sites = needed
    elif grid_radius_sites < needed:
        raise ContractError(
            f"grid radius {grid_radius_sites} leaves occupied sites outside the "
            f"grid; use at least {needed}")

    r = grid_radius_sites
    xs, ys = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1), indexing="ij")
    inside = xs ** 2 + ys ** 2 <= r * r
    coords = np.stack([xs[inside], ys[inside]], axis=1)

    # Center site has the largest mu, hence the widest distribution: it fixes
    # the common cap.
    center = occupation_distribution(thermal)
    n_cap = center.n_cap
    by_r2: dict[int, np.ndarray] = {}
    probs = np.empty((coords.shape[0], n_cap + 1))
    for i, (x, y) in enumerate(coords):
        r2 = int(x * x + y * y)
        if r2 not in by_r2:
            mu_loc = local_chemical_potential(math.sqrt(r2) * trap.spacing_um,
                                              thermal.mu_U, trap)
            d = occupation_distribution(
                ThermalParams(mu_U=float(mu_loc), T_U=thermal.T_U, n_cap=n_cap))
            p = np.zeros(n_cap + 1)
            p[:d.p.size] = d.p[:n_cap + 1]
            by_r2[r2] = p / p.sum()
        probs[i] = by_r2[r2]
    return LatticeField(coords=coords, probs=probs, spacing_um=trap.spacing_um,
                        grid_radius_sites=grid_radius_sites)


def propagate_filter(field: LatticeField, n_max: int = 10,
                     per_pulse_error: float = 0.0) -> LatticeField:
    """Apply the filtering sweep independently to every site."""
    t = filter_transfer_matrix(field.probs.shape[1] - 1, n_max, per_pulse_error)
    return replace(field, probs=field.probs @ t.T)


def _neighbor_vacancy(field: LatticeField, axis: str, probs: np.ndarray):
    """Vacancy of the two neighbors along the axis; outside the grid counts vacant."""
    index = field.site_index()
    ax = _AXES[axis]
    eps = probs[:, 0]
    eps_l = np.ones_like(eps)
    eps_r = np.ones_like(eps)
    for i, (x, y) in enumerate(field.coords):
        step = np.array([0, 0])
        step[ax] = 1
        left = index.get((int(x - step[0]), int(y - step[1])))
        right = index.get((int(x + step[0]), int(y + step[1])))
        if left is not None:
            eps_l[i] = eps[left]
        if right is not None:
            eps_r[i] = eps[right]
    return eps_l, eps_r


def propagate_merge(field: LatticeField, axis: str = "x", mode: str = "parallel",
                    baseline: LatticeField | None = None) -> LatticeField:
    """One merge iteration at distribution level.

    Each site becomes the target of a three-well group with its actual
    neighbors along the axis: vacancy' = eps_m (eps_l + eps_r - eps_l eps_r),
    the inhomogeneous form of the closed-form recursion.  parallel mode takes
    the neighbors from the current (purified) field; serial mode draws them
    fresh from the unpurified baseline (default: the field itself on the
    first call).  Atoms consumed from neighbor groups are re-supplied from
    the surrounding cloud, so the site geometry is preserved.
    """
    if axis not in _AXES:
        raise ContractError(f"unknown merge axis {axis!r}")
    if mode not in ("parallel", "serial"):
        raise ContractError(f"unknown merge mode {mode!r}")
    multi = field.probs[:, 2:].sum(axis=1)
    if np.any(multi > MULTI_OCC_TOLERANCE):
        raise ContractError("merge requires a filtered field (binary occupancies)")

    source = field if mode == "parallel" or baseline is None else baseline
    eps_l, eps_r = _neighbor_vacancy(field, axis, source.probs)
    eps = field.probs[:, 0]
    eps_new = eps * (eps_l + eps_r - eps_l * eps_r)
    probs = np.zeros_like(field.probs)
    probs[:, 0] = eps_new
    probs[:, 1] = 1.0 - eps_new
    return replace(field, probs=probs)


def apply_error_floor(field: LatticeField, eps_f: float) -> LatticeField:
    """Clamp every site's vacancy from below at the pulse-error floor."""
    if eps_f <= 0:
        return field
    probs = field.probs.copy()
    lift = np.maximum(eps_f - probs[:, 0], 0.0)
    probs[:, 0] += lift
    probs[:, 1] = np.maximum(probs[:, 1] - lift, 0.0)
    return replace(field, probs=probs)


def skim(field: LatticeField, r_cut_um: float) -> LatticeField:
    """Empty all sites strictly beyond the cut radius (boundary sites are kept)."""
    probs = field.probs.copy()
    outside = field.radii_um > r_cut_um
    probs[outside] = 0.0
    probs[outside, 0] = 1.0
    return replace(field, probs=probs)


def run_schedule(field: LatticeField, schedule: Schedule) -> list[tuple[str, LatticeField]]:
    """Run a pipeline, returning labeled snapshots after every step.

    The error floor, when configured, is applied after each merge iteration.
    """
    stages = [("initial", field)]
    baseline = None
    merges = 0
    for step in schedule.steps:
        if isinstance(step, Filter):
            field = propagate_filter(field, step.n_max, schedule.per_pulse_error)
            baseline = field
            stages.append(("filtered", field))
        elif isinstance(step, Merge):
            field = propagate_merge(field, step.axis, step.mode, baseline=baseline)
            field = apply_error_floor(field, schedule.eps_f)
            merges += 1
            stages.append((f"merge{merges}", field))
        elif isinstance(step, Skim):
            field = skim(field, step.r_cut_um)
            stages.append(("skimmed", field))
        else:
            raise ContractError(f"unknown schedule step {step!r}")
    return stages


def radial_profile(field: LatticeField, quantity: str = "P1",
                   bin_width_um: float | None = None) -> np.ndarray:
    """Radially binned average of a per-site quantity; rows of (r, value)."""
    if bin_width_um is None:
        bin_width_um = field.spacing_um
    if quantity == "P1":
        values = field.p1
    elif quantity == "defect":
        values = 1.0 - field.p1
    elif quantity == "entropy":
        values = np.array([site_entropy(OccupationDistribution(p=p / p.sum()))
                           for p in field.probs])
    else:
        raise ContractError(f"unknown profile quantity {quantity!r}")
    bins = np.floor(field.radii_um / bin_width_um).astype(int)
    rows = []
    for b in np.unique(bins):
        sel = bins == b
        rows.append(((b + 0.5) * bin_width_um, values[sel].mean()))
    return np.array(rows)


def plateau_radius_um(field: LatticeField, threshold: float = 1.0 - 1e-3) -> float:
    """Largest radius whose entire disc satisfies P(1) >= threshold (0 if none)."""
    order = np.argsort(field.radii_um, kind="stable")
    radii = field.radii_um[order]
    p1 = field.p1[order]
    bad = np.nonzero(p1 < threshold)[0]
    if bad.size == 0:
        return float(radii[-1])
    if bad[0] == 0:
        return 0.0
    return float(radii[bad[0] - 1])


def infidelity_curve(field: LatticeField, r_cuts=None) -> np.ndarray:
    """Rows of (r_cut, N_sites, 1 - OL) over a grid of skim radii.

    N counts the lattice sites of the disc; the overlap multiplies the
    per-site P(1) of every retained site.
    """
    radii = field.radii_um
    if r_cuts is None:
        r_cuts = np.unique(np.round(radii / field.spacing_um)) * field.spacing_um
    rows = []
    for r_cut in np.asarray(r_cuts, dtype=float):
        mask = radii <= r_cut
        count, infid = overlap_infidelity(field.p1, mask=mask)
        rows.append((r_cut, count, infid))
    return np.array(rows)


def vacancy_vs_radius(mu0_U: float, T_U: float, trap: TrapParams,
                      merges: int = 0, n_max: int = 10):
    """Continuous post-filter vacancy profile eps(r), with optional merge steps.

    Local-density evaluation at arbitrary radius; merge steps apply the
    parallel recursion at fixed radius.  Useful for root-finding features of
    the radial curves, e.g. the entropy peak where p0 = p1.
    """
    def eps(r_um: float) -> float:
        mu_loc = float(local_chemical_potential(r_um, mu0_U, trap))
        dist = occupation_distribution(ThermalParams(mu_U=mu_loc, T_U=T_U))
        filtered = float(dist.p[0])  # filtering leaves the vacancy mass unchanged
        if merges:
            filtered = vacancy_recursion(filtered, merges, "parallel")[-1]
        return filtered
    return eps


def entropy_peak_radius_um(mu0_U: float, T_U: float, trap: TrapParams,
                           merges: int = 0, r_max_um: float = 30.0) -> tuple[float, float]:
    """Radius where the binary entropy of the post-filter profile peaks, and its value.

    After filtering the per-site distribution is binary, so the peak sits at
    the root of eps(r) = 1/2 and equals ln 2.
    """
    eps = vacancy_vs_radius(mu0_U, T_U, trap, merges=merges)
    if eps(0.0) >= 0.5:
        raise ContractError("no entropy shell: the center is already half vacant")
    r_peak = brentq(lambda r: eps(r) - 0.5, 0.0, r_max_um, xtol=1e-12)
    e = eps(r_peak)
    entropy = -(e * math.log(e) + (1 - e) * math.log(1 - e))
    return float(r_peak), float(entropy)


# ---------------------------------------------------------------------------
# Monte Carlo validation


@dataclass(frozen=True)
class TripleMCResult:
    """Empirical vacancy of the target well with its binomial standard error."""

    empirical_vacancy: float
    stderr: float
    n_samples: int
    analytic_vacancy: float


def merge_outcome_lookup(matrix=None) -> dict:
    """Map binary (n_l, n_m, n_r) to the zero-error protocol outcome."""
    return {(l, m, r): merge_protocol(l, m, r, matrix=matrix).ground_occupied
            for l in (0, 1) for m in (0, 1) for r in (0, 1)}


def monte_carlo_triples(eps0: float, n_samples: int, seed: int,
                        iterations: int = 1, mode: str = "parallel",
                        error_model: ErrorModel | None = None) -> TripleMCResult:
    """Sample three-well groups and push them through the exact state machine.

    Without an error model the 2^(3^i) well patterns are drawn multinomially
    and each pattern is mapped once through merge_protocol; with an error
    model every group is simulated individually (slower).
    """
    if n_samples < 1:
        raise ContractError("need at least one sample")
    rng = np.random.default_rng(seed)
    analytic = vacancy_recursion(eps0, iterations, mode)[-1]

    if error_model is None:
        lookup = merge_outcome_lookup()

        def target_occupied(wells) -> bool:
            # Reduce a 3^i-well pattern through i rounds of disjoint merges.
            wells = list(wells)
            while len(wells) > 1:
                wells = [int(lookup[(wells[j], wells[j + 1], wells[j + 2])])
                         for j in range(0, len(wells), 3)]
            return bool(wells[0])

        if mode == "parallel":
            n_wells = 3 ** iterations
            patterns = [tuple(int(b) for b in format(i, f"0{n_wells}b"))
                        for i in range(2 ** n_wells)]
            occ = 1.0 - eps0
            probs = np.array([
                math.prod(occ if w else eps0 for w in pat) for pat in patterns])
            counts = rng.multinomial(n_samples, probs / probs.sum())
            vacant = sum(int(c) for pat, c in zip(patterns, counts)
                         if not target_occupied(pat))
        else:
            # Serial: the target survives i rounds against fresh neighbor pairs.
            lut = np.zeros((2, 2, 2), dtype=np.int8)
            for key, occupied in lookup.items():
                lut[key] = occupied
            target = (rng.random(n_samples) < (1.0 - eps0)).astype(np.int8)
            for _ in range(iterations):
                left = (rng.random(n_samples) < (1.0 - eps0)).astype(np.int8)
                right = (rng.random(n_samples) < (1.0 - eps0)).astype(np.int8)
                target = lut[left, target, right]
            vacant = int(n_samples - np.count_nonzero(target))
    else:
        if mode != "parallel" or iterations != 1:
            raise ContractError("error-model Monte Carlo supports a single parallel step")
        vacant = 0
        wells = rng.random((n_samples, 3)) < (1.0 - eps0)
        for l, m, r in wells:
            out = merge_protocol(int(l), int(m), int(r),
                                 error_model=error_model, rng=rng)
            vacant += not out.ground_occupied
    p = vacant / n_samples
    stderr = math.sqrt(max(p * (1 - p), 1e-300) / n_samples)
    return TripleMCResult(empirical_vacancy=p, stderr=stderr,
                          n_samples=n_samples, analytic_vacancy=analytic)


def monte_carlo_run(field: LatticeField, schedule: Schedule, seed: int,
                    n_realizations: int):
    """Empirical per-site P(1) after running the schedule on sampled lattices.

    Occupations are sampled from the analytic distributions; merge steps use
    the exact protocol outcome per site with fresh neighbor draws matching
    the analytic independence assumption.  Deterministic for a fixed seed.
    Returns (p1_mean, p1_stderr) aligned with field.coords.
    """
    if n_realizations < 1:
        raise ContractError("need at least one realization")
    rng = np.random.default_rng(seed)
    stages = run_schedule(field, schedule)
    stage_fields = dict(stages)
    error_model = (ErrorModel(conditional_pulse_error=schedule.per_pulse_error,
                              merge_infidelity=schedule.merge_infidelity)
                   if (schedule.per_pulse_error or schedule.merge_infidelity) else None)
    lookup = merge_outcome_lookup()
    n_sites = field.coords.shape[0]
    cum = np.cumsum(field.probs, axis=1)
    hits = np.zeros(n_sites)

    baseline_probs = field.probs
    for _ in range(n_realizations):
        u = rng.random(n_sites)
        occ = np.sum(u[:, None] > cum, axis=1)  # inverse-CDF sample per site
        merges = 0
        current_analytic = field.probs
        for step in schedule.steps:
            if isinstance(step, Filter):
                occ = _sample_filter(occ, step.n_max, schedule.per_pulse_error, rng)
                current_analytic = stage_fields["filtered"].probs
                baseline_probs = current_analytic
            elif isinstance(step, Merge):
                source = current_analytic if step.mode == "parallel" else baseline_probs
                neigh_l = rng.random(n_sites) < (1.0 - _neighbor_vacancy(
                    field, step.axis, source)[0])
                neigh_r = rng.random(n_sites) < (1.0 - _neighbor_vacancy(
                    field, step.axis, source)[1])
                if error_model is None:
                    occ = np.array([int(lookup[(int(l), int(m), int(r))])
                                    for l, m, r in zip(neigh_l, occ > 0, neigh_r)])
                else:
                    occ = np.array([
                        int(merge_protocol(int(l), int(m), int(r),
                                           error_model=error_model,
                                           rng=rng).ground_occupied)
                        for l, m, r in zip(neigh_l, occ > 0, neigh_r)])
                if schedule.eps_f > 0:
                    occ = np.where(rng.random(n_sites) < schedule.eps_f, 0, occ)
                merges += 1
                current_analytic = stage_fields[f"merge{merges}"].probs
            elif isinstance(step, Skim):
                occ = np.where(field.radii_um > step.r_cut_um, 0, occ)
        hits += occ == 1
    p1 = hits / n_realizations
    stderr = np.sqrt(np.maximum(p1 * (1 - p1), 1e-300) / n_realizations)
    return p1, stderr


def _sample_filter(occ: np.ndarray, n_max: int, per_pulse_error: float, rng) -> np.ndarray:
    """Sampled filtering chains: each pulse step fails independently."""
    occ = occ.copy()
    if per_pulse_error == 0.0:
        occ[(occ >= 1) & (occ <= n_max)] = 1
        return occ
    for n in range(n_max, 1, -1):
        active = occ == n
        success = rng.random(occ.shape) >= per_pulse_error
        occ[active & success] -= 1
    return occ
