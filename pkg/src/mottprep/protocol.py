"""Number-filtering sweep and the three-well vacancy-merging state machine.

The merge pipeline combines a target well with its right and left neighbors
via unitary level mappings, then uses interaction-shift-resolved Raman pulses
to leave exactly one ground-state atom whenever at least the target or both
neighbors started occupied.  Works at exact-configuration level; closed-form
vacancy recursions cover the distribution level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractError
from .oscillator import ALPHA, BETA, InteractionMatrix, WellConfig, transition_detuning
from .thermo import OccupationDistribution

# Interaction shifts (in U00 units) addressed by the two conditional pulses.
REMOVE_EXCITED_SHIFT = -0.25   # (a,0)+(a,1) -> (a,0)+(b,2) upper sideband
ANCILLA_TRANSFER_SHIFT = 0.125  # (a,1)+(a,2) -> (a,1)+(b,0) double lower sideband
DISCRIMINATION_THRESHOLD = 0.125


@dataclass(frozen=True)
class ThreeWellState:
    """Ordered (left, middle, right) triple of well configurations."""

    left: WellConfig
    middle: WellConfig
    right: WellConfig

    @classmethod
    def from_occupancies(cls, n_l: int, n_m: int, n_r: int) -> "ThreeWellState":
        def well(n):
            if n not in (0, 1):
                raise ContractError("merge protocol expects post-filter binary occupancies")
            return WellConfig.of(*([(ALPHA, 0)] * n))
        return cls(well(n_l), well(n_m), well(n_r))

    def total_atoms(self) -> int:
        return len(self.left) + len(self.middle) + len(self.right)


@dataclass(frozen=True)
class MergeOutcome:
    """Final middle-well configuration plus a step-by-step trace."""

    middle_final: WellConfig
    ground_occupied: bool
    trace: tuple = ()

    def format_trace(self) -> str:
        lines = []
        for label, state in self.trace:
            lines.append(f"{label:<24s} L={_fmt(state.left)} "
                         f"M={_fmt(state.middle)} R={_fmt(state.right)}")
        lines.append(f"{'outcome':<24s} M={_fmt(self.middle_final)} "
                     f"ground_occupied={self.ground_occupied}")
        return "\n".join(lines)


def _fmt(config: WellConfig) -> str:
    if not config.atoms:
        return "[]"
    return "[" + " ".join(f"{s[0]}{nu}" for s, nu in config.atoms) + "]"


@dataclass(frozen=True)
class ErrorModel:
    """Bernoulli failure channels for the merge pipeline.

    Each conditional Raman pulse independently fails (no transfer) with
    conditional_pulse_error; each unitary merge loses the transported atom
    with merge_infidelity (externally computed transport infidelity).
    """

    conditional_pulse_error: float = 0.0
    merge_infidelity: float = 1e-4

    def __post_init__(self):
        if not (0 <= self.conditional_pulse_error < 1):
            raise ContractError("conditional_pulse_error must lie in [0, 1)")
        if not (0 <= self.merge_infidelity < 1):
            raise ContractError("merge_infidelity must lie in [0, 1)")


def filter_sweep(dist: OccupationDistribution, n_max: int = 10,
                 per_pulse_error: float = 0.0) -> OccupationDistribution:
    """Apply the descending n_max..2 filtering pulse sequence to a distribution.

    Ideally every occupation 1 <= n <= n_max collapses to one atom.  A site
    that starts with n atoms needs n-1 successful pulses; the first failed
    pulse halts its chain, leaving the site at the current occupation.
    """
    if n_max < 2:
        raise ContractError("filtering needs n_max >= 2")
    if not (0 <= per_pulse_error < 1):
        raise ContractError("per_pulse_error must lie in [0, 1)")
    return OccupationDistribution(p=filter_transfer_matrix(
        dist.n_cap, n_max, per_pulse_error) @ dist.p)


def filter_transfer_matrix(n_cap: int, n_max: int = 10,
                           per_pulse_error: float = 0.0) -> np.ndarray:
    """Column-stochastic matrix T with p_out = T @ p_in for one filter sweep."""
    e = per_pulse_error
    top = min(n_max, n_cap)
    t = np.zeros((n_cap + 1, n_cap + 1))
    t[0, 0] = 1.0
    t[1, 1] = 1.0
    for n in range(n_max + 1, n_cap + 1):
        t[n, n] = 1.0
    for n in range(2, top + 1):
        t[1, n] = (1 - e) ** (n - 1)
        for k in range(2, n + 1):
            t[k, n] = (1 - e) ** (n - k) * e
    return t


def merge_right(state: ThreeWellState, rng=None, merge_infidelity: float = 0.0) -> ThreeWellState:
    """Merge the right well into the middle one.

    The middle ground state keeps its level; each right-well ground-state atom
    arrives in the first excited level of the combined well.
    """
    if any(nu != 0 for nu in state.right.levels()):
        raise ContractError("right well must hold only ground-state atoms before merging")
    middle = state.middle
    for hyperfine, _ in state.right.atoms:
        if rng is not None and merge_infidelity > 0 and rng.random() < merge_infidelity:
            continue  # transported atom lost
        middle = middle.add(hyperfine, 1)
    return ThreeWellState(state.left, middle, WellConfig())


def conditional_remove_excited(state: ThreeWellState,
                               matrix: InteractionMatrix | None = None,
                               discrimination_threshold: float = DISCRIMINATION_THRESHOLD,
                               rng=None, pulse_error: float = 0.0) -> ThreeWellState:
    """Remove the excited atom from doubly occupied wells after the right merge.

    The upper-sideband transfer to (beta, 2) is tuned to the -0.25 U00 shift
    of the ground+excited pair, so singly occupied wells stay off-resonant.
    """
    middle = state.middle
    addressed = WellConfig.of((ALPHA, 0), (ALPHA, 1))
    if middle == addressed:
        if matrix is not None:
            shift = transition_detuning(addressed, WellConfig.of((ALPHA, 0), (BETA, 2)), matrix)
            if abs(shift) < discrimination_threshold:
                raise ContractError("removal pulse is not spectroscopically resolvable")
        if rng is None or pulse_error == 0 or rng.random() >= pulse_error:
            middle = middle.remove(ALPHA, 1)  # transferred to (beta, 2), then removed
    elif middle.count(ALPHA, 1) > 1:
        raise ContractError("more than one excited atom after merge; input was not post-filter")
    return ThreeWellState(state.left, middle, state.right)


def merge_left(state: ThreeWellState, rng=None, merge_infidelity: float = 0.0) -> ThreeWellState:
    """Merge the left well into the middle one.

    Each left-well ground-state atom arrives in the second excited level; the
    existing middle populations are untouched.
    """
    if any(nu != 0 for nu in state.left.levels()):
        raise ContractError("left well must hold only ground-state atoms before merging")
    middle = state.middle
    for hyperfine, _ in state.left.atoms:
        if rng is not None and merge_infidelity > 0 and rng.random() < merge_infidelity:
            continue
        middle = middle.add(hyperfine, 2)
    return ThreeWellState(WellConfig(), middle, state.right)


def ancilla_assisted_transfer(state: ThreeWellState,
                              matrix: InteractionMatrix | None = None,
                              rng=None, pulse_error: float = 0.0) -> ThreeWellState:
    """Rescue the second-excited atom using the first-excited atom as ancilla.

    Resonant only for the (a,1)+(a,2) pair, whose +0.125 U00 shift separates
    it from the (a,0)+(a,2) pair and from single atoms; the transferred atom
    lands in (beta, 0).
    """
    middle = state.middle
    addressed = WellConfig.of((ALPHA, 1), (ALPHA, 2))
    if middle == addressed:
        if matrix is not None:
            shift = transition_detuning(addressed, WellConfig.of((ALPHA, 1), (BETA, 0)), matrix)
            if abs(shift) < DISCRIMINATION_THRESHOLD - 1e-12:
                raise ContractError("ancilla transfer is not spectroscopically resolvable")
        if rng is None or pulse_error == 0 or rng.random() >= pulse_error:
            middle = middle.remove(ALPHA, 2).add(BETA, 0)
    return ThreeWellState(state.left, middle, state.right)


def sweep_remove_excited(state: ThreeWellState, rng=None,
                         pulse_error: float = 0.0) -> MergeOutcome:
    """Remove all remaining excited-level population and score the outcome.

    Lower-sideband transfers to (beta) leave the vibrational ground state
    untouched.  A surviving (beta, 0) atom is relabeled to (alpha, 0) by a
    final global carrier pulse, so every success ends in the same state.
    """
    middle = state.middle
    for hyperfine, nu in list(middle.atoms):
        if nu >= 1:
            if rng is not None and pulse_error > 0 and rng.random() < pulse_error:
                continue  # removal pulse failed, atom stays excited
            middle = middle.remove(hyperfine, nu)
    if middle.count(BETA, 0):
        middle = middle.remove(BETA, 0).add(ALPHA, 0)
    ground_occupied = (middle.count(ALPHA, 0) == 1 and len(middle) == 1)
    return MergeOutcome(middle_final=middle, ground_occupied=ground_occupied)


def merge_protocol(n_l: int, n_m: int, n_r: int,
                   matrix: InteractionMatrix | None = None,
                   error_model: ErrorModel | None = None,
                   rng=None) -> MergeOutcome:
    """Run the full merge pipeline on binary initial occupancies.

    Composes merge_right, conditional removal, merge_left, the ancilla
    transfer and the final excited-state sweep.  With error_model set, each
    conditional pulse and each merge transport fails independently.
    """
    if error_model is not None and rng is None:
        raise ContractError("an error model needs an rng")
    pe = error_model.conditional_pulse_error if error_model else 0.0
    em = error_model.merge_infidelity if error_model else 0.0

    state = ThreeWellState.from_occupancies(n_l, n_m, n_r)
    trace = [("initial", state)]
    state = merge_right(state, rng=rng, merge_infidelity=em)
    trace.append(("merge_right", state))
    state = conditional_remove_excited(state, matrix, rng=rng, pulse_error=pe)
    trace.append(("remove_excited", state))
    state = merge_left(state, rng=rng, merge_infidelity=em)
    trace.append(("merge_left", state))
    state = ancilla_assisted_transfer(state, matrix, rng=rng, pulse_error=pe)
    trace.append(("ancilla_transfer", state))
    outcome = sweep_remove_excited(state, rng=rng, pulse_error=pe)
    return MergeOutcome(middle_final=outcome.middle_final,
                        ground_occupied=outcome.ground_occupied,
                        trace=tuple(trace))


def vacancy_after_merge(eps: float) -> float:
    """Target-well vacancy probability after one merge step, 2 eps^2 - eps^3."""
    if not (0 <= eps <= 1):
        raise ContractError("vacancy probability must lie in [0, 1]")
    return 2.0 * eps ** 2 - eps ** 3


def vacancy_recursion(eps0: float, steps: int, mode: str = "parallel") -> list[float]:
    """Vacancy after successive merge iterations, [eps_1, ..., eps_steps].

    parallel: every group of three previously purified wells is merged;
    serial: the target is repeatedly merged with fresh unpurified neighbors.
    The first step is identical in both modes.
    """
    if steps < 1:
        raise ContractError("need at least one step")
    if mode not in ("parallel", "serial"):
        raise ContractError(f"unknown iteration mode {mode!r}")
    out = []
    eps = eps0
    for _ in range(steps):
        if mode == "parallel":
            eps = 2.0 * eps ** 2 - eps ** 3
        else:
            eps = 2.0 * eps * eps0 - eps * eps0 ** 2
        out.append(eps)
    return out


def pulse_discrimination_report(matrix: InteractionMatrix, n_max: int = 5) -> list[dict]:
    """Interaction shifts of every density-dependent pulse vs. its spectators.

    Enumerates the configurations reachable in the zero-error protocol (and
    the filtering sweep) and reports, for each pulse, the shift of the
    addressed transition and of the analogous transition in every spectator
    configuration that holds an atom in the addressed level.
    """
    report = []

    # Filtering pulses: n atoms in (a,0) -> n-1 atoms plus one in (b,2).
    for n in range(2, n_max + 1):
        initial = WellConfig.of(*([(ALPHA, 0)] * n))
        final = WellConfig.of(*([(ALPHA, 0)] * (n - 1)), (BETA, 2))
        addressed = transition_detuning(initial, final, matrix)
        spectators = []
        for m in range(1, n_max + 1):
            if m == n:
                continue
            ini = WellConfig.of(*([(ALPHA, 0)] * m))
            fin = WellConfig.of(*([(ALPHA, 0)] * (m - 1)), (BETA, 2))
            spectators.append((f"n={m}", transition_detuning(ini, fin, matrix)))
        report.append({"pulse": f"filter_n{n}", "addressed_shift": addressed,
                       "spectators": spectators})

    # Conditional removal after the right merge: addressed level is nu=1.
    addressed = transition_detuning(WellConfig.of((ALPHA, 0), (ALPHA, 1)),
                                    WellConfig.of((ALPHA, 0), (BETA, 2)), matrix)
    spectators = [("single nu=1",
                   transition_detuning(WellConfig.of((ALPHA, 1)),
                                       WellConfig.of((BETA, 2)), matrix))]
    report.append({"pulse": "remove_excited", "addressed_shift": addressed,
                   "spectators": spectators})

    # Ancilla transfer after the left merge: addressed level is nu=2.
    addressed = transition_detuning(WellConfig.of((ALPHA, 1), (ALPHA, 2)),
                                    WellConfig.of((ALPHA, 1), (BETA, 0)), matrix)
    spectators = [
        ("ground+nu=2",
         transition_detuning(WellConfig.of((ALPHA, 0), (ALPHA, 2)),
                             WellConfig.of((ALPHA, 0), (BETA, 0)), matrix)),
        ("single nu=2",
         transition_detuning(WellConfig.of((ALPHA, 2)),
                             WellConfig.of((BETA, 0)), matrix)),
    ]
    report.append({"pulse": "ancilla_transfer", "addressed_shift": addressed,
                   "spectators": spectators})
    return report
