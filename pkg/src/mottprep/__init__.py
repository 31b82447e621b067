"""Optical-lattice entropy removal: number filtering and vacancy merging.

Library for simulating occupation-dependent Raman filtering of a thermal
Mott insulator and the three-well merging protocol that fills remaining
vacancies, including realistic pulse-error models and a 2D trapped-lattice
engine with analytic and Monte Carlo propagation.
"""

from .exceptions import CapabilityError, ConfigError, ContractError, NumericError
from .oscillator import (
    ALPHA,
    BETA,
    InteractionMatrix,
    WellConfig,
    config_energy,
    relative_interaction,
    transition_detuning,
    wavefunction_density,
)
from .thermo import (
    OccupationDistribution,
    ThermalParams,
    TrapParams,
    defect_probability,
    local_chemical_potential,
    occupation_distribution,
    overlap_infidelity,
    site_entropy,
)
from .protocol import (
    ErrorModel,
    MergeOutcome,
    ThreeWellState,
    filter_sweep,
    merge_protocol,
    vacancy_after_merge,
    vacancy_recursion,
)
from .pulses import (
    LossModel,
    PulseOptimum,
    PulseSpec,
    excited_population,
    fit_loss_weight,
    optimize_pulse,
    spectator_error,
)
from .lattice import (
    Filter,
    LatticeField,
    Merge,
    Schedule,
    Skim,
    build_thermal_lattice,
    infidelity_curve,
    monte_carlo_run,
    monte_carlo_triples,
    propagate_filter,
    propagate_merge,
    radial_profile,
    run_schedule,
    skim,
)

__version__ = "0.1.0"
