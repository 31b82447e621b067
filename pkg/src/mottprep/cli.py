"""Batch experiment runner with reproducible CSV output.

Experiments reproduce the headline quantitative results as machine-readable
tables: defect vs. temperature, radial filling and entropy profiles,
infidelity vs. system size, the eight-row merge truth table, Monte Carlo
validation of the closed-form recursions, and the pulse-duration scan.
Identical (config, seed) pairs produce byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import ConfigError, ContractError
from .lattice import (Filter, LatticeField, Merge, Schedule, build_thermal_lattice,
                      infidelity_curve, monte_carlo_triples, radial_profile,
                      run_schedule, suggested_grid_radius)
from .protocol import filter_sweep, merge_protocol, vacancy_recursion
from .pulses import LossModel, fit_loss_weight, optimize_pulse, pulse_error_scan
from .thermo import ThermalParams, TrapParams, defect_probability, occupation_distribution

OUT_DIR_ENV = "MOTTPREP_OUT"

EXPERIMENTS = ("fig4", "fig5", "fig6", "fig7", "table1", "mc_validate", "pulse_opt")


@dataclass(frozen=True)
class RunConfig:
    """All tunable quantities of one experiment run.

    Units follow the library conventions: energies as frequencies in Hz,
    lengths in micrometers, temperatures and chemical potentials in units of
    the on-site interaction.
    """

    experiment: str = "fig4"
    seed: int = 12345
    out_dir: str = "."
    # thermal
    mu_U: float = 0.5
    T_U: float = 0.2
    n_cap: int = 10
    # trap
    omega_trap_hz: float = 80.0
    u_int_hz: float = 1000.0
    mass_u: float = 87.0
    spacing_um: float = 0.5
    # schedule / errors
    n_max: int = 10
    per_pulse_error: float = 0.0
    merge_infidelity: float = 0.0
    eps_f: float = 1e-4
    iterations: int = 2
    mode: str = "parallel"
    radial_range_um: float = 15.0
    mc_samples: int = 1_000_000
    # pulse optimization
    tau_s: float = 1.0
    detuning_u00: float = 0.125
    w_loss: float = 0.1
    t_min_s: float = 1e-5
    t_max_s: float = 0.1
    n_grid: int = 2000
    # fig4 grid
    t_u_min: float = 0.02
    t_u_max: float = 0.5
    t_u_points: int = 50


_SECTIONS = {
    "run": ("experiment", "seed", "out_dir"),
    "thermal": ("mu_U", "T_U", "n_cap"),
    "trap": ("omega_trap_hz", "u_int_hz", "mass_u", "spacing_um"),
    "schedule": ("n_max", "per_pulse_error", "merge_infidelity", "eps_f",
                 "iterations", "mode", "radial_range_um", "mc_samples"),
    "pulse": ("tau_s", "detuning_u00", "w_loss", "t_min_s", "t_max_s", "n_grid"),
    "fig4": ("t_u_min", "t_u_max", "t_u_points"),
}

_TYPES = {f.name: f.type for f in fields(RunConfig)}


def parse_config(path: str | Path) -> RunConfig:
    """Parse a flat key = value file with [section] headers.

    Unknown sections or keys are rejected with a line-numbered diagnostic.
    """
    values = {}
    section = None
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"{path}:{lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, _, value = (part.strip() for part in line.partition("="))
        if section is None:
            raise ConfigError(f"{path}:{lineno}: key {key!r} outside any [section]")
        if key not in _SECTIONS[section]:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r} in section [{section}]")
        try:
            values[key] = _coerce(key, value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    return RunConfig(**values)


def _coerce(key: str, value: str):
    kind = _TYPES[key]
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    return value


def config_hash(config: RunConfig) -> str:
    # out_dir is where results land, not what they contain; keep it out of
    # the hash so identical runs hash identically wherever they are written.
    canon = "\n".join(f"{f.name}={getattr(config, f.name)!r}"
                      for f in sorted(fields(config), key=lambda f: f.name)
                      if f.name != "out_dir")
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _write_csv(path: Path, config: RunConfig, meta: dict, columns, rows) -> None:
    def fmt(v):
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return f"{float(v):.11e}"

    lines = [
        f"# generator = mottprep {__version__}",
        f"# experiment = {config.experiment}",
        f"# config_hash = {config_hash(config)}",
        f"# seed = {config.seed}",
        "# format_version = 1",
        "# entropy_log_base = e",
    ]
    for f in sorted(fields(config), key=lambda f: f.name):
        if f.name != "out_dir":
            lines.append(f"# config.{f.name} = {getattr(config, f.name)}")
    for key in sorted(meta):
        lines.append(f"# {key} = {meta[key]}")
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _trap(config: RunConfig) -> TrapParams:
    from scipy.constants import atomic_mass
    return TrapParams(omega_trap_hz=config.omega_trap_hz, u_int_hz=config.u_int_hz,
                      mass_kg=config.mass_u * atomic_mass, spacing_um=config.spacing_um)


def _merge_axes(iterations: int):
    return tuple(Merge(axis="x" if i % 2 == 0 else "y") for i in range(iterations))


def run_fig4(config: RunConfig, out: Path) -> None:
    """Defect probability vs. dimensionless temperature, ideal pipeline."""
    grid = np.logspace(math.log10(config.t_u_min), math.log10(config.t_u_max),
                       config.t_u_points)
    rows = []
    for t_u in grid:
        dist = occupation_distribution(ThermalParams(mu_U=config.mu_U, T_U=float(t_u)))
        filtered = filter_sweep(dist, n_max=config.n_max)
        eps = float(filtered.p[0])
        iters = vacancy_recursion(eps, 2, "parallel")
        rows.append((t_u, defect_probability(dist), defect_probability(filtered),
                     iters[0], iters[1]))
    _write_csv(out / "fig4.csv", config, {"mu_U": config.mu_U},
               ["T_U", "defect_initial", "defect_filtered", "defect_iter1",
                "defect_iter2"], rows)


def _lattice_stages(config: RunConfig, mu_U: float, iterations: int,
                    eps_f: float, grid_radius: int | None = None):
    thermal = ThermalParams(mu_U=mu_U, T_U=config.T_U, n_cap=config.n_cap)
    field = build_thermal_lattice(thermal, _trap(config), grid_radius)
    schedule = Schedule(steps=(Filter(config.n_max),) + _merge_axes(iterations),
                        per_pulse_error=config.per_pulse_error,
                        merge_infidelity=config.merge_infidelity, eps_f=eps_f)
    return run_schedule(field, schedule)


def _profile_table(config: RunConfig, quantity: str):
    stages = _lattice_stages(config, config.mu_U, iterations=2, eps_f=0.0)
    labels = [label for label, _ in stages]
    profiles = [radial_profile(f, quantity) for _, f in stages]
    r = profiles[0][:, 0]
    keep = r <= config.radial_range_um
    rows = np.column_stack([r] + [p[:, 1] for p in profiles])[keep]
    return labels, rows


def run_fig5(config: RunConfig, out: Path) -> None:
    """Unit-filling probability vs. radius through the pipeline stages."""
    labels, rows = _profile_table(config, "P1")
    _write_csv(out / "fig5.csv", config, {},
               ["r_um"] + [f"P1_{label}" for label in labels], rows)


def run_fig6(config: RunConfig, out: Path) -> None:
    """Binary on-site entropy vs. radius through the pipeline stages."""
    labels, rows = _profile_table(config, "entropy")
    _write_csv(out / "fig6.csv", config, {},
               ["r_um"] + [f"entropy_{label}" for label in labels], rows)


def run_fig7(config: RunConfig, out: Path) -> None:
    """Infidelity of the skimmed state vs. disc site count.

    Low-filling curves (mu_U from config) show successive merge iterations
    with the error floor; the high-filling mu_U = 2 curves show the intrinsic
    power of filtering alone and of three further iterations.
    """
    mu_high = 2.0
    trap = _trap(config)
    radius = max(
        suggested_grid_radius(ThermalParams(mu_U=config.mu_U, T_U=config.T_U), trap),
        suggested_grid_radius(ThermalParams(mu_U=mu_high, T_U=config.T_U), trap))
    low = _lattice_stages(config, config.mu_U, 3, config.eps_f, radius)
    high = _lattice_stages(config, mu_high, 3, config.eps_f, radius)
    stages = {f"mu{config.mu_U:g}_{label}": f for label, f in low}
    stages.update({f"mu{mu_high:g}_{label}": f for label, f in high})
    series = [name for name in stages if not name.endswith("_initial")]
    r_cuts = None
    curves = {}
    for name in series:
        table = infidelity_curve(stages[name])
        curves[name] = table
        r_cuts = table[:, :2]
    rows = np.column_stack([r_cuts] + [curves[name][:, 2] for name in series])
    _write_csv(out / "fig7.csv", config, {"mu_high": mu_high, "eps_f": config.eps_f},
               ["r_cut_um", "N_sites"] + [f"infid_{name}" for name in series], rows)


def run_table1(config: RunConfig, out: Path) -> None:
    """Exhaustive merge-protocol truth table over binary occupancies."""
    rows = []
    for n_l in (0, 1):
        for n_m in (0, 1):
            for n_r in (0, 1):
                outcome = merge_protocol(n_l, n_m, n_r)
                rows.append((n_l, n_m, n_r, int(outcome.ground_occupied)))
    _write_csv(out / "table1.csv", config, {},
               ["n_l", "n_m", "n_r", "n_m_final"], rows)


def run_mc_validate(config: RunConfig, out: Path) -> None:
    """Monte Carlo vs. closed-form vacancy recursion."""
    rows = []
    cases = [(eps0, its, mode)
             for eps0 in (0.05, 0.1, 0.2)
             for its, mode in ((1, "parallel"), (2, "parallel"), (2, "serial"))]
    for i, (eps0, its, mode) in enumerate(cases):
        res = monte_carlo_triples(eps0, config.mc_samples, seed=config.seed + i,
                                  iterations=its, mode=mode)
        rows.append((eps0, its, 0 if mode == "parallel" else 1,
                     res.analytic_vacancy, res.empirical_vacancy, res.stderr,
                     res.n_samples))
    _write_csv(out / "mc_validate.csv", config, {"mode_codes": "0=parallel 1=serial"},
               ["eps0", "iterations", "mode", "analytic", "empirical", "stderr",
                "n_samples"], rows)


def run_pulse_opt(config: RunConfig, out: Path) -> None:
    """Pulse-duration error scan and optima for 1 kHz and 20 kHz scales."""
    meta = {}
    rows = []
    for u00_hz in (1000.0, 20000.0):
        loss = LossModel(tau_s=config.tau_s, u00_hz=u00_hz)
        t, spec, lossy, total = pulse_error_scan(
            loss, config.detuning_u00, config.w_loss, config.t_min_s,
            config.t_max_s, config.n_grid)
        for row in zip([u00_hz] * t.size, t, spec, lossy, total):
            rows.append(row)
        opt = optimize_pulse(loss, config.detuning_u00, config.w_loss,
                             config.t_min_s, config.t_max_s, config.n_grid)
        tag = f"u00_{u00_hz:g}"
        meta[f"{tag}.t_opt_s"] = f"{opt.t_s:.11e}"
        meta[f"{tag}.eps_opt"] = f"{opt.eps_total:.11e}"
        meta[f"{tag}.commensurate_t_s"] = f"{opt.commensurate_t_s:.11e}"
        meta[f"{tag}.commensurate_eps"] = f"{opt.commensurate_eps_total:.11e}"
    fit = fit_loss_weight(detuning_u00=config.detuning_u00, tau_s=config.tau_s)
    meta["best_fit_w_loss"] = f"{fit['w_loss']:.11e}"
    meta["best_fit_score"] = f"{fit['score']:.11e}"
    _write_csv(out / "pulse_opt.csv", config, meta,
               ["u00_hz", "t_s", "eps_spectator", "eps_loss", "eps_total"], rows)


_RUNNERS = {
    "fig4": run_fig4,
    "fig5": run_fig5,
    "fig6": run_fig6,
    "fig7": run_fig7,
    "table1": run_table1,
    "mc_validate": run_mc_validate,
    "pulse_opt": run_pulse_opt,
}


def run_experiment(config: RunConfig) -> Path:
    """Run one named experiment; returns the output directory."""
    if config.experiment not in _RUNNERS:
        raise ConfigError(f"unknown experiment {config.experiment!r}; "
                          f"choose from {', '.join(EXPERIMENTS)}")
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _RUNNERS[config.experiment](config, out)
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mottprep",
        description="Run lattice purification experiments and write CSV tables.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, help="override the run seed")
    parser.add_argument("--out", help="output directory "
                        f"(default: ${OUT_DIR_ENV} or current directory)")
    args = parser.parse_args(argv)

    try:
        config = parse_config(args.config) if args.config else RunConfig()
        config = replace(config, experiment=args.experiment)
        if args.seed is not None:
            config = replace(config, seed=args.seed)
        out_dir = args.out or os.environ.get(OUT_DIR_ENV) or config.out_dir
        config = replace(config, out_dir=out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        out = run_experiment(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ContractError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {config.experiment} output to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
