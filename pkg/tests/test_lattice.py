"""2D lattice engine: analytic propagation, Monte Carlo, profiles, skimming."""

import math

import numpy as np
import pytest

from mottprep import (
    ContractError,
    Filter,
    LatticeField,
    Merge,
    Schedule,
    Skim,
    ThermalParams,
    TrapParams,
    build_thermal_lattice,
    infidelity_curve,
    monte_carlo_run,
    monte_carlo_triples,
    occupation_distribution,
    propagate_filter,
    propagate_merge,
    radial_profile,
    run_schedule,
    skim,
    vacancy_recursion,
)
from mottprep.lattice import (
    apply_error_floor,
    entropy_peak_radius_um,
    plateau_radius_um,
    suggested_grid_radius,
)

TRAP = TrapParams()


@pytest.fixture(scope="module")
def thermal_field():
    return build_thermal_lattice(ThermalParams(mu_U=0.5, T_U=0.2), TRAP)


def homogeneous_field(eps, radius=6):
    xs, ys = np.meshgrid(np.arange(-radius, radius + 1),
                         np.arange(-radius, radius + 1), indexing="ij")
    inside = xs ** 2 + ys ** 2 <= radius * radius
    coords = np.stack([xs[inside], ys[inside]], axis=1)
    probs = np.zeros((coords.shape[0], 3))
    probs[:, 0] = eps
    probs[:, 1] = 1 - eps
    return LatticeField(coords=coords, probs=probs, spacing_um=0.5,
                        grid_radius_sites=radius)


class TestBuildThermalLattice:
    def test_center_matches_homogeneous(self, thermal_field):
        center = np.argmin(thermal_field.radii_um)
        expected = occupation_distribution(ThermalParams(mu_U=0.5, T_U=0.2))
        assert np.allclose(thermal_field.probs[center], expected.p, atol=1e-12)

    def test_rotational_symmetry(self, thermal_field):
        r2 = thermal_field.coords[:, 0] ** 2 + thermal_field.coords[:, 1] ** 2
        for val in np.unique(r2)[:20]:
            rows = thermal_field.probs[r2 == val]
            assert np.allclose(rows, rows[0], atol=1e-14)

    def test_symmetry_point_has_equal_vacancy_double(self):
        # site radius where mu_loc = 0.5 exactly would have p0 = p2; check the
        # nearest analytic evaluation instead of relying on a lattice site
        field = build_thermal_lattice(ThermalParams(mu_U=1.0, T_U=0.2), TRAP)
        mu_loc = 0.5
        d = occupation_distribution(ThermalParams(mu_U=mu_loc, T_U=0.2))
        assert d.p[0] == pytest.approx(d.p[2], rel=1e-12)
        assert field.probs.shape[0] > 0

    def test_total_atoms_regression(self):
        # paper-motivated parameters, high filling; pinned once
        field = build_thermal_lattice(ThermalParams(mu_U=2.0, T_U=0.2), TRAP)
        assert field.total_atoms() == pytest.approx(1431.9801416053256, rel=1e-9)

    def test_small_grid_rejected_with_suggestion(self):
        with pytest.raises(ContractError, match="at least"):
            build_thermal_lattice(ThermalParams(mu_U=0.5, T_U=0.2), TRAP,
                                  grid_radius_sites=3)

    def test_auto_radius_covers_cloud(self):
        thermal = ThermalParams(mu_U=0.5, T_U=0.2)
        assert suggested_grid_radius(thermal, TRAP) >= 14


class TestPropagateFilter:
    def test_vacant_field_unchanged(self):
        field = homogeneous_field(1.0)
        out = propagate_filter(field)
        assert np.allclose(out.probs, field.probs)

    def test_doubly_occupied_collapses(self):
        field = homogeneous_field(0.0)
        probs = np.zeros_like(field.probs)
        probs[:, 2] = 1.0
        field = LatticeField(coords=field.coords, probs=probs, spacing_um=0.5,
                             grid_radius_sites=field.grid_radius_sites)
        out = propagate_filter(field)
        assert np.allclose(out.p1, 1.0)

    def test_thermal_defect_drops_to_vacancy(self, thermal_field):
        out = propagate_filter(thermal_field)
        center = np.argmin(out.radii_um)
        assert 1 - out.p1[center] == pytest.approx(thermal_field.vacancy[center], rel=1e-9)

    def test_never_increases_atoms(self, thermal_field):
        out = propagate_filter(thermal_field)
        assert out.total_atoms() <= thermal_field.total_atoms()


class TestPropagateMerge:
    def test_homogeneous_parallel_step(self):
        out = propagate_merge(homogeneous_field(0.1))
        interior = out.radii_um < (out.grid_radius_sites - 1) * out.spacing_um
        assert np.allclose(out.vacancy[interior], 0.019, atol=1e-12)

    def test_occupied_neighbors_fill_vacant_target(self):
        field = homogeneous_field(0.0)
        center = int(np.flatnonzero((field.coords == 0).all(axis=1))[0])
        probs = field.probs.copy()
        probs[center] = [1.0, 0.0, 0.0]
        field = LatticeField(coords=field.coords, probs=probs, spacing_um=0.5,
                             grid_radius_sites=field.grid_radius_sites)
        out = propagate_merge(field, axis="x")
        assert out.p1[center] == pytest.approx(1.0)

    def test_vacant_neighbors_leave_target(self):
        field = homogeneous_field(1.0)
        center = int(np.flatnonzero((field.coords == 0).all(axis=1))[0])
        probs = field.probs.copy()
        probs[center] = [0.0, 1.0, 0.0]
        field = LatticeField(coords=field.coords, probs=probs, spacing_um=0.5,
                             grid_radius_sites=field.grid_radius_sites)
        out = propagate_merge(field, axis="y")
        assert out.p1[center] == pytest.approx(1.0)

    def test_serial_mode_uses_baseline(self):
        field = homogeneous_field(0.1)
        step1 = propagate_merge(field, mode="serial", baseline=field)
        step2 = propagate_merge(step1, mode="serial", baseline=field)
        interior = step2.radii_um < (field.grid_radius_sites - 1) * field.spacing_um
        expected = vacancy_recursion(0.1, 2, "serial")[-1]
        assert np.allclose(step2.vacancy[interior], expected, atol=1e-12)

    def test_unfiltered_field_rejected(self, thermal_field):
        with pytest.raises(ContractError, match="filtered"):
            propagate_merge(thermal_field)


class TestSkimAndFloor:
    def test_skim_boundary_closed(self):
        field = homogeneous_field(0.1)
        out = skim(field, 1.0)  # two lattice spacings
        kept = out.radii_um <= 1.0
        assert np.allclose(out.p1[kept], 0.9)
        assert np.allclose(out.p1[~kept], 0.0)

    def test_skim_zero_keeps_center_only(self):
        out = skim(homogeneous_field(0.1), 0.0)
        assert np.count_nonzero(out.p1) == 1

    def test_skim_infinite_is_identity(self):
        field = homogeneous_field(0.1)
        out = skim(field, math.inf)
        assert np.allclose(out.probs, field.probs)

    def test_skim_idempotent(self):
        field = homogeneous_field(0.1)
        once = skim(field, 2.0)
        twice = skim(once, 2.0)
        assert np.allclose(once.probs, twice.probs)

    def test_skim_never_increases_atoms(self):
        field = homogeneous_field(0.1)
        assert skim(field, 1.5).total_atoms() <= field.total_atoms()

    def test_error_floor_clamps_vacancy(self):
        field = homogeneous_field(1e-7)
        out = apply_error_floor(field, 1e-4)
        assert np.all(out.vacancy >= 1e-4 - 1e-15)
        assert np.allclose(out.probs.sum(axis=1), 1.0)


class TestSchedule:
    def test_skim_must_be_final(self):
        with pytest.raises(ContractError):
            Schedule(steps=(Skim(2.0), Filter()))
        Schedule(steps=(Filter(), Merge(), Skim(2.0)))

    def test_two_skims_rejected(self):
        with pytest.raises(ContractError):
            Schedule(steps=(Skim(2.0), Skim(3.0)))

    def test_stage_labels(self, thermal_field):
        stages = run_schedule(thermal_field, Schedule(steps=(
            Filter(), Merge("x"), Merge("y"), Skim(5.0))))
        assert [label for label, _ in stages] == [
            "initial", "filtered", "merge1", "merge2", "skimmed"]

    def test_floor_applied_after_merges(self, thermal_field):
        stages = dict(run_schedule(thermal_field, Schedule(
            steps=(Filter(), Merge("x"), Merge("y")), eps_f=1e-4)))
        assert np.all(stages["merge2"].vacancy >= 1e-4 - 1e-15)


class TestProfilesAndCurves:
    def test_cold_step_profile(self):
        field = build_thermal_lattice(ThermalParams(mu_U=0.5, T_U=0.01), TRAP)
        prof = radial_profile(field, "P1")
        inner = prof[prof[:, 0] < 3.0, 1]
        outer = prof[prof[:, 0] > 6.0, 1]
        assert np.all(inner > 0.999)
        assert np.all(outer < 1e-3)

    def test_center_profile_matches_homogeneous(self, thermal_field):
        prof = radial_profile(thermal_field, "P1")
        d = occupation_distribution(ThermalParams(mu_U=0.5, T_U=0.2))
        assert prof[0, 1] == pytest.approx(float(d.p[1]), rel=1e-6)

    def test_entropy_peak_location_and_value(self):
        r_peak, peak = entropy_peak_radius_um(0.5, 0.2, TRAP)
        assert peak == pytest.approx(math.log(2), abs=1e-9)
        assert 3.0 < r_peak < 6.0

    def test_infidelity_curve_values(self):
        field = homogeneous_field(1e-4)
        curve = infidelity_curve(field)
        row = curve[np.argmin(np.abs(curve[:, 1] - 100))]
        assert row[2] == pytest.approx(row[1] * 1e-4, rel=0.02)

    def test_empty_disc(self):
        field = homogeneous_field(0.5)
        curve = infidelity_curve(field, r_cuts=[-1.0])
        assert curve[0, 1] == 0 and curve[0, 2] == 0.0

    def test_plateau_radius(self):
        field = homogeneous_field(1e-5)
        assert plateau_radius_um(field) == pytest.approx(field.radii_um.max())
        assert plateau_radius_um(homogeneous_field(0.5)) == 0.0


class TestMonteCarlo:
    def test_single_step_matches_closed_form(self):
        for eps in (0.05, 0.1, 0.2):
            res = monte_carlo_triples(eps, 100_000, seed=11)
            assert abs(res.empirical_vacancy - res.analytic_vacancy) <= 3 * res.stderr

    def test_two_step_parallel_matches_recursion(self):
        res = monte_carlo_triples(0.1, 1_000_000, seed=12, iterations=2)
        assert abs(res.empirical_vacancy - res.analytic_vacancy) <= 3 * res.stderr

    def test_two_step_serial_matches_recursion(self):
        res = monte_carlo_triples(0.1, 100_000, seed=13, iterations=2, mode="serial")
        assert abs(res.empirical_vacancy - res.analytic_vacancy) <= 3 * res.stderr

    def test_seed_determinism(self):
        a = monte_carlo_triples(0.1, 50_000, seed=5)
        b = monte_carlo_triples(0.1, 50_000, seed=5)
        assert a == b

    def test_error_model_worsens_vacancy(self):
        from mottprep import ErrorModel
        ideal = monte_carlo_triples(0.1, 20_000, seed=6)
        noisy = monte_carlo_triples(0.1, 20_000, seed=6,
                                    error_model=ErrorModel(conditional_pulse_error=0.2))
        assert noisy.empirical_vacancy > ideal.empirical_vacancy

    def test_lattice_run_matches_analytic(self, thermal_field):
        schedule = Schedule(steps=(Filter(), Merge("x")))
        stages = dict(run_schedule(thermal_field, schedule))
        p1, stderr = monte_carlo_run(thermal_field, schedule, seed=21,
                                     n_realizations=400)
        expected = stages["merge1"].p1
        within = np.abs(p1 - expected) <= 3 * np.maximum(stderr, 1e-3)
        assert within.mean() > 0.98  # 3 sigma bands; a few percent may fall outside

    def test_lattice_run_deterministic(self, thermal_field):
        schedule = Schedule(steps=(Filter(),))
        a = monte_carlo_run(thermal_field, schedule, seed=3, n_realizations=50)
        b = monte_carlo_run(thermal_field, schedule, seed=3, n_realizations=50)
        assert np.array_equal(a[0], b[0])


class TestSnapshot:
    def test_snapshot_round_trips_values(self):
        field = homogeneous_field(0.25, radius=2)
        text = field.snapshot()
        lines = text.splitlines()
        assert lines[0].startswith("# x y p0")
        assert len(lines) == 1 + field.coords.shape[0]
        assert "2.500000000000e-01" in lines[1]

    def test_snapshot_stable(self):
        field = homogeneous_field(0.25, radius=2)
        assert field.snapshot() == field.snapshot()
