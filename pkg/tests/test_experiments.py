"""Scenario presets, paired runs and refinement sweeps."""
import math
from dataclasses import replace

import numpy as np
import pytest

from latkepler import experiments as ex
from latkepler import lattice as lm
from latkepler.errors import BoundaryContaminationError, GridGrowthError
from latkepler.experiments import QuantumSettings, ScenarioConfig, SemiclassicalSettings
from latkepler.lattice import CoulombSource, LatticeParams


def small_paired(V1=0.0, k0=(0.0, 0.0), name="small"):
    return ScenarioConfig(
        name=name,
        lattice=LatticeParams(dims=2),
        source=CoulombSource((0.0, -40.0, 0.0), V1=V1),
        r0=(0.0, 0.0), k0=k0,
        engines=("semiclassical", "quantum"),
        semiclassical=SemiclassicalSettings(dt=1e-3, t_end=0.2, sample_every=20),
        quantum=QuantumSettings(dt=1e-3, t_end=0.2, sample_every=20, shape=(40, 40)),
    )


class TestConfig:
    @pytest.mark.parametrize("name", ex.preset_names())
    def test_presets_validate(self, name):
        cfg = ex.preset(name)
        assert cfg.name == name
        assert all(math.isfinite(v) for v in (*cfg.r0, *cfg.k0))

    def test_unknown_preset(self):
        with pytest.raises(KeyError, match="available"):
            ex.preset("fig99")

    @pytest.mark.parametrize("change", [
        {"engines": ("classical",)},
        {"r0": (math.nan, 0.0)},
        {"quantum": QuantumSettings(shape=(32, 32, 32))},
        {"semiclassical": SemiclassicalSettings(dt=-1.0)},
        {"name": ""},
    ])
    def test_invalid(self, change):
        with pytest.raises(ValueError):
            replace(small_paired(), **change)

    def test_quantum_softening_defaults_to_half_spacing(self):
        cfg = replace(small_paired(V1=1.0), lattice=LatticeParams(a=0.5, b=0.25, dims=2))
        assert cfg.quantum_source().epsilon == 0.125
        explicit = replace(cfg, quantum=replace(cfg.quantum, epsilon=0.3))
        assert explicit.quantum_source().epsilon == 0.3

    def test_fig2_lattice_is_strongly_rectangular(self):
        lat = ex.preset("fig2-lattice").lattice
        assert 19 < lat.a / lat.b < 21
        xi = lat.B * lat.b**2 / (lat.A * lat.a**2)
        assert xi == pytest.approx(2.94, abs=1e-9)

    def test_metadata_records_defaults(self):
        bundle = ex.run_scenario(small_paired())
        meta = bundle.metadata
        assert meta["sigma"] == 4.0
        assert meta["quantum"]["shape"] == [40, 40]
        assert meta["quantum"]["dt"] == 1e-3
        assert meta["lattice"]["A"] == 1.0
        assert meta["quantum"]["epsilon"] == 0.5


class TestRuns:
    def test_fig3_lattice_precesses(self):
        bundle = ex.run_scenario(ex.preset("fig3-lattice"))
        assert bundle.summary["n_perihelia"] >= 5
        assert abs(bundle.summary["precession_per_orbit"]) > 0.05

    def test_fig3_continuum_closes(self):
        bundle = ex.run_scenario(ex.preset("fig3-continuum"))
        assert bundle.summary["apsidal_angle"] == pytest.approx(math.pi, abs=1e-3)

    def test_fig5_quasibloch(self):
        bundle = ex.run_scenario(ex.preset("fig5-quasibloch"))
        zy = bundle.log.z[:, 1]
        extrema = np.sum(np.diff(np.sign(np.diff(zy))) != 0)
        assert extrema >= 3
        assert np.max(np.abs(bundle.log.z[:, 0])) < 0.05 * np.max(np.abs(zy))

    def test_trivial_paired_run_is_zero(self):
        bundle = ex.paired_run(small_paired())
        ang = bundle.angular
        assert np.all(ang.L_q == 0) and np.all(ang.L_c == 0) and np.all(ang.S == 0)
        assert math.isnan(ang.alpha)

    def test_paired_series_share_time_base(self):
        bundle = ex.paired_run(small_paired(V1=500.0, k0=(-1.0, 0.0)))
        np.testing.assert_array_equal(bundle.trajectory.t, bundle.log.t)
        assert len(bundle.angular.t) == len(bundle) == 11
        assert math.isfinite(bundle.angular.alpha)

    def test_paired_run_adds_missing_engine(self):
        cfg = replace(small_paired(), engines=("quantum",))
        assert ex.paired_run(cfg).trajectory is not None

    def test_mismatched_time_bases(self):
        cfg = small_paired()
        cfg = replace(cfg, quantum=replace(cfg.quantum, sample_every=10))
        with pytest.raises(ValueError, match="sample times"):
            ex.run_scenario(cfg)

    def test_errors_carry_scenario_name(self):
        cfg = small_paired(k0=(1.5, 0.0), name="leaky")
        cfg = replace(cfg, engines=("quantum",), quantum=replace(cfg.quantum, t_end=20.0))
        with pytest.raises(BoundaryContaminationError, match="leaky"):
            ex.run_scenario(cfg)

    def test_deterministic_summary(self):
        cfg = small_paired(V1=500.0, k0=(-1.0, 0.0))
        np.testing.assert_equal(ex.run_scenario(cfg).summary, ex.run_scenario(cfg).summary)

    def test_convergence_check(self):
        out = ex.convergence_check(small_paired(V1=500.0, k0=(-1.0, 0.0)), window=0.05)
        assert out["semiclassical_dr"] < 1e-10
        assert out["quantum_dz"] < 1e-6


class TestSweep:
    def test_scale_config_keeps_energy_and_extent(self):
        base = ex.preset("fig8-continuum")
        fine = ex.scale_config(base, 0.25)
        assert fine.quantum.shape[0] * fine.lattice.a == base.quantum.shape[0] * base.lattice.a
        e0 = lm.kinetic_energy(base.k0, base.lattice)
        assert lm.kinetic_energy(fine.k0, fine.lattice) == pytest.approx(e0, rel=1e-12)
        assert fine.quantum_source().epsilon == pytest.approx(0.5 * fine.lattice.a)

    @pytest.mark.parametrize("scales", [[1.0, 1.0], [0.5, 1.0], [], [1.0, -0.5]])
    def test_rejects_bad_scales(self, scales):
        with pytest.raises(ValueError):
            ex.continuum_sweep(ex.preset("fig3-lattice"), scales)

    def test_grid_ceiling(self):
        with pytest.raises(GridGrowthError):
            ex.continuum_sweep(ex.preset("fig7"), [1.0, 0.25])

    def test_single_scale_equals_run(self):
        cfg = replace(ex.preset("fig3-lattice"),
                      semiclassical=SemiclassicalSettings(t_end=200.0))
        (row,) = ex.continuum_sweep(cfg, [1.0])
        summary = ex.run_scenario(cfg).summary
        np.testing.assert_equal({k: row[k] for k in summary}, summary)

    def test_semiclassical_precession_vanishes(self):
        cfg = replace(ex.preset("fig3-lattice"),
                      semiclassical=SemiclassicalSettings(t_end=200.0))
        rows = ex.continuum_sweep(cfg, [1.0, 0.5, 0.25, 0.125])
        prec = [abs(r["precession_per_orbit"]) for r in rows]
        assert all(b < a for a, b in zip(prec, prec[1:]))
        assert prec[-1] < 0.02 * prec[0]


@pytest.fixture(scope="module")
def fig3():
    cfg = replace(ex.preset("fig3-lattice"), semiclassical=SemiclassicalSettings(t_end=300.0))
    return ex.run_scenario(cfg)


class TestPrecessionDetails:
    def test_stable_under_step_halving(self, fig3):
        cfg = fig3.config
        half = replace(cfg, semiclassical=replace(cfg.semiclassical, dt=5e-5, sample_every=200))
        prec = fig3.summary["precession_per_orbit"]
        assert ex.run_scenario(half).summary["precession_per_orbit"] == pytest.approx(prec, rel=0.02)

    def test_rate_peaks_during_perihelion_passage(self, fig3):
        # On the square lattice dLz/dt ~ |k|**4 sin(4 theta): it peaks close to the
        # perihelion but vanishes wherever k is aligned with a lattice axis, so the
        # peak is not pinned to the perihelion sample itself.
        traj = fig3.trajectory
        peri = [e for e in fig3.apsides if e.kind == "perihelion"]
        period = float(np.mean(np.diff([e.t for e in peri])))
        for ev in peri:
            idx = np.flatnonzero(np.abs(traj.t - ev.t) <= 0.5 * period)
            peak = idx[np.argmax(np.abs(traj.lz_rate[idx]))]
            assert abs(traj.t[peak] - ev.t) <= 0.01 * period
