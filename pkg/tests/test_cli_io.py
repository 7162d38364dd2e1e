"""Configuration text, output writers and the command-line interface."""
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latkepler import experiments as ex
from latkepler import observables as obs
from latkepler import output
from latkepler import quantum as qm
from latkepler.cli import main
from latkepler.config import format_config, parse_config
from latkepler.errors import ConfigError
from latkepler.experiments import QuantumSettings, SemiclassicalSettings
from latkepler.lattice import CoulombSource, LatticeParams

SHORT_FIG7 = """\
[scenario]
preset = fig7   # paired run

[semiclassical]
t_end = 0.01

[quantum]
sigma = 6.0
shape = 96, 96
t_end = 0.01
"""


class TestParse:
    def test_preset_only(self):
        assert parse_config("[scenario]\npreset = fig3-lattice\n") == ex.preset("fig3-lattice")

    def test_unknown_key_names_key_and_line(self):
        text = "[scenario]\npreset = fig7\n\n[quantum]\nsigmaa = 6.0\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.line == 5 and info.value.key == "sigmaa"
        assert "line 5" in str(info.value) and "sigmaa" in str(info.value)

    def test_override_reaches_metadata(self):
        cfg = parse_config(SHORT_FIG7)
        assert cfg.quantum.sigma == 6.0
        bundle = ex.run_scenario(cfg)
        assert bundle.metadata["sigma"] == 6.0

    @pytest.mark.parametrize("text, line", [
        ("[scenario]\npreset = fig7\n[lattice]\na = -1\n", 4),
        ("[scenario]\npreset = fig7\n[lattice]\na 1\n", 4),
        ("[scenario]\npreset = fig7\n[lattices]\n", 3),
        ("[scenario]\npreset = fig7\npreset = fig3-lattice\n", 3),
        ("a = 1\n", 1),
        ("[scenario]\npreset = nope\n", 2),
        ("[scenario]\npreset = fig7\n[quantum]\nsample_every = 2.5\n", 4),
        ("[scenario]\npreset = fig7\n[quantum]\nshape = 64, 64, 64\n", 4),
        ("[scenario]\npreset = fig7\n[semiclassical]\ndt = inf\n", 4),
        ("[scenario]\npreset = fig7\n[source]\ngradient = 1, 0\n", 4),
        ("[scenario]\npreset = fig7\n[scenario\n", 3),
        ("[scenario]\nengines = quantum, classical\n", 2),
    ])
    def test_errors_are_line_numbered(self, text, line):
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.line == line

    def test_missing_sections_without_preset(self):
        with pytest.raises(ConfigError, match="lattice"):
            parse_config("[scenario]\nname = x\n")

    def test_full_file_without_preset(self):
        text = """
        [scenario]
        name = custom
        engines = semiclassical
        [lattice]
        A = 2
        dims = 2
        [source]
        kind = uniform
        gradient = 0, 1.5
        [initial]
        r = 1, 2
        k = 0, 0
        """
        cfg = parse_config("\n".join(line.strip() for line in text.splitlines()))
        assert cfg.lattice.A == 2.0 and cfg.source.gradient == (0.0, 1.5, 0.0)
        assert cfg.r0 == (1.0, 2.0, 0.0)


class TestFormat:
    @pytest.mark.parametrize("name", ex.preset_names())
    def test_round_trip_presets(self, name):
        cfg = ex.preset(name)
        assert parse_config(format_config(cfg)) == cfg

    @given(
        st.floats(0.01, 10), st.floats(0, 1e3), st.floats(-1e6, 1e6),
        st.tuples(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
        st.floats(1e-6, 1e-2), st.one_of(st.none(), st.floats(0, 2)),
    )
    @settings(max_examples=50)
    def test_round_trip_random(self, a, hop, V1, r0, dt, eps):
        cfg = ex.ScenarioConfig(
            name="random", lattice=LatticeParams(a=a, A=hop, dims=2),
            source=CoulombSource((1.0, -2.0), V1=V1), r0=r0, k0=(0.1, -0.2),
            engines=("semiclassical", "quantum"),
            semiclassical=SemiclassicalSettings(dt=dt),
            quantum=QuantumSettings(epsilon=eps, shape=(64, 32)),
        )
        assert parse_config(format_config(cfg)) == cfg


def short_fig3():
    return replace(ex.preset("fig3-lattice"), semiclassical=SemiclassicalSettings(t_end=5.0))


class TestSeries:
    def test_empty_bundle(self, tmp_path):
        path = output.write_series(ex.RunBundle(), tmp_path / "empty.csv")
        assert path.read_bytes() == (",".join(output.SERIES_COLUMNS) + "\n").encode()

    def test_row_count_and_format(self, tmp_path):
        bundle = ex.run_scenario(short_fig3())
        path = output.write_series(bundle, tmp_path / "s.csv")
        raw = path.read_bytes()
        assert b"\r" not in raw
        lines = raw.decode().splitlines()
        assert lines[0] == "t,x,y,kx,ky,E,Lz,Lz_rate,zx,zy,sx,sy,Lq,Lc,S,alphaS"
        assert len(lines) == len(bundle.trajectory) + 1
        header, table = output.read_series(path)
        np.testing.assert_array_equal(table[:, 1:3], bundle.trajectory.r[:, :2])
        np.testing.assert_array_equal(table[:, 5], bundle.trajectory.energy)
        assert np.isnan(table[:, 8:]).all()

    def test_byte_identical_rerun(self, tmp_path):
        a = output.write_series(ex.run_scenario(short_fig3()), tmp_path / "a.csv")
        b = output.write_series(ex.run_scenario(short_fig3()), tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()

    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_seventeen_digits_round_trip(self, x):
        assert float(output.fmt(x)) == x

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError, match="cannot write"):
            output.write_series(ex.RunBundle(), tmp_path / "missing" / "s.csv")


class TestDensity:
    def packet(self, shape=(41, 41), k0=(0.0, 0.0)):
        spec = qm.GridSpec.centered(shape, LatticeParams(dims=len(shape)), (0.0,) * len(shape))
        return qm.init_gaussian(spec, (0.0,) * len(shape), k0, 4.0)

    def test_normalized_sum(self, tmp_path):
        header, plane = output.read_density(output.write_density(self.packet(), tmp_path / "d.txt"))
        assert plane.shape == (41, 41)
        assert abs(plane.sum() - 1.0) < 1e-10

    def test_header(self, tmp_path):
        path = output.write_density(self.packet((41, 33)), tmp_path / "d.txt")
        assert path.read_text().splitlines()[0] == "41 33 -20 -16 1 1"

    def test_symmetric_packet(self, tmp_path):
        _, plane = output.read_density(output.write_density(self.packet(), tmp_path / "d.txt"))
        assert np.max(np.abs(plane - plane[:, ::-1])) <= 1e-12

    def test_three_dimensional_marginal(self, tmp_path):
        psi = self.packet((41, 41, 41))
        _, plane = output.read_density(output.write_density(psi, tmp_path / "d.txt"))
        np.testing.assert_allclose(plane, psi.density().sum(axis=2).T, rtol=1e-15)

    def test_recomputed_skewness(self, tmp_path):
        cfg = replace(ex.preset("fig7"), engines=("quantum",),
                      quantum=QuantumSettings(t_end=0.2, shape=(128, 128)))
        final = ex.run_scenario(cfg).final_grid
        header, plane = output.read_density(output.write_density(final, tmp_path / "d.txt"))
        again = obs.moments(output.grid_from_density(header, plane))
        direct = obs.moments(final)
        assert abs(direct.s[0]) > 0.1
        np.testing.assert_allclose(again.s, direct.s, atol=1e-9)
        np.testing.assert_allclose(again.z, direct.z, atol=1e-9)


class TestCommandLine:
    def test_preset_list(self, capsys):
        assert main(["preset", "--list"]) == 0
        out = capsys.readouterr().out
        assert "fig7" in out and "fig3-lattice" in out

    def test_preset_show_round_trips(self, capsys):
        assert main(["preset", "--show", "fig5-quasibloch"]) == 0
        assert parse_config(capsys.readouterr().out) == ex.preset("fig5-quasibloch")

    def test_run_writes_outputs(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(SHORT_FIG7)
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        names = {p.name for p in (tmp_path / "o").iterdir()}
        assert names == {"series.csv", "metadata.json", "config.ini",
                         "density_initial.txt", "density_final.txt"}
        assert parse_config((tmp_path / "o" / "config.ini").read_text()) == parse_config(SHORT_FIG7)

    def test_validation_error_exit(self, tmp_path, capsys):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[scenario]\npreset = fig7\n[quantum]\nsigmaa = 6\n")
        assert main(["run", "--config", str(cfg)]) == 2
        assert "sigmaa" in capsys.readouterr().err

    def test_numerical_guard_exit(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[scenario]\nname = infall\n[lattice]\nA = 0.5\nB = 0.5\nkind = continuum\n"
                       "[source]\nV1 = 1\n[initial]\nr = 0, 1\nk = 0, 0\n"
                       "[semiclassical]\nt_end = 5\neps_min = 0.05\n")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3

    def test_sweep(self, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[scenario]\npreset = fig3-lattice\n[semiclassical]\nt_end = 200\n")
        out = tmp_path / "sw"
        assert main(["sweep", "--config", str(cfg), "--scales", "1,0.5", "--out", str(out)]) == 0
        header, rows = output.read_series(out / "sweep.csv")
        assert header[0] == "scale" and rows.shape[0] == 2

    @pytest.mark.parametrize("scales", ["0.5,1", "1,x", ""])
    def test_sweep_bad_scales(self, tmp_path, scales):
        cfg = tmp_path / "c.ini"
        cfg.write_text("[scenario]\npreset = fig3-lattice\n")
        assert main(["sweep", "--config", str(cfg), "--scales", scales]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "absent.ini")]) == 1

    def test_selftest_module_entry(self):
        proc = subprocess.run([sys.executable, "-m", "latkepler", "selftest"],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stdout + proc.stderr
        assert proc.stdout.count("PASS") >= 5 and "FAIL" not in proc.stdout
