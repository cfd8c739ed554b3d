import csv
import subprocess
import sys

import numpy as np
import pytest

import zonesim as z
from zonesim.cli import (EXIT_INPUT, EXIT_INVALID_BUILDING, EXIT_LOW_MASS, EXIT_MISALIGNED,
                         main, read_zone_csv)

CELL_TOML = """
name = "cell"
[assemblies.wall]
layers = [{ material = "fibre_cement", thickness = 0.007 },
          { material = "polyurethane", thickness = 0.06 },
          { material = "fibre_cement", thickness = 0.007 }]
[zones.cell]
air_volume = 22.5
[[surfaces]]
name = "roof"
assembly = "wall"
zone = "cell"
area = 9.0
tilt = 0.0
[[surfaces]]
name = "north"
assembly = "wall"
zone = "cell"
area = 7.5
[[surfaces]]
name = "floor"
assembly = "wall"
zone = "cell"
area = 9.0
tilt = 180.0
outside = "ground"
"""


@pytest.fixture
def inputs(tmp_path):
    (tmp_path / "cell.toml").write_text(CELL_TOML)
    z.write_weather(z.synthetic_weather(40, random=True, seed=4), tmp_path / "weather.csv")
    (tmp_path / "run.toml").write_text(
        'building = "cell.toml"\nweather = "weather.csv"\nout_dir = "out"\n')
    return tmp_path


def data_rows(path):
    return [r for r in csv.reader(l for l in open(path) if not l.startswith("#"))]


class TestSimulate:
    def test_both_backends(self, inputs):
        assert main(["simulate", str(inputs / "run.toml")]) == 0
        for be in ("fd", "ctf"):
            path = inputs / "out" / f"zone_temperatures_{be}.csv"
            text = path.read_text().splitlines()
            assert text[0].startswith("# zonesim ")
            assert any("sha256:" in line for line in text if line.startswith("#"))
            rows = data_rows(path)
            assert rows[0] == ["timestamp", "cell"]
            assert len(rows) - 1 == 40 * 24 - 5 * 24
            assert all(len(r[1].split(".")[1]) == 4 for r in rows[1:])

    def test_flags_override_manifest(self, inputs):
        code = main(["simulate", str(inputs / "run.toml"), "--backend", "fd", "--warmup-days", "2",
                     "--out-dir", str(inputs / "flagged")])
        assert code == 0
        assert not (inputs / "flagged" / "zone_temperatures_ctf.csv").exists()
        assert len(data_rows(inputs / "flagged" / "zone_temperatures_fd.csv")) - 1 == 38 * 24

    def test_config_file(self, inputs):
        (inputs / "cfg.toml").write_text("warmup_days = 1\nh_in = 6.0\n")
        code = main(["simulate", "--building", str(inputs / "cell.toml"), "--weather",
                     str(inputs / "weather.csv"), "--config", str(inputs / "cfg.toml"),
                     "--backend", "fd", "--out-dir", str(inputs / "c")])
        assert code == 0
        assert len(data_rows(inputs / "c" / "zone_temperatures_fd.csv")) - 1 == 39 * 24

    def test_deterministic(self, inputs):
        for d in ("a", "b"):
            main(["simulate", str(inputs / "run.toml"), "--out-dir", str(inputs / d)])
        for be in ("fd", "ctf"):
            name = f"zone_temperatures_{be}.csv"
            assert (inputs / "a" / name).read_text() == (inputs / "b" / name).read_text()

    def test_missing_weather(self, inputs, capsys):
        code = main(["simulate", "--building", str(inputs / "cell.toml"), "--weather",
                     str(inputs / "nope.csv")])
        assert code == EXIT_INPUT
        assert "nope.csv" in capsys.readouterr().err

    def test_bad_config_key(self, inputs):
        (inputs / "cfg.toml").write_text("colour = 3\n")
        code = main(["simulate", "--building", str(inputs / "cell.toml"), "--weather",
                     "synthetic:10", "--config", str(inputs / "cfg.toml")])
        assert code == EXIT_INPUT

    def test_malformed_building(self, inputs):
        (inputs / "bad.toml").write_text("[zones.a]\nair_volume = 'x'\n")
        assert main(["validate", str(inputs / "bad.toml")]) == EXIT_INPUT

    def test_invalid_building(self, inputs, capsys):
        (inputs / "empty.toml").write_text("[zones.a]\nair_volume = 10.0\n")
        code = main(["simulate", "--building", str(inputs / "empty.toml"), "--weather", "synthetic:10"])
        assert code == EXIT_INVALID_BUILDING
        assert main(["validate", str(inputs / "empty.toml")]) == EXIT_INVALID_BUILDING

    def test_strict_ctf_on_house(self, inputs, capsys):
        code = main(["simulate", "--building", "bundled:tropical_house", "--weather", "synthetic:10",
                     "--backend", "ctf", "--strict-ctf", "--out-dir", str(inputs / "h")])
        assert code == EXIT_LOW_MASS
        err = capsys.readouterr().err
        assert "surface '" in err and "time constant" in err
        assert main(["validate", "bundled:tropical_house", "--strict-ctf"]) == EXIT_LOW_MASS

    def test_validate_ok(self, capsys):
        assert main(["validate", "bundled:test_cell"]) == 0
        assert "valid" in capsys.readouterr().out

    def test_unknown_flag_is_usage_error(self):
        with pytest.raises(SystemExit) as err:
            main(["simulate", "--frobnicate"])
        assert err.value.code == 2

    def test_module_entry_point(self):
        done = subprocess.run([sys.executable, "-m", "zonesim", "--version"],
                              capture_output=True, text=True)
        assert done.returncode == 0 and done.stdout.startswith("zonesim ")


class TestAnalyze:
    @pytest.fixture
    def simulated(self, inputs):
        main(["simulate", str(inputs / "run.toml"), "--backend", "fd"])
        return inputs / "out" / "zone_temperatures_fd.csv"

    def test_identical_series(self, inputs, simulated, capsys):
        out = inputs / "same"
        code = main(["analyze", "--measured", str(simulated), "--simulated", str(simulated),
                     "--weather", str(inputs / "weather.csv"), "--out-dir", str(out)])
        assert code == 0
        stats = data_rows(out / "stats.csv")
        assert stats[1][1:] == ["0"] and stats[2][1:] == ["0"]
        for row in data_rows(out / "decomposition_cell.csv")[1:]:
            assert float(row[3]) == 0.0 and float(row[4]) == 0.0 and float(row[5]) == 0.0

    def test_injected_daily_error(self, inputs, simulated):
        stamps, sim = read_zone_csv(simulated)
        hours = np.arange(len(stamps))
        with open(inputs / "measured.csv", "w") as fh:
            fh.write("timestamp,cell\n")
            for ts, v, h in zip(stamps, sim["cell"], hours):
                fh.write(f"{ts},{v + 0.8 * np.sin(2 * np.pi * h / 24):.4f}\n")
        out = inputs / "inj"
        assert main(["analyze", "--measured", str(inputs / "measured.csv"), "--simulated",
                     str(simulated), "--weather", str(inputs / "weather.csv"), "--out-dir", str(out),
                     "--gnuplot"]) == 0
        rows = np.array(data_rows(out / "psd_cell.csv")[1:], dtype=float)
        assert round(rows[np.argmax(rows[:, 1]), 0], 4) == 0.0417
        header = data_rows(out / "coherency_cell.csv")[0]
        assert header == ["frequency_per_h", "outdoor_temperature", "direct_solar", "diffuse_solar"]
        assert (out / "spectra_cell.dat").exists()

    def test_custom_bands_and_order(self, inputs, simulated):
        out = inputs / "bands"
        code = main(["analyze", "--measured", str(simulated), "--simulated", str(simulated),
                     "--weather", str(inputs / "weather.csv"), "--out-dir", str(out),
                     "--bands", "0,0.1,0.5", "--order", "diffuse_solar,outdoor_temperature"])
        assert code == 0
        rows = data_rows(out / "decomposition_cell.csv")[1:]
        assert {(r[0], r[1]) for r in rows} == {("0", "0.1"), ("0.1", "0.5")}
        assert [r[2] for r in rows[:2]] == ["diffuse_solar", "outdoor_temperature"]

    def test_bad_bands(self, inputs, simulated):
        with pytest.raises(SystemExit):
            main(["analyze", "--measured", str(simulated), "--simulated", str(simulated),
                  "--weather", str(inputs / "weather.csv"), "--bands", "0.3,0.1"])

    def test_misaligned(self, inputs, simulated):
        lines = simulated.read_text().splitlines()
        (inputs / "short.csv").write_text("\n".join(lines[:-10]) + "\n")
        code = main(["analyze", "--measured", str(inputs / "short.csv"), "--simulated",
                     str(simulated), "--weather", str(inputs / "weather.csv"),
                     "--out-dir", str(inputs / "x")])
        assert code == EXIT_MISALIGNED

    def test_measured_in_manifest(self, inputs, simulated):
        (inputs / "m.toml").write_text('building = "cell.toml"\nweather = "weather.csv"\n'
                                       f'out_dir = "m"\nbackend = "ctf"\nmeasured = "{simulated}"\n')
        assert main(["simulate", str(inputs / "m.toml")]) == 0
        assert (inputs / "m" / "stats_ctf.csv").exists()


class TestCompareBackends:
    def test_adiabatic_box(self, tmp_path):
        (tmp_path / "box.toml").write_text(CELL_TOML.replace('tilt = 0.0', 'tilt = 0.0\noutside = "adiabatic"')
                                           .replace('area = 7.5', 'area = 7.5\noutside = "adiabatic"')
                                           .replace('"ground"', '"adiabatic"'))
        (tmp_path / "cfg.toml").write_text("initial_temperature = 25.0\n")
        code = main(["compare-backends", "--building", str(tmp_path / "box.toml"), "--weather",
                     "synthetic:40", "--config", str(tmp_path / "cfg.toml"), "--out-dir", str(tmp_path)])
        assert code == 0
        stats = data_rows(tmp_path / "stats_fd_minus_ctf.csv")
        assert stats[0] == ["statistic", "cell:fd_minus_ctf"]
        assert float(stats[1][1]) == 0.0 and float(stats[2][1]) == 0.0

    def test_cell_discrepancy_small(self, inputs):
        assert main(["compare-backends", str(inputs / "run.toml")]) == 0
        stats = data_rows(inputs / "out" / "stats_fd_minus_ctf.csv")
        assert float(stats[2][1]) < 0.5
        assert (inputs / "out" / "decomposition_cell_fd_minus_ctf.csv").exists()

    def test_heavy_walls_agree_better(self, tmp_path):
        # a thin sheet falls back to steady conduction; the heavy variant keeps its CTF.
        # FD is resolved finely enough in space and time to act as the reference.
        (tmp_path / "fine.toml").write_text("time_step = 300.0\nnodes_per_solid_layer = 10\n")
        light = CELL_TOML.replace('''layers = [{ material = "fibre_cement", thickness = 0.007 },
          { material = "polyurethane", thickness = 0.06 },
          { material = "fibre_cement", thickness = 0.007 }]''',
                                  'layers = [{ material = "fibre_cement", thickness = 0.004 }, { resistance = 1.0 }]')
        heavy = light.replace("thickness = 0.004", "thickness = 0.2").replace("fibre_cement", "concrete")
        std = {}
        for name, text in (("light", light), ("heavy", heavy)):
            (tmp_path / f"{name}.toml").write_text(text)
            out = tmp_path / name
            assert main(["compare-backends", "--building", str(tmp_path / f"{name}.toml"),
                         "--weather", "synthetic:40", "--seed", "2", "--config", str(tmp_path / "fine.toml"),
                         "--out-dir", str(out)]) == 0
            std[name] = float(data_rows(out / "stats_fd_minus_ctf.csv")[2][1])
        assert std["heavy"] < std["light"]
