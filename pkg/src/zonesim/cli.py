"""Command-line front end.

::

    zonesim validate BUILDING [--weather FILE]
    zonesim simulate [MANIFEST] [--building B --weather W --config C] [options]
    zonesim compare-backends [MANIFEST] [...same inputs as simulate]
    zonesim analyze --measured M.csv --simulated S.csv --weather W [--order a,b,c]

A manifest is a TOML file naming the inputs; relative paths are taken
from the manifest's directory::

    building = "cell.toml"         # or "bundled:test_cell"
    weather = "reunion.csv"        # or "synthetic:35"
    config = "run.toml"            # optional, SimulationConfig fields
    backend = "both"               # fd | ctf | both
    out_dir = "out"
    measured = "measured.csv"      # optional, same layout as the zone CSVs

Command-line flags override the manifest, which overrides the config
file. Exit codes: 0 success, 2 unreadable or malformed input, 3 invalid
building, 4 wall without CTF in strict mode, 5 misaligned series.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import os
import sys
from dataclasses import dataclass, field, fields, replace
from datetime import datetime
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .building import validate_building
from .buildingfile import BuildingFileError, bundled_building, load_building
from .conduction_ctf import LowMassFailure, LowMassWallError, compute_ctf
from .residuals import (DEFAULT_BANDS, BandPartition, SpectralConfig, coherency,
                        decompose_variance, psd, rank_excitations, residual_stats,
                        write_decomposition_csv, write_gnuplot, write_spectrum_csv,
                        write_stats_csv)
from .solver import InvalidBuildingError, SimulationConfig, run
from .weather import WeatherError, WeatherSeries, load_weather, synthetic_weather

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVALID_BUILDING = 3
EXIT_LOW_MASS = 4
EXIT_MISALIGNED = 5

BACKENDS = {"fd": ("fd",), "ctf": ("ctf",), "both": ("fd", "ctf")}
EXCITATIONS = ("outdoor_temperature", "direct_solar", "diffuse_solar")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def _describe(label: str, ref: str) -> str:
    if os.path.isfile(ref):
        return f"{label}={ref} sha256:{_hash(ref)}"
    return f"{label}={ref}"


# -- inputs -----------------------------------------------------------------

@dataclass
class RunManifest:
    building: str
    weather: str
    config: str | None = None
    backend: str = "both"
    out_dir: str = "."
    measured: str | None = None
    provenance: list[str] = field(default_factory=list)

    @classmethod
    def load(cls, path) -> RunManifest:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise CliError(f"cannot read manifest {path}: {exc.strerror}", EXIT_INPUT) from None
        except tomllib.TOMLDecodeError as exc:
            raise CliError(f"{path}: {exc}", EXIT_INPUT) from None
        allowed = {f.name for f in fields(cls)} - {"provenance"}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise CliError(f"{path}: unknown key(s) {unknown}", EXIT_INPUT)
        for key in ("building", "weather"):
            if key not in data:
                raise CliError(f"{path}: missing key {key!r}", EXIT_INPUT)
        base = Path(path).parent

        def resolve(ref):
            if ref is None or ":" in ref and not os.path.isabs(ref) and ref.split(":")[0] in ("bundled", "synthetic"):
                return ref
            return str(base / ref)

        m = cls(**data)
        m.building, m.weather = resolve(m.building), resolve(m.weather)
        m.config, m.measured, m.out_dir = resolve(m.config), resolve(m.measured), resolve(m.out_dir)
        m.provenance.append(_describe("manifest", str(path)))
        return m


def load_building_ref(ref: str):
    if ref.startswith("bundled:"):
        try:
            return bundled_building(ref.split(":", 1)[1])
        except KeyError as exc:
            raise CliError(str(exc), EXIT_INPUT) from None
    try:
        return load_building(ref)
    except FileNotFoundError:
        raise CliError(f"building file not found: {ref}", EXIT_INPUT) from None
    except OSError as exc:
        raise CliError(f"cannot read building file {ref}: {exc.strerror}", EXIT_INPUT) from None
    except BuildingFileError as exc:
        raise CliError(str(exc), EXIT_INPUT) from None


def load_weather_ref(ref: str, seed: int | None = None, direct_normal: bool = False) -> WeatherSeries:
    """A weather file, or ``synthetic:DAYS`` (randomised when a seed is given)."""
    if ref.startswith("synthetic:"):
        try:
            days = float(ref.split(":", 1)[1])
        except ValueError:
            raise CliError(f"bad synthetic weather spec {ref!r}", EXIT_INPUT) from None
        return synthetic_weather(days, random=seed is not None, seed=seed)
    try:
        return load_weather(ref, direct_is_normal=direct_normal)
    except FileNotFoundError:
        raise CliError(f"weather file not found: {ref}", EXIT_INPUT) from None
    except OSError as exc:
        raise CliError(f"cannot read weather file {ref}: {exc.strerror}", EXIT_INPUT) from None
    except WeatherError as exc:
        raise CliError(f"{ref}: {exc}", EXIT_INPUT) from None


_CONFIG_FIELDS = {f.name for f in fields(SimulationConfig)}


def load_config(path: str | None) -> SimulationConfig:
    if path is None:
        return SimulationConfig()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise CliError(f"config file not found: {path}", EXIT_INPUT) from None
    except tomllib.TOMLDecodeError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None
    unknown = sorted(set(data) - _CONFIG_FIELDS)
    if unknown:
        raise CliError(f"{path}: unknown key(s) {unknown}", EXIT_INPUT)
    try:
        return SimulationConfig(**data)
    except (TypeError, ValueError) as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None


def read_zone_csv(path) -> tuple[list[str], dict[str, np.ndarray]]:
    """Timestamps and per-zone columns of a zone temperature file."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(line for line in fh if not line.startswith("#")) if r]
    except FileNotFoundError:
        raise CliError(f"file not found: {path}", EXIT_INPUT) from None
    if not rows or rows[0][0] != "timestamp" or len(rows[0]) < 2:
        raise CliError(f"{path}: expected a header 'timestamp,<zone>,...'", EXIT_INPUT)
    header, body = rows[0], rows[1:]
    try:
        values = np.array([[float(v) for v in r[1:]] for r in body], dtype=float)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}", EXIT_INPUT) from None
    if values.ndim != 2 or values.shape[1] != len(header) - 1:
        raise CliError(f"{path}: ragged rows", EXIT_INPUT)
    return [r[0] for r in body], {name: values[:, i] for i, name in enumerate(header[1:])}


def write_zone_csv(path, result, comments) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        out = csv.writer(fh)
        out.writerow(["timestamp"] + [z.zone for z in result.zones])
        stamps = result.zones[0].timestamps
        for i, ts in enumerate(stamps):
            out.writerow([ts.isoformat(timespec="minutes")] + [f"{z.values[i]:.4f}" for z in result.zones])


# -- analysis ----------------------------------------------------------------

def excitation_series(w: WeatherSeries, timestamps: list[str]) -> dict[str, np.ndarray]:
    """Weather excitations at the given timestamps."""
    index = {r.timestamp: i for i, r in enumerate(w.records)}
    try:
        rows = [index[datetime.fromisoformat(ts)] for ts in timestamps]
    except (KeyError, ValueError) as exc:
        raise CliError(f"series timestamp {exc} not in weather data", EXIT_MISALIGNED) from None
    return {"outdoor_temperature": w.dry_bulb[rows],
            "direct_solar": w.direct_horizontal[rows],
            "diffuse_solar": w.diffuse_horizontal[rows]}


def analyze_series(measured: dict[str, np.ndarray], simulated: dict[str, np.ndarray],
                   excitations: dict[str, np.ndarray], out_dir: Path, *, label: str = "",
                   bands: BandPartition = DEFAULT_BANDS, order: list[str] | None = None,
                   spectral: SpectralConfig | None = None, gnuplot: bool = False,
                   comments=()) -> dict:
    """Full residual analysis of every zone present in both inputs.

    Writes ``stats``, ``psd``, ``coherency`` and ``decomposition`` CSVs
    into ``out_dir`` and returns the statistics per zone.
    """
    spectral = spectral or SpectralConfig()
    zones = [z for z in simulated if z in measured]
    if not zones:
        raise CliError("measured and simulated files share no zone column", EXIT_MISALIGNED)
    out_dir.mkdir(parents=True, exist_ok=True)
    suffix = f"_{label}" if label else ""
    comments = list(comments)
    stats = {}
    for zone in zones:
        m, s = measured[zone], simulated[zone]
        if m.shape != s.shape:
            raise CliError(f"zone {zone!r}: {m.size} measured vs {s.size} simulated values",
                           EXIT_MISALIGNED)
        stats[(zone, label or "model")] = residual_stats(m, s)
        r = m - s
        est = psd(r, cfg=spectral)
        write_spectrum_csv(out_dir / f"psd_{zone}{suffix}.csv", est.frequencies,
                           {"psd": est.power}, comments)
        try:
            coh = {name: coherency(r, x, cfg=spectral) for name, x in excitations.items()}
        except ValueError as exc:
            raise CliError(f"zone {zone!r}: {exc}", EXIT_MISALIGNED) from None
        write_spectrum_csv(out_dir / f"coherency_{zone}{suffix}.csv", est.frequencies,
                           {name: c.gamma_squared for name, c in coh.items()}, comments)
        names = order or rank_excitations(r, excitations, spectral)
        missing = [n for n in names if n not in excitations]
        if missing:
            raise CliError(f"unknown excitation(s) {missing}; known: {list(excitations)}", EXIT_INPUT)
        dec = decompose_variance(r, [(n, excitations[n]) for n in names], bands, spectral)
        write_decomposition_csv(out_dir / f"decomposition_{zone}{suffix}.csv", dec, comments)
        if gnuplot:
            write_gnuplot(out_dir / f"spectra_{zone}{suffix}.dat", est.frequencies,
                          {"psd": est.power, **{n: c.gamma_squared for n, c in coh.items()}}, comments)
    write_stats_csv(out_dir / f"stats{suffix}.csv", stats, comments)
    return stats


def print_stats(stats: dict, stream=None) -> None:
    stream = stream or sys.stdout
    keys = list(stats)
    width = max(12, *(len(f"{z}:{b}") for z, b in keys))
    print(f"{'':>6} " + " ".join(f"{z}:{b}".rjust(width) for z, b in keys), file=stream)
    print(f"{'mean':>6} " + " ".join(f"{stats[k].mean:{width}.4f}" for k in keys), file=stream)
    print(f"{'std':>6} " + " ".join(f"{stats[k].std:{width}.4f}" for k in keys), file=stream)


# -- commands --------------------------------------------------------------

def _inputs(args) -> RunManifest:
    if args.manifest:
        m = RunManifest.load(args.manifest)
    else:
        if not (args.building and args.weather):
            raise CliError("give a manifest or both --building and --weather", EXIT_INPUT)
        m = RunManifest(args.building, args.weather)
    for key in ("building", "weather", "config", "measured", "out_dir", "backend"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(m, key, value)
    if m.backend not in BACKENDS:
        raise CliError(f"backend must be one of {sorted(BACKENDS)}, got {m.backend!r}", EXIT_INPUT)
    m.provenance += [_describe("building", m.building), _describe("weather", m.weather)]
    if m.config:
        m.provenance.append(_describe("config", m.config))
    if m.weather.startswith("synthetic:"):
        m.provenance.append(f"seed={args.seed}")
    return m


def _config(args, m: RunManifest) -> SimulationConfig:
    cfg = load_config(m.config)
    over = {}
    if args.strict_ctf:
        over["strict_ctf"] = True
    if args.warmup_days is not None:
        over["warmup_days"] = args.warmup_days
    return replace(cfg, **over) if over else cfg


def _simulate(m: RunManifest, cfg: SimulationConfig, args, backends) -> tuple[dict, WeatherSeries]:
    b = load_building_ref(m.building)
    w = load_weather_ref(m.weather, args.seed, args.direct_normal)
    results = {}
    for be in backends:
        try:
            results[be] = run(b, w, replace(cfg, backend=be))
        except InvalidBuildingError as exc:
            raise CliError("\n".join(["invalid building:"] + [f"  {v}" for v in exc.violations]),
                           EXIT_INVALID_BUILDING) from None
        except LowMassWallError as exc:
            raise CliError(str(exc), EXIT_LOW_MASS) from None
        except ValueError as exc:
            raise CliError(str(exc), EXIT_INPUT) from None
        for surface, failure in results[be].fallbacks.items():
            print(f"note: surface {surface!r} uses steady conduction ({failure.reason})", file=sys.stderr)
    return results, w


def _header(m: RunManifest, extra=()) -> list[str]:
    return [f"zonesim {__version__}"] + m.provenance + list(extra)


def _spectral(w: WeatherSeries) -> SpectralConfig:
    return SpectralConfig(step=w.step)


def cmd_validate(args) -> int:
    b = load_building_ref(args.building)
    problems = validate_building(b)
    for v in problems:
        print(f"{v.code}: {v.locator}: {v.message}")
    if args.weather:
        w = load_weather_ref(args.weather, args.seed, args.direct_normal)
        print(f"weather: {len(w)} records, step {w.step:g} h")
    if problems:
        return EXIT_INVALID_BUILDING
    failed = []
    cfg = SimulationConfig()
    for name, a in sorted({s.assembly.name: s.assembly for s in b.surfaces}.items()):
        result = compute_ctf(a, cfg.time_step, cfg.h_in)
        if isinstance(result, LowMassFailure):
            failed.append(result)
            print(f"assembly {name}: steady-conduction fallback ({result.reason}, "
                  f"time constant {result.time_constant:.3g} s)")
        else:
            print(f"assembly {name}: CTF order {result.order}, U = {result.u_value:.4f} W/(m2.K)")
    print(f"{b.name}: {len(b.zones)} zones, {len(b.surfaces)} surfaces, valid")
    if failed and args.strict_ctf:
        return EXIT_LOW_MASS
    return EXIT_OK


def cmd_simulate(args) -> int:
    m = _inputs(args)
    cfg = _config(args, m)
    results, w = _simulate(m, cfg, args, BACKENDS[m.backend])
    out = Path(m.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for be, res in results.items():
        path = out / f"zone_temperatures_{be}.csv"
        write_zone_csv(path, res, _header(m, [f"backend={res.backend}"]))
        print(f"wrote {path}")
    if m.measured:
        stamps, measured = read_zone_csv(m.measured)
        for be, res in results.items():
            sim_stamps = [t.isoformat(timespec="minutes") for t in res.zones[0].timestamps]
            if sim_stamps != stamps:
                raise CliError(f"{m.measured}: timestamps do not match the simulation output",
                               EXIT_MISALIGNED)
            sim = {z.zone: z.values for z in res.zones}
            stats = analyze_series(measured, sim, excitation_series(w, stamps), out, label=be,
                                   bands=args.bands, spectral=_spectral(w), gnuplot=args.gnuplot,
                                   comments=_header(m, [_describe("measured", m.measured)]))
            print_stats(stats)
    return EXIT_OK


def cmd_compare_backends(args) -> int:
    m = _inputs(args)
    cfg = _config(args, m)
    results, w = _simulate(m, cfg, args, ("fd", "ctf"))
    out = Path(m.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for be, res in results.items():
        write_zone_csv(out / f"zone_temperatures_{be}.csv", res, _header(m, [f"backend={res.backend}"]))
    stamps = [t.isoformat(timespec="minutes") for t in results["fd"].zones[0].timestamps]
    reference = {z.zone: z.values for z in results["fd"].zones}
    model = {z.zone: z.values for z in results["ctf"].zones}
    stats = analyze_series(reference, model, excitation_series(w, stamps), out, label="fd_minus_ctf",
                           bands=args.bands, order=args.order, spectral=_spectral(w),
                           gnuplot=args.gnuplot, comments=_header(m, ["residual = fd - ctf"]))
    print_stats(stats)
    return EXIT_OK


def cmd_analyze(args) -> int:
    m_stamps, measured = read_zone_csv(args.measured)
    s_stamps, simulated = read_zone_csv(args.simulated)
    if m_stamps != s_stamps:
        raise CliError(f"{args.measured} has {len(m_stamps)} rows, {args.simulated} has "
                       f"{len(s_stamps)}; timestamps must match row for row", EXIT_MISALIGNED)
    w = load_weather_ref(args.weather, args.seed, args.direct_normal)
    comments = [f"zonesim {__version__}"] + [_describe(k, getattr(args, k))
                                              for k in ("measured", "simulated", "weather")]
    stats = analyze_series(measured, simulated, excitation_series(w, s_stamps), Path(args.out_dir or "."),
                           bands=args.bands, order=args.order, spectral=_spectral(w),
                           gnuplot=args.gnuplot, comments=comments)
    print_stats(stats)
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _bands(text: str) -> BandPartition:
    try:
        return BandPartition.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _order(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out-dir", help="directory for output files (default: manifest value or .)")
    common.add_argument("--bands", type=_bands, default=DEFAULT_BANDS,
                        help="comma-separated band edges in 1/h (default 0,0.02,0.08,0.32,0.5)")
    common.add_argument("--backend", choices=sorted(BACKENDS), help="conduction backend(s) to run")
    common.add_argument("--strict-ctf", action="store_true",
                        help="fail instead of falling back to steady conduction for low-mass walls")
    common.add_argument("--warmup-days", type=float, help="days discarded at the start of a run")
    common.add_argument("--seed", type=int, help="randomise synthetic:DAYS weather with this seed")
    common.add_argument("--direct-normal", action="store_true",
                        help="weather file gives direct irradiance on a sun-facing plane")
    common.add_argument("--gnuplot", action="store_true", help="also write .dat spectra for gnuplot")
    common.add_argument("--order", type=_order,
                        help="excitation order for the decomposition (default: ranked by coherency)")

    p = argparse.ArgumentParser(prog="zonesim", description="Multizone thermal simulation and residual analysis.")
    p.add_argument("--version", action="version", version=f"zonesim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="check a building (and optionally weather) file")
    v.add_argument("building")
    v.add_argument("--weather")
    v.set_defaults(func=cmd_validate)

    for name, func, text in (("simulate", cmd_simulate, "run the simulation"),
                             ("compare-backends", cmd_compare_backends,
                              "run both backends and analyse their discrepancy")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("manifest", nargs="?")
        s.add_argument("--building")
        s.add_argument("--weather")
        s.add_argument("--config")
        s.add_argument("--measured")
        s.set_defaults(func=func)

    a = sub.add_parser("analyze", parents=[common], help="analyse measured minus simulated residuals")
    a.add_argument("--measured", required=True)
    a.add_argument("--simulated", required=True)
    a.add_argument("--weather", required=True)
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"zonesim: error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
