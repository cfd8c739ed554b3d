"""Weather series ingestion and the boundary solicitations derived from them.

Weather CSV layout (UTF-8, comma separated, one header row)::

    # latitude=-20.9, longitude=55.5, utc_offset=4
    timestamp,dry_bulb_C,rh_pct,direct_Wm2,diffuse_Wm2,wind_ms,wind_deg
    2024-01-01T00:00,24.3,78,0,0,1.8,120
    ...

Leading ``#`` lines may carry the site as ``key=value`` pairs; a ``site``
passed to :func:`load_weather` takes precedence. Timestamps are local
standard time. ``direct_Wm2`` is direct irradiance on the horizontal
plane unless ``direct_is_normal=True``.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Sequence

import numpy as np

COLUMNS = ("timestamp", "dry_bulb_C", "rh_pct", "direct_Wm2", "diffuse_Wm2", "wind_ms", "wind_deg")
BEAM_GUARD_ALTITUDE = 3.0  # deg; low-sun clamp for the beam conversion
DEFAULT_ALBEDO = 0.2


class WeatherError(ValueError):
    """Problem reading or validating a weather file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


@dataclass(frozen=True)
class Site:
    latitude: float
    longitude: float
    utc_offset: float


REUNION = Site(latitude=-20.9, longitude=55.5, utc_offset=4.0)


@dataclass(frozen=True)
class WeatherRecord:
    timestamp: datetime
    dry_bulb: float
    relative_humidity: float
    direct_horizontal: float
    diffuse_horizontal: float
    wind_speed: float
    wind_direction: float

    @property
    def global_horizontal(self) -> float:
        return self.direct_horizontal + self.diffuse_horizontal


def _record_problems(rec: WeatherRecord) -> list[str]:
    problems = []
    values = [rec.dry_bulb, rec.relative_humidity, rec.direct_horizontal,
              rec.diffuse_horizontal, rec.wind_speed, rec.wind_direction]
    if not all(math.isfinite(v) for v in values):
        problems.append("non-finite value")
    if not 0.0 <= rec.relative_humidity <= 100.0:
        problems.append(f"relative humidity {rec.relative_humidity} outside [0, 100]")
    if rec.direct_horizontal < 0 or rec.diffuse_horizontal < 0:
        problems.append("negative irradiance")
    if rec.wind_speed < 0:
        problems.append(f"negative wind speed {rec.wind_speed}")
    return problems


@dataclass(frozen=True)
class WeatherSeries:
    """Uniformly sampled weather. ``step`` is in hours."""

    site: Site
    records: tuple[WeatherRecord, ...]
    step: float

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        for i, rec in enumerate(records):
            problems = _record_problems(rec)
            if problems:
                raise WeatherError(f"record {i}: {'; '.join(problems)}")
        for i in range(1, len(records)):
            dt = (records[i].timestamp - records[i - 1].timestamp).total_seconds() / 3600.0
            if not math.isclose(dt, self.step, abs_tol=1e-9):
                raise WeatherError(
                    f"non-uniform step between records {i - 1} and {i}: {dt:g} h, expected {self.step:g} h")

    def __len__(self):
        return len(self.records)

    @property
    def timestamps(self) -> list[datetime]:
        return [r.timestamp for r in self.records]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def dry_bulb(self) -> np.ndarray:
        return self.column("dry_bulb")

    @property
    def direct_horizontal(self) -> np.ndarray:
        return self.column("direct_horizontal")

    @property
    def diffuse_horizontal(self) -> np.ndarray:
        return self.column("diffuse_horizontal")

    @property
    def global_horizontal(self) -> np.ndarray:
        return self.direct_horizontal + self.diffuse_horizontal

    def slice(self, start: int, stop: int | None = None) -> WeatherSeries:
        return WeatherSeries(self.site, self.records[start:stop], self.step)


def _parse_site_comment(lines: list[str]) -> dict:
    found = {}
    for line in lines:
        for part in line.lstrip("#").split(","):
            if "=" in part:
                key, value = (s.strip() for s in part.split("=", 1))
                if key in ("latitude", "longitude", "utc_offset"):
                    found[key] = float(value)
    return found


def load_weather(path: str | os.PathLike, site: Site | None = None,
                 direct_is_normal: bool = False) -> WeatherSeries:
    """Read and validate a weather CSV.

    Gaps, duplicated timestamps and out-of-range values raise
    :class:`WeatherError` carrying the offending line number. Nothing is
    interpolated.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    comments = []
    n = 0
    while n < len(lines) and (lines[n].startswith("#") or not lines[n].strip()):
        comments.append(lines[n])
        n += 1
    if site is None:
        meta = _parse_site_comment(comments)
        if set(meta) != {"latitude", "longitude", "utc_offset"}:
            raise WeatherError("site not given and not found in '# latitude=..., longitude=..., utc_offset=...' header")
        site = Site(**meta)
    if n >= len(lines):
        raise WeatherError("missing header row", n + 1)
    reader = csv.reader(lines[n:])
    header = [h.strip() for h in next(reader)]
    if tuple(header) != COLUMNS:
        raise WeatherError(f"expected columns {','.join(COLUMNS)}, got {','.join(header)}", n + 1)

    records = []
    prev = None
    step = None
    for offset, row in enumerate(reader, start=n + 2):
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(COLUMNS):
            raise WeatherError(f"expected {len(COLUMNS)} fields, got {len(row)}", offset)
        try:
            ts = datetime.fromisoformat(row[0].strip())
            values = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise WeatherError(str(exc), offset) from None
        if ts.tzinfo is not None:
            ts = ts.replace(tzinfo=None)
        ta, rh, direct, diffuse, wind, wind_dir = values
        if direct_is_normal:
            alt = solar_position(ts, site).altitude
            direct = direct * max(0.0, math.sin(math.radians(alt)))
        rec = WeatherRecord(ts, ta, rh, direct, diffuse, wind, wind_dir)
        problems = _record_problems(rec)
        if problems:
            raise WeatherError("out-of-range field: " + "; ".join(problems), offset)
        if prev is not None:
            dt = (ts - prev).total_seconds() / 3600.0
            if step is None:
                step = dt
            if dt <= 0 or not math.isclose(dt, step, abs_tol=1e-9):
                raise WeatherError(
                    f"non-uniform step: {prev.isoformat()} -> {ts.isoformat()} ({dt:g} h, expected {step:g} h)", offset)
        prev = ts
        records.append(rec)
    if len(records) < 2:
        raise WeatherError("need at least two records to define a step")
    return WeatherSeries(site, tuple(records), step)


def write_weather(w: WeatherSeries, path: str | os.PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# latitude={w.site.latitude}, longitude={w.site.longitude}, utc_offset={w.site.utc_offset}\n")
        out = csv.writer(fh)
        out.writerow(COLUMNS)
        for r in w.records:
            out.writerow([r.timestamp.isoformat(timespec="minutes"), repr(r.dry_bulb),
                          repr(r.relative_humidity), repr(r.direct_horizontal),
                          repr(r.diffuse_horizontal), repr(r.wind_speed), repr(r.wind_direction)])


def sky_temperature(dry_bulb, offset: float = 6.0):
    """Effective sky temperature as a fixed depression below the air temperature."""
    if isinstance(dry_bulb, (list, tuple)):
        dry_bulb = np.asarray(dry_bulb, dtype=float)
    return dry_bulb - offset


@dataclass(frozen=True)
class SolarPosition:
    altitude: float  # deg above horizon
    azimuth: float  # deg clockwise from north


def _solar_angles(day_of_year, clock_hours, site: Site):
    """Vectorised Spencer/NOAA approximations; returns (altitude, azimuth) in degrees."""
    gamma = 2.0 * np.pi / 365.0 * (day_of_year - 1 + (clock_hours - 12.0) / 24.0)
    eot = 229.18 * (0.000075 + 0.001868 * np.cos(gamma) - 0.032077 * np.sin(gamma)
                    - 0.014615 * np.cos(2 * gamma) - 0.040849 * np.sin(2 * gamma))
    decl = (0.006918 - 0.399912 * np.cos(gamma) + 0.070257 * np.sin(gamma)
            - 0.006758 * np.cos(2 * gamma) + 0.000907 * np.sin(2 * gamma)
            - 0.002697 * np.cos(3 * gamma) + 0.00148 * np.sin(3 * gamma))
    true_solar_minutes = clock_hours * 60.0 + eot + 4.0 * site.longitude - 60.0 * site.utc_offset
    hour_angle = np.radians(true_solar_minutes / 4.0 - 180.0)
    lat = np.radians(site.latitude)
    sin_alt = np.sin(lat) * np.sin(decl) + np.cos(lat) * np.cos(decl) * np.cos(hour_angle)
    altitude = np.degrees(np.arcsin(np.clip(sin_alt, -1.0, 1.0)))
    az_south = np.arctan2(np.sin(hour_angle),
                          np.cos(hour_angle) * np.sin(lat) - np.tan(decl) * np.cos(lat))
    azimuth = np.mod(np.degrees(az_south) + 180.0, 360.0)
    return altitude, azimuth


def _day_and_hours(ts: datetime):
    return ts.timetuple().tm_yday, ts.hour + ts.minute / 60.0 + ts.second / 3600.0


def solar_position(timestamp: datetime, site: Site) -> SolarPosition:
    doy, hours = _day_and_hours(timestamp)
    alt, az = _solar_angles(doy, hours, site)
    return SolarPosition(float(alt), float(az) % 360.0)


def solar_positions(timestamps: Sequence[datetime], site: Site) -> tuple[np.ndarray, np.ndarray]:
    """Altitude and azimuth arrays (deg) for many timestamps."""
    doy, hours = np.array([_day_and_hours(t) for t in timestamps], dtype=float).T
    return _solar_angles(doy, hours, site)


def _tilted(direct_h, diffuse_h, altitude, sun_azimuth, tilt, surface_azimuth, albedo):
    tilt_r = np.radians(tilt)
    guard = np.radians(BEAM_GUARD_ALTITUDE)
    up = altitude > 0.0
    # below the guard altitude the geometry is evaluated at the guard, so the
    # beam ratio stays bounded and is exactly 1 on a horizontal plane
    alt_r = np.maximum(np.radians(altitude), guard)
    cos_inc = (np.sin(alt_r) * np.cos(tilt_r)
               + np.cos(alt_r) * np.sin(tilt_r) * np.cos(np.radians(sun_azimuth - surface_azimuth)))
    beam = np.where(up, direct_h * (np.maximum(0.0, cos_inc) / np.sin(alt_r)), 0.0)
    sky = diffuse_h * (1.0 + np.cos(tilt_r)) / 2.0
    ground = albedo * (direct_h + diffuse_h) * (1.0 - np.cos(tilt_r)) / 2.0
    return beam + sky + ground


def tilted_irradiance(rec: WeatherRecord, sun: SolarPosition, surf,
                      albedo: float = DEFAULT_ALBEDO) -> float:
    """Total irradiance on a surface plane, W/m2, isotropic sky.

    ``surf`` needs ``tilt`` and ``azimuth`` attributes (a
    :class:`~zonesim.building.Surface` will do).
    """
    return float(_tilted(rec.direct_horizontal, rec.diffuse_horizontal, sun.altitude,
                         sun.azimuth, surf.tilt, surf.azimuth, albedo))


def tilted_irradiance_series(w: WeatherSeries, tilt: float, azimuth: float,
                             albedo: float = DEFAULT_ALBEDO,
                             sun: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    if sun is None:
        sun = solar_positions(w.timestamps, w.site)
    alt, az = sun
    return _tilted(w.direct_horizontal, w.diffuse_horizontal, alt, az, tilt, azimuth, albedo)


def synthetic_weather(days: int, site: Site = REUNION, *, start: str = "2024-01-01T00:00",
                      step: float = 1.0, mean_temperature: float = 25.0,
                      daily_amplitude: float = 4.0, peak_irradiance: float = 900.0,
                      diffuse_fraction: float = 0.25, random: bool = False,
                      seed: int | None = 0, synoptic_std: float = 2.0,
                      synoptic_hours: float = 72.0) -> WeatherSeries:
    """Deterministic or randomised weather for tests and demonstrations.

    With ``random=False`` the air temperature is a 24 h sinusoid peaking at
    15:00 and irradiance follows a clear-sky shape from the solar altitude.
    With ``random=True`` a slow AR(1) weather component is added to the
    temperature and a slowly varying cloud factor modulates irradiance and
    its diffuse share, so the three excitations are only partly correlated.
    """
    n = int(round(days * 24 / step))
    t0 = datetime.fromisoformat(start)
    stamps = [t0 + timedelta(hours=i * step) for i in range(n)]
    hours = np.arange(n) * step
    alt, _ = solar_positions(stamps, site)
    clear = peak_irradiance * np.clip(np.sin(np.radians(alt)), 0.0, None) ** 1.15

    ta = mean_temperature + daily_amplitude * np.sin(2 * np.pi * (hours - 9.0) / 24.0)
    diffuse_share = np.full(n, diffuse_fraction)
    cloud = np.ones(n)
    if random:
        rng = np.random.default_rng(seed)
        phi = math.exp(-step / synoptic_hours)
        drive = rng.standard_normal((3, n))
        slow = np.zeros((3, n))
        for i in range(1, n):
            slow[:, i] = phi * slow[:, i - 1] + math.sqrt(1 - phi * phi) * drive[:, i]
        ta = ta + synoptic_std * slow[0] + 0.3 * rng.standard_normal(n)
        cloud = np.clip(0.7 + 0.25 * slow[1] + 0.1 * rng.standard_normal(n), 0.15, 1.0)
        diffuse_share = np.clip(diffuse_fraction + 0.5 * (1.0 - cloud) + 0.08 * slow[2], 0.1, 0.95)
    ghi = clear * cloud
    diffuse = ghi * diffuse_share
    direct = ghi - diffuse
    records = tuple(
        WeatherRecord(stamps[i], float(ta[i]), 75.0, float(direct[i]), float(diffuse[i]), 2.0, 120.0)
        for i in range(n))
    return WeatherSeries(site, records, step)


def constant_weather(days: float, dry_bulb: float, site: Site = REUNION, step: float = 1.0,
                     start: str = "2024-01-01T00:00") -> WeatherSeries:
    """Night-like weather: fixed air temperature, no sun."""
    n = int(round(days * 24 / step))
    t0 = datetime.fromisoformat(start)
    return WeatherSeries(site, tuple(
        WeatherRecord(t0 + timedelta(hours=i * step), float(dry_bulb), 70.0, 0.0, 0.0, 0.0, 0.0)
        for i in range(n)), step)
