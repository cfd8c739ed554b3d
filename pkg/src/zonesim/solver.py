"""Multizone heat balance.

Every zone is one air node. Every surface contributes a massless node on
each face that touches a zone (or an adiabatic boundary), linked to the
zone air by the combined interior film ``h_in``, and a wall element
between its two faces: either a finite-difference node chain or a
conduction transfer function. Exterior faces see an equivalent sol-air
temperature that already folds in absorbed solar radiation and long-wave
loss to the sky, so their film is part of the wall element.

Each time step solves one sparse linear system for all zone, surface and
(finite-difference) wall temperatures, fully implicit. The matrix does
not change between steps and is factorised once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .building import (ADIABATIC, EXTERIOR, GROUND, ZONE, BuildingDescription, Surface,
                       validate_building)
from .conduction_ctf import (CtfCoefficients, CtfState, LowMassFailure, LowMassWallError,
                             compute_ctf, massless_fallback)
from .conduction_fd import FdConfig, WallNodeNetwork, discretize
from .weather import (DEFAULT_ALBEDO, SolarPosition, WeatherRecord, WeatherSeries,
                      solar_positions, tilted_irradiance, tilted_irradiance_series)

AIR_DENSITY = 1.2  # kg/m3
AIR_SPECIFIC_HEAT = 1006.0  # J/(kg.K)

FINITE_DIFFERENCE = "finite_difference"
CTF_WITH_FALLBACK = "ctf_with_fallback"
_BACKEND_ALIASES = {"fd": FINITE_DIFFERENCE, "ctf": CTF_WITH_FALLBACK,
                    FINITE_DIFFERENCE: FINITE_DIFFERENCE, CTF_WITH_FALLBACK: CTF_WITH_FALLBACK}


class InvalidBuildingError(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid building:\n  " + "\n  ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class SimulationConfig:
    """Run settings.

    ``solar_aperture`` is the equivalent glazed area (m2) letting global
    horizontal irradiance into each zone, either one value for all zones
    or a mapping by zone name. ``ground_temperature=None`` uses the mean
    outdoor dry-bulb of the weather series. ``initial_temperature=None``
    starts everything at the first record's dry-bulb.
    """

    backend: str = FINITE_DIFFERENCE
    time_step: float = 3600.0
    h_in: float = 8.0
    h_out: float = 18.0
    sky_offset: float = 6.0
    sky_radiation_coeff: float = 5.0
    solar_aperture: float | dict = 0.0
    ground_temperature: float | None = None
    warmup_days: float = 5
    nodes_per_solid_layer: int = 3
    strict_ctf: bool = False
    albedo: float = DEFAULT_ALBEDO
    initial_temperature: float | None = None
    low_mass_fraction: float = 0.1

    def __post_init__(self):
        if self.backend not in _BACKEND_ALIASES:
            raise ValueError(f"unknown backend {self.backend!r}")
        object.__setattr__(self, "backend", _BACKEND_ALIASES[self.backend])
        if not (self.h_in > 0 and self.h_out > 0):
            raise ValueError("film coefficients must be > 0")
        if not self.time_step > 0:
            raise ValueError("time_step must be > 0")
        if self.sky_radiation_coeff < 0 or self.warmup_days < 0:
            raise ValueError("sky_radiation_coeff and warmup_days must be >= 0")

    def aperture(self, zone: str) -> float:
        if isinstance(self.solar_aperture, dict):
            return float(self.solar_aperture.get(zone, 0.0))
        return float(self.solar_aperture)


@dataclass(frozen=True)
class ZoneTemperatureSeries:
    zone: str
    timestamps: tuple[datetime, ...]
    values: np.ndarray

    def __len__(self):
        return len(self.timestamps)


@dataclass
class SimulationResult:
    zones: list[ZoneTemperatureSeries]
    energy_residual: np.ndarray  # relative, one per time step (warm-up included)
    fallbacks: dict[str, LowMassFailure] = field(default_factory=dict)
    backend: str = FINITE_DIFFERENCE

    def zone(self, name: str) -> ZoneTemperatureSeries:
        for z in self.zones:
            if z.zone == name:
                return z
        raise KeyError(name)

    def as_array(self) -> np.ndarray:
        return np.column_stack([z.values for z in self.zones])


def distribute_solar(zone_gain: float, surfaces_of_zone: Sequence) -> np.ndarray:
    """Split a zone's radiant gain over its surfaces in proportion to area.

    ``surfaces_of_zone`` holds surfaces (anything with ``.area``) or bare
    areas.
    """
    if zone_gain < 0:
        raise ValueError("zone gain must be >= 0")
    areas = np.array([getattr(s, "area", s) for s in surfaces_of_zone], dtype=float)
    total = areas.sum()
    if not total > 0:
        raise ValueError("zone has no surface area to receive the gain")
    shares = zone_gain * areas / total
    # pin the largest share so the shares add back to the gain exactly
    if shares.size > 1:
        k = int(np.argmax(areas))
        shares[k] = zone_gain - (shares.sum() - shares[k])
    return shares


def _exterior_film(surface: Surface, cfg: SimulationConfig) -> float:
    return cfg.h_out + cfg.sky_radiation_coeff * surface.sky_view_factor


def exterior_surface_balance(surface: Surface, rec: WeatherRecord, sun: SolarPosition,
                             cfg: SimulationConfig = SimulationConfig()) -> float:
    """Equivalent exterior temperature (degC) combining air, sun and sky.

    ``T_eq = Ta + (alpha G - h_sky F (Ta - T_sky)) / (h_out + h_sky F)`` with
    ``F = (1 + cos tilt) / 2``.
    """
    g = tilted_irradiance(rec, sun, surface, cfg.albedo)
    return float(_sol_air(rec.dry_bulb, g, surface, cfg))


def _sol_air(ta, g_tilt, surface: Surface, cfg: SimulationConfig):
    h_sky = cfg.sky_radiation_coeff * surface.sky_view_factor
    return ta + (surface.solar_absorptance * g_tilt - h_sky * cfg.sky_offset) / (cfg.h_out + h_sky)


def exterior_temperatures(b: BuildingDescription, w: WeatherSeries,
                          cfg: SimulationConfig) -> dict[str, np.ndarray]:
    """Sol-air temperature series for every exterior surface."""
    sun = solar_positions(w.timestamps, w.site)
    ta = w.dry_bulb
    out = {}
    for s in b.surfaces:
        if s.outside == EXTERIOR:
            g = tilted_irradiance_series(w, s.tilt, s.azimuth, cfg.albedo, sun=sun)
            out[s.name] = _sol_air(ta, g, s, cfg)
    return out


@dataclass
class _Wall:
    surface: Surface
    inner: int
    outer: int | None  # unknown index of the outer face node
    known: int | None  # index into the known-temperature vector
    net: WallNodeNetwork | None = None
    first: int = 0  # unknown index of the first FD node
    ctf: CtfCoefficients | None = None
    state: CtfState | None = None
    failure: LowMassFailure | None = None


class ZoneNetwork:
    """Assembled thermal network of a building for one configuration."""

    def __init__(self, b: BuildingDescription, cfg: SimulationConfig = SimulationConfig()):
        violations = validate_building(b)
        if violations:
            raise InvalidBuildingError(violations)
        self.building = b
        self.cfg = cfg
        self.zone_index = {z.name: i for i, z in enumerate(b.zones)}
        self.walls: list[_Wall] = []
        self.fallbacks: dict[str, LowMassFailure] = {}

        n = len(b.zones)
        known = 0
        for s in b.surfaces:
            inner = n
            n += 1
            outer = k = None
            if s.outside in (ZONE, ADIABATIC):
                outer = n
                n += 1
            else:
                k = known
                known += 1
            self.walls.append(_Wall(s, inner, outer, k))
        self.n_known = known

        fd_cfg = FdConfig(cfg.nodes_per_solid_layer, cfg.time_step)
        for wall in self.walls:
            s = wall.surface
            h_out = _exterior_film(s, cfg) if s.outside == EXTERIOR else math.inf
            if cfg.backend == FINITE_DIFFERENCE:
                wall.net = discretize(s.assembly, math.inf, h_out, fd_cfg)
                wall.first = n
                n += wall.net.n_nodes
            else:
                result = compute_ctf(s.assembly, cfg.time_step, math.inf, h_out,
                                     low_mass_fraction=cfg.low_mass_fraction)
                if isinstance(result, LowMassFailure):
                    if cfg.strict_ctf:
                        raise LowMassWallError(result, s.name)
                    wall.failure = result
                    self.fallbacks[s.name] = result
                    result = massless_fallback(s.assembly, math.inf, h_out, cfg.time_step)
                wall.ctf = result
        self.n_unknowns = n
        self._assemble()

    def _assemble(self):
        cfg, b = self.cfg, self.building
        dt = cfg.time_step
        n = self.n_unknowns
        m = sp.lil_matrix((n, n))
        cap = np.zeros(n)
        for z, i in self.zone_index.items():
            cap[i] = AIR_DENSITY * AIR_SPECIFIC_HEAT * b.zone(z).air_volume

        links: list[tuple[int, int, float]] = []
        known_links: list[tuple[int, int, float]] = []

        def link(i, j, g):
            m[i, i] += g
            m[j, j] += g
            m[i, j] -= g
            m[j, i] -= g
            links.append((i, j, g))

        def link_known(i, k, g):
            m[i, i] += g
            known_links.append((i, k, g))

        # solar shares per zone: (unknown index, fraction)
        self.solar_targets: dict[str, list[tuple[int, float]]] = {}
        for z in self.zone_index:
            faces = []
            for wall in self.walls:
                if wall.surface.zone == z:
                    faces.append((wall.inner, wall.surface.area))
                if wall.surface.outside == ZONE and wall.surface.adjacent_zone == z:
                    faces.append((wall.outer, wall.surface.area))
            fractions = distribute_solar(1.0, [a for _, a in faces])
            self.solar_targets[z] = [(idx, f) for (idx, _), f in zip(faces, fractions)]

        for wall in self.walls:
            s = wall.surface
            area = s.area
            link(wall.inner, self.zone_index[s.zone], area * cfg.h_in)
            if s.outside == ZONE:
                link(wall.outer, self.zone_index[s.adjacent_zone], area * cfg.h_in)
            if wall.net is not None:
                g = area * wall.net.conductances
                nodes = list(range(wall.first, wall.first + wall.net.n_nodes))
                cap[wall.first:wall.first + wall.net.n_nodes] = area * wall.net.capacitances
                chain = nodes + [wall.inner]
                if wall.outer is not None:
                    link(wall.outer, chain[0], g[0])
                else:
                    link_known(chain[0], wall.known, g[0])
                for k in range(1, len(chain)):
                    link(chain[k - 1], chain[k], g[k])
            else:
                c = wall.ctf
                x0, y0, z0 = c.exterior[0], c.cross[0], c.interior[0]
                # inner face receives area * q_in; outer face gives up area * q_out
                m[wall.inner, wall.inner] += area * z0
                if wall.outer is not None:
                    m[wall.inner, wall.outer] -= area * y0
                    m[wall.outer, wall.outer] += area * x0
                    m[wall.outer, wall.inner] -= area * y0
        self.capacity = cap
        self._links = tuple(np.array(c) for c in zip(*links)) if links else None
        self._known_links = tuple(np.array(c) for c in zip(*known_links)) if known_links else None
        self.matrix = (m + sp.diags(cap / dt)).tocsc()
        self._lu = splu(self.matrix)

    def _known_series(self, w: WeatherSeries) -> np.ndarray:
        cfg = self.cfg
        sol_air = exterior_temperatures(self.building, w, cfg)
        t_ground = cfg.ground_temperature if cfg.ground_temperature is not None else float(np.mean(w.dry_bulb))
        out = np.zeros((len(w), max(self.n_known, 1)))
        for wall in self.walls:
            s = wall.surface
            if s.outside == EXTERIOR:
                out[:, wall.known] = sol_air[s.name]
            elif s.outside == GROUND:
                out[:, wall.known] = s.ground_temperature if s.ground_temperature is not None else t_ground
        return out

    def run(self, w: WeatherSeries) -> SimulationResult:
        cfg, b = self.cfg, self.building
        dt = cfg.time_step
        substeps = w.step * 3600.0 / dt
        if not math.isclose(substeps, round(substeps), abs_tol=1e-9) or round(substeps) < 1:
            raise ValueError(f"weather step {w.step} h is not a whole multiple of time_step {dt} s")
        substeps = int(round(substeps))
        warm = int(round(cfg.warmup_days * 24.0 / w.step))
        if warm >= len(w):
            raise ValueError(f"warm-up of {cfg.warmup_days} days leaves no output from {len(w)} records")

        known = self._known_series(w)
        ghi = w.global_horizontal
        gains = np.column_stack([z.gains_at(len(w)) for z in b.zones])
        apertures = np.array([cfg.aperture(z.name) for z in b.zones])

        t0 = cfg.initial_temperature if cfg.initial_temperature is not None else w.records[0].dry_bulb
        temps = np.full(self.n_unknowns, float(t0))
        for wall in self.walls:
            if wall.ctf is not None:
                wall.state = CtfState.steady(wall.ctf, t0, t0)
        n_z = len(b.zones)
        out = np.empty((len(w), n_z))
        out[0] = temps[:n_z]
        residuals = np.zeros((len(w) - 1) * substeps)

        step = 0
        for rec in range(1, len(w)):
            for sub in range(1, substeps + 1):
                frac = sub / substeps
                theta = (1 - frac) * known[rec - 1] + frac * known[rec]
                zone_gain = (1 - frac) * gains[rec - 1] + frac * gains[rec]
                solar = apertures * ((1 - frac) * ghi[rec - 1] + frac * ghi[rec])
                # net inflow at the old temperatures, from temperature differences,
                # so that an equilibrium state gives exactly zero increment
                inflow = self._net_flows(temps, theta)
                inflow[:n_z] += zone_gain
                for zi, z in enumerate(b.zones):
                    for idx, f in self.solar_targets[z.name]:
                        inflow[idx] += f * solar[zi]
                hist = {}
                for wall in self.walls:
                    if wall.ctf is None:
                        continue
                    hist[id(wall)] = wall.state.history_terms(wall.ctf)
                    _, _, q_o, q_i = self._ctf_fluxes(wall, temps, theta, hist[id(wall)])
                    a = wall.surface.area
                    inflow[wall.inner] += a * q_i
                    if wall.outer is not None:
                        inflow[wall.outer] -= a * q_o
                new = temps + self._lu.solve(inflow)
                residuals[step] = self._energy_residual(temps, new, theta, hist,
                                                        zone_gain.sum() + solar.sum())
                for wall in self.walls:
                    if wall.ctf is not None:
                        t_o, t_i, q_o, q_i = self._ctf_fluxes(wall, new, theta, hist[id(wall)])
                        wall.state.push(t_o, t_i, q_o, q_i)
                temps = new
                step += 1
            out[rec] = temps[:n_z]

        stamps = tuple(w.timestamps[warm:])
        zones = [ZoneTemperatureSeries(z.name, stamps, out[warm:, i].copy())
                 for i, z in enumerate(b.zones)]
        return SimulationResult(zones, residuals, dict(self.fallbacks), cfg.backend)

    def _net_flows(self, temps, theta) -> np.ndarray:
        out = np.zeros(self.n_unknowns)
        if self._links is not None:
            i, j, g = self._links
            flow = g * (temps[j] - temps[i])
            out += np.bincount(i, flow, self.n_unknowns) - np.bincount(j, flow, self.n_unknowns)
        if self._known_links is not None:
            i, k, g = self._known_links
            out += np.bincount(i, g * (theta[k] - temps[i]), self.n_unknowns)
        return out

    def _ctf_fluxes(self, wall, temps, theta, hist):
        t_o = temps[wall.outer] if wall.outer is not None else theta[wall.known]
        t_i = temps[wall.inner]
        q_o, q_i = wall.state.fluxes(wall.ctf, t_o, t_i, hist)
        return t_o, t_i, q_o, q_i

    def _energy_residual(self, old, new, theta, hist, gains_total) -> float:
        """Stored-energy rate minus net inflow, relative to the largest flux."""
        dt = self.cfg.time_step
        stored = float(self.capacity @ (new - old)) / dt
        inflow = gains_total
        scale = abs(gains_total)
        for wall in self.walls:
            a = wall.surface.area
            if wall.net is not None:
                g = wall.net.conductances
                nn = wall.net.n_nodes
                t_o = new[wall.outer] if wall.outer is not None else theta[wall.known]
                first = new[wall.first] if nn else new[wall.inner]
                last = new[wall.first + nn - 1] if nn else t_o
                q_o = a * g[0] * (t_o - first)
                q_i = a * g[-1] * (last - new[wall.inner])
            else:
                _, _, q_o, q_i = self._ctf_fluxes(wall, new, theta, hist[id(wall)])
                q_o, q_i = a * q_o, a * q_i
                stored += q_o - q_i
            if wall.outer is None:
                inflow += q_o
            scale = max(scale, abs(q_o), abs(q_i))
        res = abs(stored - inflow)
        return res / scale if scale > 0 else res


def simulate(b: BuildingDescription, w: WeatherSeries,
             cfg: SimulationConfig = SimulationConfig()) -> list[ZoneTemperatureSeries]:
    """Zone air temperatures after warm-up, one series per zone."""
    return ZoneNetwork(b, cfg).run(w).zones


def run(b: BuildingDescription, w: WeatherSeries,
        cfg: SimulationConfig = SimulationConfig()) -> SimulationResult:
    """Like :func:`simulate` but also returns energy residuals and CTF fallbacks."""
    return ZoneNetwork(b, cfg).run(w)
