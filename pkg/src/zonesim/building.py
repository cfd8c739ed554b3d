"""Materials, layered wall assemblies, surfaces and zones.

A building is described as a flat list of zones plus a flat list of
surfaces. Each surface carries its own wall assembly, its orientation and
what lies on its outer side (outdoor air, another zone, the ground, or an
adiabatic boundary). No 3D geometry is kept; radiant exchange inside a
zone is handled by area ratios in the solver.

Assemblies are ordered from the outside face to the inside face.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

EXTERIOR = "exterior"
ADIABATIC = "adiabatic"
GROUND = "ground"
ZONE = "zone"
BOUNDARY_KINDS = (EXTERIOR, ADIABATIC, GROUND, ZONE)

# Equivalent conductance of a 10 cm enclosed air layer (convection plus
# long-wave exchange across the gap), W/(m2.K).
AIR_GAP_CONDUCTANCE_10CM = 9.26
AIR_GAP_REFERENCE_THICKNESS = 0.10


@dataclass(frozen=True)
class Material:
    """Homogeneous opaque material.

    Attributes
    ----------
    name : str
    conductivity : float
        W/(m.K)
    density : float
        kg/m3
    specific_heat : float
        J/(kg.K)
    """

    name: str
    conductivity: float
    density: float
    specific_heat: float

    @property
    def volumetric_heat_capacity(self) -> float:
        return self.density * self.specific_heat

    @property
    def diffusivity(self) -> float:
        return self.conductivity / self.volumetric_heat_capacity


@dataclass(frozen=True)
class Layer:
    """One layer of a wall: either a solid slab or a massless resistance.

    Use :meth:`solid` and :meth:`resistance_only` rather than the raw
    constructor.
    """

    material: Material | None = None
    thickness: float | None = None
    resistance: float | None = None
    label: str = ""

    @classmethod
    def solid(cls, material: Material, thickness: float) -> Layer:
        return cls(material=material, thickness=float(thickness),
                   label=material.name)

    @classmethod
    def resistance_only(cls, resistance: float, label: str = "massless") -> Layer:
        return cls(resistance=float(resistance), label=label)

    @property
    def is_massless(self) -> bool:
        return self.material is None

    @property
    def thermal_resistance(self) -> float:
        """Conductive resistance of the layer, m2.K/W."""
        if self.is_massless:
            return self.resistance
        return self.thickness / self.material.conductivity

    @property
    def heat_capacity(self) -> float:
        """Areal heat capacity, J/(m2.K). Zero for massless layers."""
        if self.is_massless:
            return 0.0
        return self.material.volumetric_heat_capacity * self.thickness


@dataclass(frozen=True)
class WallAssembly:
    """Ordered stack of layers, outside face first."""

    name: str
    layers: tuple[Layer, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def resistance(self) -> float:
        """Surface-to-surface resistance, m2.K/W (films excluded)."""
        return sum(layer.thermal_resistance for layer in self.layers)

    @property
    def heat_capacity(self) -> float:
        return sum(layer.heat_capacity for layer in self.layers)

    @property
    def is_massless(self) -> bool:
        return all(layer.is_massless for layer in self.layers)

    def reversed(self, name: str | None = None) -> WallAssembly:
        """The same wall seen from the other side."""
        return WallAssembly(name or f"{self.name}_reversed", self.layers[::-1])

    def __add__(self, other: WallAssembly) -> WallAssembly:
        return WallAssembly(f"{self.name}+{other.name}", self.layers + other.layers)


@dataclass(frozen=True)
class Zone:
    """Well-mixed air volume.

    ``internal_gains`` is either a constant (W) or a per-weather-record
    schedule of the same length as the weather series.
    """

    name: str
    air_volume: float
    internal_gains: float | tuple[float, ...] = 0.0

    def __post_init__(self):
        if not np.isscalar(self.internal_gains):
            object.__setattr__(self, "internal_gains",
                               tuple(float(g) for g in self.internal_gains))

    def gains_at(self, n_records: int) -> np.ndarray:
        if np.isscalar(self.internal_gains):
            return np.full(n_records, float(self.internal_gains))
        gains = np.asarray(self.internal_gains, dtype=float)
        if gains.size != n_records:
            raise ValueError(
                f"zone {self.name!r}: gain schedule has {gains.size} values, "
                f"weather series has {n_records} records")
        return gains


@dataclass(frozen=True)
class Surface:
    """A wall, floor or roof element seen from ``zone``.

    ``outside`` is one of ``"exterior"``, ``"adiabatic"``, ``"ground"`` or
    ``"zone"``; in the last case ``adjacent_zone`` names the zone on the
    outer face. ``ground_temperature`` overrides the simulation default
    for ground-contact surfaces. Azimuth is clockwise from north, tilt is
    measured from the horizontal (0 = roof facing up, 90 = wall,
    180 = floor facing down).
    """

    name: str
    assembly: WallAssembly
    zone: str
    area: float
    azimuth: float = 0.0
    tilt: float = 90.0
    outside: str = EXTERIOR
    adjacent_zone: str | None = None
    ground_temperature: float | None = None
    solar_absorptance: float = 0.6

    @property
    def sky_view_factor(self) -> float:
        return 0.5 * (1.0 + math.cos(math.radians(self.tilt)))


@dataclass(frozen=True)
class BuildingDescription:
    zones: tuple[Zone, ...]
    surfaces: tuple[Surface, ...]
    name: str = "building"

    def __post_init__(self):
        object.__setattr__(self, "zones", tuple(self.zones))
        object.__setattr__(self, "surfaces", tuple(self.surfaces))

    @property
    def zone_names(self) -> list[str]:
        return [z.name for z in self.zones]

    def zone(self, name: str) -> Zone:
        for z in self.zones:
            if z.name == name:
                return z
        raise KeyError(name)

    def surfaces_facing(self, zone_name: str) -> list[tuple[Surface, str]]:
        """Surface faces exposed to ``zone_name`` as (surface, "inner"|"outer")."""
        faces = []
        for s in self.surfaces:
            if s.zone == zone_name:
                faces.append((s, "inner"))
            if s.outside == ZONE and s.adjacent_zone == zone_name:
                faces.append((s, "outer"))
        return faces


@dataclass(frozen=True)
class Violation:
    code: str
    locator: str
    message: str

    def __str__(self):
        return f"{self.locator}: {self.message} [{self.code}]"


def _layer_violations(assembly: WallAssembly, where: str) -> list[Violation]:
    out = []
    if not assembly.layers:
        out.append(Violation("empty-assembly", where,
                             f"assembly {assembly.name!r} has no layers"))
    for i, layer in enumerate(assembly.layers):
        loc = f"{where}.layers[{i}]"
        if layer.is_massless:
            if layer.resistance is None or not layer.resistance > 0:
                out.append(Violation("non-positive-resistance", loc,
                                     f"massless layer resistance {layer.resistance!r} must be > 0"))
            continue
        m = layer.material
        if layer.thickness is None or not layer.thickness > 0:
            out.append(Violation("non-positive-thickness", loc,
                                 f"thickness {layer.thickness!r} must be > 0"))
        for attr in ("conductivity", "density", "specific_heat"):
            value = getattr(m, attr)
            if not value > 0:
                out.append(Violation(f"non-positive-{attr.replace('_', '-')}", loc,
                                     f"material {m.name!r} {attr} {value!r} must be > 0"))
    return out


def validate_building(b: BuildingDescription) -> list[Violation]:
    """Collect every structural problem in ``b``.

    Violations are returned, not raised; an empty list means the building
    can be simulated. Order follows the input order of zones then surfaces.
    """
    violations: list[Violation] = []
    seen_zones: set[str] = set()
    for i, z in enumerate(b.zones):
        loc = f"zones[{i}]({z.name})"
        if z.name in seen_zones:
            violations.append(Violation("duplicate-zone", loc,
                                        f"zone name {z.name!r} is used more than once"))
        seen_zones.add(z.name)
        if not z.air_volume > 0:
            violations.append(Violation("non-positive-volume", loc,
                                        f"air volume {z.air_volume!r} must be > 0"))
        gains = np.atleast_1d(np.asarray(z.internal_gains, dtype=float))
        if np.any(gains < 0) or not np.all(np.isfinite(gains)):
            violations.append(Violation("negative-gains", loc,
                                        "internal gains must be finite and >= 0"))

    seen_surfaces: set[str] = set()
    faced: set[str] = set()
    shared: dict[tuple[str, str], list[Surface]] = {}
    for i, s in enumerate(b.surfaces):
        loc = f"surfaces[{i}]({s.name})"
        if s.name in seen_surfaces:
            violations.append(Violation("duplicate-surface", loc,
                                        f"surface name {s.name!r} is used more than once"))
        seen_surfaces.add(s.name)
        if s.zone not in seen_zones:
            violations.append(Violation("unknown-zone", loc,
                                        f"inside zone {s.zone!r} is not defined"))
        faced.add(s.zone)
        if not s.area > 0:
            violations.append(Violation("non-positive-area", loc,
                                        f"area {s.area!r} must be > 0"))
        if not 0.0 <= s.tilt <= 180.0:
            violations.append(Violation("tilt-range", loc,
                                        f"tilt {s.tilt!r} outside [0, 180]"))
        if not 0.0 <= s.azimuth < 360.0:
            violations.append(Violation("azimuth-range", loc,
                                        f"azimuth {s.azimuth!r} outside [0, 360)"))
        if not 0.0 <= s.solar_absorptance <= 1.0:
            violations.append(Violation("absorptance-range", loc,
                                        f"solar absorptance {s.solar_absorptance!r} outside [0, 1]"))
        if s.outside not in BOUNDARY_KINDS:
            violations.append(Violation("unknown-boundary", loc,
                                        f"outside boundary {s.outside!r} is not one of {BOUNDARY_KINDS}"))
        elif s.outside == ZONE:
            if s.adjacent_zone is None or s.adjacent_zone not in seen_zones:
                violations.append(Violation("unknown-zone", loc,
                                            f"adjacent zone {s.adjacent_zone!r} is not defined"))
            elif s.adjacent_zone == s.zone:
                violations.append(Violation("self-adjacent", loc,
                                            "a shared wall must separate two distinct zones"))
            else:
                faced.add(s.adjacent_zone)
                shared.setdefault((s.zone, s.adjacent_zone), []).append(s)
        elif s.adjacent_zone is not None:
            violations.append(Violation("stray-adjacent-zone", loc,
                                        f"adjacent zone given for a {s.outside!r} boundary"))
        violations.extend(_layer_violations(s.assembly, f"{loc}.assembly"))

    # a shared wall entered once from each side would be counted twice
    for (a, c), walls in shared.items():
        if a > c:
            continue
        for s in walls:
            for t in shared.get((c, a), []):
                if math.isclose(s.area, t.area) and s.assembly.layers == t.assembly.layers[::-1]:
                    violations.append(Violation(
                        "duplicate-shared-wall", f"surfaces({s.name},{t.name})",
                        f"zones {a!r} and {c!r} share a wall described from both sides"))

    for i, z in enumerate(b.zones):
        if z.name not in faced:
            violations.append(Violation("zone-without-surfaces", f"zones[{i}]({z.name})",
                                        "zone has no bounding surfaces"))
    return violations


def _film(h: float) -> float:
    return 0.0 if math.isinf(h) else 1.0 / h


def u_value(a: WallAssembly, h_in: float = math.inf, h_out: float = math.inf) -> float:
    """Air-to-air thermal transmittance, W/(m2.K).

    Pass ``math.inf`` for a film coefficient to leave that film out.
    """
    if not (h_in > 0 and h_out > 0):
        raise ValueError("film coefficients must be > 0")
    return 1.0 / (_film(h_out) + a.resistance + _film(h_in))


def air_gap_layer(thickness: float) -> Layer:
    """Massless layer standing in for an enclosed air gap.

    Resistance grows linearly with thickness, anchored on an equivalent
    conductance of 9.26 W/(m2.K) for a 10 cm gap.
    """
    if not thickness > 0:
        raise ValueError(f"air gap thickness must be > 0, got {thickness!r}")
    r = thickness / AIR_GAP_REFERENCE_THICKNESS / AIR_GAP_CONDUCTANCE_10CM
    return Layer.resistance_only(r, label=f"air_gap_{thickness:g}m")


def solid_layers(spec: Sequence[tuple[Material, float]]) -> tuple[Layer, ...]:
    """Shorthand: ``[(material, thickness), ...]`` to layers."""
    return tuple(Layer.solid(m, t) for m, t in spec)
