"""TOML building description files.

Layout::

    name = "test_cell"                  # optional

    [materials.my_board]                # optional; extends the default library
    conductivity = 0.2
    density = 800
    specific_heat = 1200

    [assemblies.cell_wall]
    layers = [
        { material = "fibre_cement", thickness = 0.007 },
        { material = "polyurethane", thickness = 0.06 },
        { resistance = 0.15 },           # massless layer, m2.K/W
        { air_gap = 0.10 },              # enclosed air gap, thickness in m
    ]

    [zones.cell]
    air_volume = 22.5
    internal_gains = 0.0                # W, or a list with one value per weather record

    [[surfaces]]
    name = "north_wall"
    assembly = "cell_wall"
    zone = "cell"
    area = 7.5
    azimuth = 0.0
    tilt = 90.0
    outside = "exterior"                # "adiabatic" | "ground" | "zone:<name>"
    solar_absorptance = 0.6
    ground_temperature = 24.0           # only for outside = "ground"

Layers are listed outside face first. Unknown keys anywhere are an error.
"""
from __future__ import annotations

import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .building import (ZONE, BOUNDARY_KINDS, BuildingDescription, Layer, Material,
                       Surface, WallAssembly, Zone, air_gap_layer)
from .materials import MATERIALS


class BuildingFileError(ValueError):
    """Malformed building description."""


_TOP_KEYS = {"name", "materials", "assemblies", "zones", "surfaces"}
_MATERIAL_KEYS = {"conductivity", "density", "specific_heat"}
_ZONE_KEYS = {"air_volume", "internal_gains"}
_SURFACE_KEYS = {"name", "assembly", "zone", "area", "azimuth", "tilt", "outside",
                 "solar_absorptance", "ground_temperature"}
_SURFACE_REQUIRED = {"name", "assembly", "zone", "area"}


def _check_keys(table: dict, allowed: set, where: str, required: set = frozenset()):
    if not isinstance(table, dict):
        raise BuildingFileError(f"{where}: expected a table")
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise BuildingFileError(f"{where}: unknown key(s) {unknown}")
    missing = sorted(required - set(table))
    if missing:
        raise BuildingFileError(f"{where}: missing key(s) {missing}")


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise BuildingFileError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _parse_layer(entry, materials: dict[str, Material], where: str) -> Layer:
    if not isinstance(entry, dict):
        raise BuildingFileError(f"{where}: expected an inline table")
    keys = set(entry)
    if keys == {"material", "thickness"}:
        name = entry["material"]
        if name not in materials:
            raise BuildingFileError(f"{where}: unknown material {name!r}")
        return Layer.solid(materials[name], _number(entry["thickness"], f"{where}.thickness"))
    if keys == {"resistance"}:
        return Layer.resistance_only(_number(entry["resistance"], f"{where}.resistance"))
    if keys == {"air_gap"}:
        thickness = _number(entry["air_gap"], f"{where}.air_gap")
        try:
            return air_gap_layer(thickness)
        except ValueError as exc:
            raise BuildingFileError(f"{where}: {exc}") from None
    raise BuildingFileError(
        f"{where}: a layer is {{material, thickness}}, {{resistance}} or {{air_gap}}; got keys {sorted(keys)}")


def parse_building(data: dict) -> BuildingDescription:
    """Build a :class:`BuildingDescription` from an already-decoded TOML document."""
    _check_keys(data, _TOP_KEYS, "<root>")

    materials = dict(MATERIALS)
    for name, props in data.get("materials", {}).items():
        where = f"materials.{name}"
        _check_keys(props, _MATERIAL_KEYS, where, _MATERIAL_KEYS)
        materials[name] = Material(name, *(_number(props[k], f"{where}.{k}")
                                           for k in ("conductivity", "density", "specific_heat")))

    assemblies = {}
    for name, body in data.get("assemblies", {}).items():
        where = f"assemblies.{name}"
        _check_keys(body, {"layers"}, where, {"layers"})
        if not isinstance(body["layers"], list):
            raise BuildingFileError(f"{where}.layers: expected a list")
        layers = [_parse_layer(e, materials, f"{where}.layers[{i}]")
                  for i, e in enumerate(body["layers"])]
        assemblies[name] = WallAssembly(name, tuple(layers))

    zones = []
    for name, body in data.get("zones", {}).items():
        where = f"zones.{name}"
        _check_keys(body, _ZONE_KEYS, where, {"air_volume"})
        gains = body.get("internal_gains", 0.0)
        if isinstance(gains, list):
            gains = tuple(_number(g, f"{where}.internal_gains") for g in gains)
        else:
            gains = _number(gains, f"{where}.internal_gains")
        zones.append(Zone(name, _number(body["air_volume"], f"{where}.air_volume"), gains))

    surfaces = []
    for i, body in enumerate(data.get("surfaces", [])):
        where = f"surfaces[{i}]"
        _check_keys(body, _SURFACE_KEYS, where, _SURFACE_REQUIRED)
        if body["assembly"] not in assemblies:
            raise BuildingFileError(f"{where}: unknown assembly {body['assembly']!r}")
        outside = body.get("outside", "exterior")
        adjacent = None
        if isinstance(outside, str) and outside.startswith(ZONE + ":"):
            outside, adjacent = ZONE, outside.split(":", 1)[1]
        if outside not in BOUNDARY_KINDS or (outside == ZONE and not adjacent):
            raise BuildingFileError(
                f"{where}.outside: expected exterior, adiabatic, ground or zone:<name>, got {body.get('outside')!r}")
        ground = body.get("ground_temperature")
        surfaces.append(Surface(
            name=str(body["name"]),
            assembly=assemblies[body["assembly"]],
            zone=str(body["zone"]),
            area=_number(body["area"], f"{where}.area"),
            azimuth=_number(body.get("azimuth", 0.0), f"{where}.azimuth"),
            tilt=_number(body.get("tilt", 90.0), f"{where}.tilt"),
            outside=outside,
            adjacent_zone=adjacent,
            ground_temperature=None if ground is None else _number(ground, f"{where}.ground_temperature"),
            solar_absorptance=_number(body.get("solar_absorptance", 0.6), f"{where}.solar_absorptance"),
        ))
    return BuildingDescription(tuple(zones), tuple(surfaces), name=str(data.get("name", "building")))


def loads_building(text: str) -> BuildingDescription:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise BuildingFileError(str(exc)) from None
    return parse_building(data)


def load_building(path: str | os.PathLike) -> BuildingDescription:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise BuildingFileError(f"{path}: {exc}") from None
    try:
        return parse_building(data)
    except BuildingFileError as exc:
        raise BuildingFileError(f"{path}: {exc}") from None


def bundled_building(name: str) -> BuildingDescription:
    """Load one of the buildings shipped with the package: ``"test_cell"`` or ``"tropical_house"``."""
    from importlib.resources import files

    resource = files("zonesim").joinpath("data", f"{name}.toml")
    if not resource.is_file():
        raise KeyError(f"no bundled building {name!r}")
    return loads_building(resource.read_text(encoding="utf-8"))
