"""Default material properties.

Textbook values for the constructions used in the bundled test cell and
tropical house. Conductivity in W/(m.K), density in kg/m3, specific heat
in J/(kg.K). Sources:

* CIBSE Guide A (2015), Table 3.47, "Thermal properties of building
  materials" -- fibre cement, concrete, blockwork, renders, fibreboard,
  timber.
* ASHRAE Handbook Fundamentals (2017), ch. 26, Table 1 -- rigid
  polyurethane foam, metals.

These are typical mid-range values. The layers of a real building are
rarely known this well; override them in the building file when
measured values exist.
"""
from __future__ import annotations

from .building import Material

MATERIALS: dict[str, Material] = {
    m.name: m
    for m in [
        Material("fibre_cement", 0.35, 1400.0, 1000.0),
        Material("polyurethane", 0.03, 35.0, 1400.0),
        Material("concrete", 1.75, 2300.0, 880.0),
        Material("concrete_paving", 1.40, 2100.0, 840.0),
        Material("breeze_block", 0.65, 1200.0, 840.0),
        Material("cement_render", 0.72, 1860.0, 840.0),
        Material("wood_fibreboard", 0.06, 300.0, 1300.0),
        Material("softwood", 0.13, 500.0, 1600.0),
        Material("steel", 50.0, 7800.0, 450.0),
        Material("aluminium", 160.0, 2800.0, 880.0),
        Material("plasterboard", 0.16, 950.0, 840.0),
    ]
}


def material(name: str) -> Material:
    try:
        return MATERIALS[name]
    except KeyError:
        raise KeyError(f"unknown material {name!r}; known: {sorted(MATERIALS)}") from None
