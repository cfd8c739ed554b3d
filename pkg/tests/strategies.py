"""Hypothesis strategies and small builders shared by the tests."""
import math

import numpy as np
from hypothesis import strategies as st

import zonesim as z

conductivity = st.floats(0.02, 5.0)
density = st.floats(20.0, 3000.0)
specific_heat = st.floats(300.0, 2000.0)


@st.composite
def materials(draw):
    return z.Material(f"m{draw(st.integers(0, 999))}", draw(conductivity), draw(density),
                      draw(specific_heat))


@st.composite
def layers(draw, massless=True):
    if massless and draw(st.booleans()) and draw(st.booleans()):
        return z.Layer.resistance_only(draw(st.floats(0.01, 2.0)))
    return z.Layer.solid(draw(materials()), draw(st.floats(0.005, 0.3)))


@st.composite
def walls(draw, min_layers=1, max_layers=4, massless=True):
    n = draw(st.integers(min_layers, max_layers))
    return z.WallAssembly("w", tuple(draw(layers(massless)) for _ in range(n)))


def random_wall(rng: np.random.Generator, name="wall", heavy=False) -> z.WallAssembly:
    """Seeded wall for corpus tests; ``heavy`` ensures an insulating core with mass."""
    out = []
    for i in range(rng.integers(1, 5)):
        if not heavy and rng.random() < 0.2:
            out.append(z.Layer.resistance_only(rng.uniform(0.05, 1.0)))
            continue
        m = z.Material(f"m{i}", rng.uniform(0.03, 2.5), rng.uniform(200, 2500), rng.uniform(700, 1500))
        out.append(z.Layer.solid(m, rng.uniform(0.01, 0.25)))
    if heavy:
        out.append(z.Layer.solid(z.material("concrete"), rng.uniform(0.08, 0.25)))
    return z.WallAssembly(name, tuple(out))


def box(assembly, *, outside="exterior", volume=30.0, area=10.0, gains=0.0, zone="room"):
    """One zone enclosed by six identical surfaces."""
    tilts = [90, 90, 90, 90, 0, 180]
    azimuths = [0, 90, 180, 270, 0, 0]
    surfaces = [z.Surface(f"s{i}", assembly, zone, area, az, tilt, outside)
                for i, (az, tilt) in enumerate(zip(azimuths, tilts))]
    return z.BuildingDescription((z.Zone(zone, volume, gains),), tuple(surfaces), name="box")


CELL_WALL = z.WallAssembly("cell_wall", (
    z.Layer.solid(z.material("fibre_cement"), 0.007),
    z.Layer.solid(z.material("polyurethane"), 0.06),
    z.Layer.solid(z.material("fibre_cement"), 0.007),
))
CONCRETE_WALL = z.WallAssembly("concrete_0.2", (z.Layer.solid(z.material("concrete"), 0.2),))


def periodic_response(a, period=86400.0, h_in=math.inf, h_out=math.inf):
    """Exact complex inner-face flux per unit outer temperature amplitude.

    Transfer-matrix solution of periodic conduction through the wall with
    the inner boundary held at zero.
    """
    omega = 2 * math.pi / period
    m = np.eye(2, dtype=complex)

    def resistance(r):
        return np.array([[1, r], [0, 1]], dtype=complex)

    if not math.isinf(h_out):
        m = m @ resistance(1 / h_out)
    for layer in a.layers:
        if layer.is_massless:
            m = m @ resistance(layer.resistance)
            continue
        mat = layer.material
        k = np.sqrt(1j * omega / mat.diffusivity)
        kl = k * layer.thickness
        m = m @ np.array([[np.cosh(kl), np.sinh(kl) / (mat.conductivity * k)],
                          [mat.conductivity * k * np.sinh(kl), np.cosh(kl)]])
    if not math.isinf(h_in):
        m = m @ resistance(1 / h_in)
    # [T_o, q_o] = M [T_i, q_i] with T_i = 0
    return 1.0 / m[0, 1]
