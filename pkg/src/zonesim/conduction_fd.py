"""Lumped-capacity finite-difference model of 1D conduction through a wall.

Each solid layer is cut into equal slabs. A slab's heat capacity sits at
its centre node; neighbouring nodes are joined by the series resistance
of the two half-slabs between them, plus any massless layers and surface
films in the way. Massless layers therefore never create nodes, which
keeps the system free of zero-capacity unknowns::

    T_out --g0-- [T1] --g1-- [T2] -- ... -- [Tn] --gn-- T_in

All quantities are per square metre of wall. Heat fluxes are counted
positive in the outside-to-inside direction: ``q_out`` enters the wall at
its outer face, ``q_in`` leaves it at its inner face, so the stored
energy changes at the rate ``q_out - q_in``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_banded

from .building import WallAssembly


@dataclass(frozen=True)
class FdConfig:
    nodes_per_solid_layer: int = 3
    time_step: float = 3600.0

    def __post_init__(self):
        if self.nodes_per_solid_layer < 1:
            raise ValueError("nodes_per_solid_layer must be >= 1")
        if not self.time_step > 0:
            raise ValueError("time_step must be > 0")


class FdStep(NamedTuple):
    temperatures: np.ndarray
    q_in: float
    q_out: float


@dataclass
class WallNodeNetwork:
    """Capacitances (J/(m2.K)), conductances (W/(m2.K)) and node temperatures (degC).

    ``conductances[k]`` links node ``k-1`` to node ``k``, with the outer and
    inner boundary temperatures playing the roles of nodes ``-1`` and ``n``.
    """

    capacitances: np.ndarray
    conductances: np.ndarray
    temperatures: np.ndarray

    def __post_init__(self):
        self.capacitances = np.asarray(self.capacitances, dtype=float)
        self.conductances = np.asarray(self.conductances, dtype=float)
        self.temperatures = np.array(self.temperatures, dtype=float)
        if self.conductances.size != self.capacitances.size + 1:
            raise ValueError("need exactly one more conductance than nodes")
        if np.any(self.conductances <= 0) or np.any(self.capacitances < 0):
            raise ValueError("conductances must be > 0 and capacitances >= 0")

    @property
    def n_nodes(self) -> int:
        return self.capacitances.size

    @property
    def total_capacitance(self) -> float:
        return float(self.capacitances.sum())

    @property
    def steady_conductance(self) -> float:
        """End-to-end conductance of the chain, W/(m2.K)."""
        return 1.0 / float(np.sum(1.0 / self.conductances))

    def stored_energy(self) -> float:
        """Heat content relative to 0 degC, J/m2."""
        return float(self.capacitances @ self.temperatures)

    def stiffness(self) -> np.ndarray:
        """Dense conductance matrix K of the interior nodes (boundaries grounded)."""
        g = self.conductances
        n = self.n_nodes
        k = np.zeros((n, n))
        idx = np.arange(n)
        k[idx, idx] = g[:-1] + g[1:]
        k[idx[:-1], idx[1:]] = -g[1:-1]
        k[idx[1:], idx[:-1]] = -g[1:-1]
        return k

    def fluxes(self, t_out: float, t_in: float, temperatures=None) -> tuple[float, float]:
        """(q_in, q_out) for the given boundary and node temperatures."""
        temps = self.temperatures if temperatures is None else temperatures
        g = self.conductances
        if self.n_nodes == 0:
            q = g[0] * (t_out - t_in)
            return q, q
        return g[-1] * (temps[-1] - t_in), g[0] * (t_out - temps[0])

    def step(self, t_out: float, t_in: float, dt: float) -> FdStep:
        """Advance one backward-Euler step in place."""
        if not dt > 0:
            raise ValueError("dt must be > 0")
        n = self.n_nodes
        if n == 0:
            q_in, q_out = self.fluxes(t_out, t_in)
            return FdStep(self.temperatures.copy(), q_in, q_out)
        g = self.conductances
        c = self.capacitances / dt
        ab = np.zeros((3, n))
        ab[1] = c + g[:-1] + g[1:]
        ab[0, 1:] = -g[1:-1]
        ab[2, :-1] = -g[1:-1]
        # solve for the increment; the net inflow is built from temperature
        # differences so an equilibrium state is left exactly unchanged
        ext = np.concatenate(([t_out], self.temperatures, [t_in]))
        flow = g * (ext[:-1] - ext[1:])
        self.temperatures = self.temperatures + solve_banded((1, 1), ab, flow[:-1] - flow[1:])
        q_in, q_out = self.fluxes(t_out, t_in)
        return FdStep(self.temperatures.copy(), q_in, q_out)

    def copy(self) -> WallNodeNetwork:
        return WallNodeNetwork(self.capacitances.copy(), self.conductances.copy(),
                               self.temperatures.copy())


def _film(h: float) -> float:
    return 0.0 if math.isinf(h) else 1.0 / h


def discretize(a: WallAssembly, h_in: float = math.inf, h_out: float = math.inf,
               cfg: FdConfig = FdConfig(), initial_temperature: float = 0.0,
               nodes_per_layer: list[int] | None = None) -> WallNodeNetwork:
    """Build the node network of a wall.

    Films are folded into the first and last conductances; pass
    ``math.inf`` to leave a film out (the boundary temperature is then the
    surface temperature itself). ``nodes_per_layer`` overrides
    ``cfg.nodes_per_solid_layer`` per solid layer.
    """
    if not (h_in > 0 and h_out > 0):
        raise ValueError("film coefficients must be > 0")
    caps: list[float] = []
    conds: list[float] = []
    pending = _film(h_out)
    solid_index = 0
    for layer in a.layers:
        if layer.is_massless:
            pending += layer.resistance
            continue
        n = cfg.nodes_per_solid_layer if nodes_per_layer is None else nodes_per_layer[solid_index]
        solid_index += 1
        dx = layer.thickness / n
        half = dx / (2.0 * layer.material.conductivity)
        cap = layer.material.volumetric_heat_capacity * dx
        for _ in range(n):
            conds.append(1.0 / (pending + half))
            caps.append(cap)
            pending = half
    conds.append(1.0 / (pending + _film(h_in)))
    return WallNodeNetwork(np.array(caps), np.array(conds),
                           np.full(len(caps), float(initial_temperature)))


def step_implicit(net: WallNodeNetwork, T_out_boundary: float, T_in_boundary: float,
                  dt: float) -> FdStep:
    """One backward-Euler step of ``net`` (state updated in place)."""
    return net.step(T_out_boundary, T_in_boundary, dt)


def state_space(net: WallNodeNetwork):
    """Continuous-time model of the wall.

    Returns ``(A, B, C, D)`` with state = node temperatures, inputs
    ``[T_out, T_in]`` and outputs ``[q_out, q_in]``.
    """
    n = net.n_nodes
    g = net.conductances
    inv_c = 1.0 / net.capacitances
    a = -inv_c[:, None] * net.stiffness()
    b = np.zeros((n, 2))
    b[0, 0] += g[0] * inv_c[0]
    b[-1, 1] += g[-1] * inv_c[-1]
    c = np.zeros((2, n))
    c[0, 0] = -g[0]
    c[1, -1] = g[-1]
    d = np.array([[g[0], 0.0], [0.0, -g[-1]]])
    return a, b, c, d


def dominant_time_constant(net: WallNodeNetwork) -> float:
    """Slowest decay time (s) of the network with both boundaries held fixed."""
    if net.n_nodes == 0 or net.total_capacitance == 0.0:
        return 0.0
    # symmetric form C^-1/2 K C^-1/2 is tridiagonal
    s = 1.0 / np.sqrt(net.capacitances)
    g = net.conductances
    diag = (g[:-1] + g[1:]) * s * s
    off = -g[1:-1] * s[:-1] * s[1:]
    lam = eigh_tridiagonal(diag, off, eigvals_only=True, select="i", select_range=(0, 0))
    return float(1.0 / lam[0])
