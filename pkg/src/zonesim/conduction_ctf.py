"""Conduction transfer functions (CTF) for layered walls.

The wall is first discretised finely (see :mod:`zonesim.conduction_fd`)
and the RC state-space model is split into its decay modes. Each mode is
sampled exactly with a first-order (triangle) hold at the CTF time base,
which keeps the heat stored by fast surface modes within a step. The
sampled model is then balanced and reduced to at most five states by
residualisation, so steady-state gains are preserved. The common
denominator gives the flux-history coefficients and the numerators the
temperature coefficients. With ``T_o``/``T_i`` the
boundary temperatures and ``q_o``/``q_i`` the fluxes entering the outer
face and leaving the inner face::

    q_o[t] = sum_j X[j] T_o[t-j] - sum_j Y[j] T_i[t-j] + sum_k F[k] q_o[t-k]
    q_i[t] = sum_j Y[j] T_o[t-j] - sum_j Z[j] T_i[t-j] + sum_k F[k] q_i[t-k]

with ``j = 0..r`` and ``k = 1..r``. In steady state
``sum(X) / (1 - sum(F)) = sum(Y) / (1 - sum(F)) = sum(Z) / (1 - sum(F)) = U``.

Walls whose slowest time constant is short compared to the time base
cannot be represented this way; :func:`compute_ctf` reports them as
:class:`LowMassFailure` and :func:`massless_fallback` gives the pure
steady-conduction replacement.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy.signal import ss2tf

from .building import WallAssembly, u_value
from .conduction_fd import discretize, dominant_time_constant, state_space

MAX_ORDER = 5
LOW_MASS_FRACTION = 0.1
STEADY_TOLERANCE = 1e-4
FINE_SLAB = 0.005  # m, target slab thickness of the internal reference model


@dataclass(frozen=True)
class CtfCoefficients:
    """Transfer-function coefficients of one wall, per m2.

    ``exterior``, ``cross`` and ``interior`` have ``order + 1`` terms and
    ``flux`` has ``order`` terms; ``time_base`` is in seconds.
    """

    exterior: tuple[float, ...]
    cross: tuple[float, ...]
    interior: tuple[float, ...]
    flux: tuple[float, ...]
    time_base: float

    def __post_init__(self):
        for name in ("exterior", "cross", "interior", "flux"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        r = len(self.flux)
        if not len(self.exterior) == len(self.cross) == len(self.interior) == r + 1:
            raise ValueError("temperature coefficient lists must be one longer than flux list")

    @property
    def order(self) -> int:
        return len(self.flux)

    @cached_property
    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(X, Y, Z, F) as read-only arrays."""
        out = tuple(np.array(getattr(self, k)) for k in ("exterior", "cross", "interior", "flux"))
        for a in out:
            a.flags.writeable = False
        return out

    def steady_conductances(self) -> tuple[float, float, float]:
        """Steady-state gains implied by the exterior, cross and interior terms."""
        den = 1.0 - sum(self.flux)
        return sum(self.exterior) / den, sum(self.cross) / den, sum(self.interior) / den

    @property
    def u_value(self) -> float:
        return self.steady_conductances()[1]

    def flux_roots(self) -> np.ndarray:
        """Characteristic roots of the flux-history recursion."""
        if not self.flux:
            return np.array([])
        return np.roots(np.r_[1.0, -np.asarray(self.flux)])

    def rows(self) -> list[tuple[str, int, float]]:
        out = []
        for label in ("exterior", "cross", "interior"):
            out += [(label, j, v) for j, v in enumerate(getattr(self, label))]
        out += [("flux", k + 1, v) for k, v in enumerate(self.flux)]
        return out


@dataclass(frozen=True)
class LowMassFailure:
    """Transfer-function generation refused for this wall."""

    wall: str
    time_constant: float  # s
    threshold: float  # s
    reason: str

    def __str__(self):
        return (f"wall {self.wall!r}: no CTF ({self.reason}; dominant time constant "
                f"{self.time_constant:.3g} s, threshold {self.threshold:.3g} s)")


class LowMassWallError(RuntimeError):
    """Raised when strict CTF mode meets a wall without valid coefficients."""

    def __init__(self, failure: LowMassFailure, surface: str | None = None):
        self.failure = failure
        self.surface = surface
        where = f"surface {surface!r}, " if surface else ""
        super().__init__(where + str(failure))


def _fine_nodes(a: WallAssembly) -> list[int]:
    return [int(min(40, max(6, math.ceil(layer.thickness / FINE_SLAB))))
            for layer in a.layers if not layer.is_massless]


def _modes(net):
    """Eigen-decomposition of the RC model in symmetric coordinates.

    Returns decay rates (negative, slowest first), input couplings
    ``beta`` (modes x 2) and output couplings ``gamma`` (2 x modes) for
    inputs [T_out, T_in] and outputs [q_out, q_in], plus the direct term.
    """
    a, b, c, d = state_space(net)
    root = np.sqrt(net.capacitances)
    a_s = (root[:, None] * a) / root[None, :]
    lam, vecs = np.linalg.eigh(0.5 * (a_s + a_s.T))
    order = np.argsort(lam)[::-1]
    lam, vecs = lam[order], vecs[:, order]
    beta = vecs.T @ (root[:, None] * b)
    gamma = (c / root[None, :]) @ vecs
    return lam, beta, gamma, d


def _foh_terms(lam, dt):
    """Triangle-hold sampling of 1/(s - lam): (a0 + a1 z^-1) / (1 - p z^-1)."""
    p = np.exp(lam * dt)
    a0 = -1.0 / lam + (p - 1.0) / (lam * lam * dt)
    a1 = p / lam - (p - 1.0) / (lam * lam * dt)
    return a0, a1, p


def _sampled_system(lam, beta, gamma, d, dt):
    """Exact triangle-hold discretisation in modal coordinates.

    ``x[n+1] = P x[n] + B u[n]``, ``y[n] = C x[n] + D u[n]`` with ``P``
    diagonal. Fast modes keep their within-step storage in ``D``.
    """
    a0, a1, p = _foh_terms(lam, dt)
    return p, beta, gamma * (a1 + p * a0)[None, :], d + (gamma * a0[None, :]) @ beta


def _psd_factor(w: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (w + w.T))
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _balanced_residualization(p, b, c, d, order):
    """Reduce a diagonal discrete system to ``order`` states.

    Square-root balancing, then singular-perturbation elimination of the
    weak states, which keeps the steady-state gain of every path.
    """
    den = 1.0 - np.outer(p, p)
    lc = _psd_factor((b @ b.T) / den)  # Gramians of a diagonal system in closed form
    lo = _psd_factor((c.T @ c) / den)
    u, sv, vt = np.linalg.svd(lo.T @ lc)
    n = int(np.sum(sv > 1e-13 * sv[0]))
    r = min(order, n)
    t = lc @ vt[:n].T / np.sqrt(sv[:n])
    ti = (u[:, :n] / np.sqrt(sv[:n])).T @ lo.T
    a_b = ti @ (p[:, None] * t)
    b_b, c_b = ti @ b, c @ t
    if n == r:
        return a_b, b_b, c_b, d
    m = np.linalg.solve(np.eye(n - r) - a_b[r:, r:], np.hstack([a_b[r:, :r], b_b[r:]]))
    a_r = a_b[:r, :r] + a_b[:r, r:] @ m[:, :r]
    b_r = b_b[:r] + a_b[:r, r:] @ m[:, r:]
    c_r = c_b[:, :r] + c_b[:, r:] @ m[:, :r]
    d_r = d + c_b[:, r:] @ m[:, r:]
    return a_r, b_r, c_r, d_r


def _transfer_polynomials(a, b, c, d):
    """Numerators (2 x 2 x r+1) and denominator in powers of z^-1."""
    r = a.shape[0]
    den = np.real(np.poly(np.linalg.eigvals(a)))
    num = np.zeros((2, 2, r + 1))
    for o in range(2):
        for i in range(2):
            nn, _ = ss2tf(a, b[:, i:i + 1], c[o:o + 1], d[o:o + 1, i:i + 1])
            num[o, i] = np.real(nn[0])
    return num, den


def compute_ctf(a: WallAssembly, time_base: float = 3600.0, h_in: float = math.inf,
                h_out: float = math.inf, *, max_order: int = MAX_ORDER,
                low_mass_fraction: float = LOW_MASS_FRACTION,
                tolerance: float = STEADY_TOLERANCE) -> CtfCoefficients | LowMassFailure:
    """Transfer-function coefficients of ``a``, or why they cannot be made.

    Films with finite ``h_in``/``h_out`` are included in the wall so that
    the boundary temperatures are air (or sol-air) temperatures; pass
    ``math.inf`` to work surface to surface.

    A wall is refused when its slowest time constant, computed for the
    bare wall with both faces held at fixed temperature, is below
    ``low_mass_fraction * time_base``, or when the generated recursion
    misses the steady-state identity by more than ``tolerance``.
    ``max_order`` caps the number of flux-history terms.
    """
    if not time_base > 0:
        raise ValueError("time_base must be > 0")
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    threshold = low_mass_fraction * time_base
    if a.is_massless:
        return LowMassFailure(a.name, 0.0, threshold, "wall has no thermal mass")

    fine = _fine_nodes(a)
    tau = dominant_time_constant(discretize(a, nodes_per_layer=fine))
    if tau < threshold:
        return LowMassFailure(a.name, tau, threshold, "time constant below threshold")

    modes = _modes(discretize(a, h_in, h_out, nodes_per_layer=fine))
    reduced = _balanced_residualization(*_sampled_system(*modes, time_base), max_order)
    num, den = _transfer_polynomials(*reduced)
    flux = -den[1:]
    exterior, cross, interior = num[0, 0], num[1, 0], -num[1, 1]

    u = u_value(a, h_in, h_out)
    one_minus = 1.0 - flux.sum()
    gains = np.array([exterior.sum(), cross.sum(), interior.sum()]) / one_minus
    if np.any(np.abs(gains - u) > tolerance * u):
        return LowMassFailure(a.name, tau, threshold,
                              f"steady-state identity off by {np.max(np.abs(gains / u - 1)):.2e}")
    if np.any(np.abs(np.roots(den)) >= 1.0):
        return LowMassFailure(a.name, tau, threshold, "unstable flux recursion")

    # remove the residual rounding so equal boundary temperatures give zero flux exactly
    target = u * one_minus
    exterior = exterior * target / exterior.sum()
    cross = cross * target / cross.sum()
    interior = interior * target / interior.sum()
    return CtfCoefficients(tuple(exterior), tuple(cross), tuple(interior), tuple(flux), time_base)


def massless_fallback(a: WallAssembly, h_in: float = math.inf, h_out: float = math.inf,
                      time_base: float = 3600.0) -> CtfCoefficients:
    """Order-0 coefficients for steady conduction ``q = U (T_o - T_i)``."""
    u = u_value(a, h_in, h_out)
    return CtfCoefficients((u,), (u,), (u,), (), time_base)


def ctf_or_fallback(a: WallAssembly, time_base: float = 3600.0, h_in: float = math.inf,
                    h_out: float = math.inf, **kwargs) -> tuple[CtfCoefficients, LowMassFailure | None]:
    result = compute_ctf(a, time_base, h_in, h_out, **kwargs)
    if isinstance(result, LowMassFailure):
        return massless_fallback(a, h_in, h_out, time_base), result
    return result, None


class CtfStep(NamedTuple):
    q_in: float
    q_out: float


class CtfState:
    """Temperature and flux histories of one wall.

    Temperatures are kept as deviations from ``reference`` (the initial
    inner temperature unless given), so that a wall resting at the
    reference produces exactly zero flux. ``t_out[j]`` and ``t_in[j]``
    hold the boundary temperatures ``j`` steps back (index 0 is the latest
    step), ``q_out[k]``/``q_in[k]`` the fluxes ``k + 1`` steps back.
    """

    def __init__(self, coeffs: CtfCoefficients, t_out: float = 0.0, t_in: float = 0.0,
                 reference: float | None = None):
        r = coeffs.order
        self.reference = float(t_in if reference is None else reference)
        self.t_out = np.full(r + 1, float(t_out) - self.reference)
        self.t_in = np.full(r + 1, float(t_in) - self.reference)
        q = coeffs.u_value * (t_out - t_in)
        self.q_out = np.full(r, q)
        self.q_in = np.full(r, q)

    @classmethod
    def steady(cls, coeffs: CtfCoefficients, t_out: float, t_in: float) -> CtfState:
        return cls(coeffs, t_out, t_in)

    def history_terms(self, coeffs: CtfCoefficients) -> tuple[float, float]:
        """Parts of (q_out, q_in) at the next step that depend on past values only."""
        x, y, z, f = coeffs.arrays
        # after shifting, positions 1..r hold steps t-1..t-r
        to, ti = self.t_out[:-1], self.t_in[:-1]
        h_out = x[1:].dot(to) - y[1:].dot(ti) + f.dot(self.q_out)
        h_in = y[1:].dot(to) - z[1:].dot(ti) + f.dot(self.q_in)
        return float(h_out), float(h_in)

    def fluxes(self, coeffs: CtfCoefficients, t_out: float, t_in: float,
               history: tuple[float, float] | None = None) -> tuple[float, float]:
        """(q_out, q_in) for current surface temperatures ``t_out``, ``t_in``."""
        h_out, h_in = self.history_terms(coeffs) if history is None else history
        d_out, d_in = t_out - self.reference, t_in - self.reference
        q_out = coeffs.exterior[0] * d_out - coeffs.cross[0] * d_in + h_out
        q_in = coeffs.cross[0] * d_out - coeffs.interior[0] * d_in + h_in
        return q_out, q_in

    def push(self, t_out: float, t_in: float, q_out: float, q_in: float) -> None:
        self.t_out[1:] = self.t_out[:-1]
        self.t_in[1:] = self.t_in[:-1]
        self.t_out[0], self.t_in[0] = t_out - self.reference, t_in - self.reference
        if self.q_out.size:
            self.q_out[1:] = self.q_out[:-1]
            self.q_in[1:] = self.q_in[:-1]
            self.q_out[0], self.q_in[0] = q_out, q_in


def ctf_step(coeffs: CtfCoefficients, state: CtfState, T_out_surface: float,
             T_in_surface: float) -> CtfStep:
    """Advance the recursion one time base; ``state`` is updated in place."""
    q_out, q_in = state.fluxes(coeffs, T_out_surface, T_in_surface)
    state.push(T_out_surface, T_in_surface, q_out, q_in)
    return CtfStep(q_in, q_out)


def write_ctf_csv(coeffs: CtfCoefficients, path: str | os.PathLike, wall: str = "") -> None:
    """One labelled row per coefficient."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["wall", "kind", "index", "value", "time_base_s"])
        for kind, idx, value in coeffs.rows():
            out.writerow([wall, kind, idx, repr(value), coeffs.time_base])
