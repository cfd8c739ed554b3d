"""
Wall transfer functions
=======================

Two walls from the test cell and the house: a light sandwich panel and a
20 cm concrete slab. We derive their conduction transfer functions, look at
the coefficients, and check them against the exact periodic solution of the
heat equation and against a fine finite-difference model.
"""
import math

import numpy as np

import zonesim as z
from zonesim.conduction_fd import FdConfig, discretize

panel = z.WallAssembly("panel", (
    z.Layer.solid(z.material("fibre_cement"), 0.007),
    z.Layer.solid(z.material("polyurethane"), 0.06),
    z.Layer.solid(z.material("fibre_cement"), 0.007),
))
slab = z.WallAssembly("slab", (z.Layer.solid(z.material("concrete"), 0.20),))

# The exterior film is part of the element, the interior surface is a
# boundary of its own (the zone solver supplies the inner film).
H_IN, H_OUT = math.inf, 18.0

###############################################################################
# Coefficients
# ------------
# X, Y and Z weight current and past surface temperatures, F weights past
# fluxes. Their sums reproduce the steady U-value.
for wall in (panel, slab):
    c = z.compute_ctf(wall, 3600.0, H_IN, H_OUT)
    print(f"{wall.name}: order {c.order}, U = {c.u_value:.4f} W/(m2.K)")
    for kind, values in (("X", c.exterior), ("Y", c.cross), ("Z", c.interior), ("F", c.flux)):
        print(f"  {kind}: " + " ".join(f"{v: .5g}" for v in values))
    print(f"  sum(Y) / (1 - sum(F)) = {sum(c.cross) / (1 - sum(c.flux)):.6f}")

###############################################################################
# Daily sine on the outside
# -------------------------
# Drive the outer air with a 24 h sine and hold the inner surface at 0 degC.
# After a few periods the inner flux settles to a sine whose amplitude and
# lag are compared with the finite-difference wall at 5 mm resolution.
hours = np.arange(24 * 20)
t_out = 10.0 * np.sin(2 * np.pi * hours / 24)

for wall in (panel, slab):
    c = z.compute_ctf(wall, 3600.0, H_IN, H_OUT)
    state = z.CtfState(c)
    q_ctf = np.array([z.ctf_step(c, state, t, 0.0).q_in for t in t_out])

    fine = [max(2, int(round(l.thickness / 0.005))) for l in wall.layers if not l.is_massless]
    net = discretize(wall, H_IN, H_OUT, FdConfig(time_step=60.0), nodes_per_layer=fine)
    minutes = np.arange(len(hours) * 60)
    t_fine = 10.0 * np.sin(2 * np.pi * minutes / (24 * 60))
    q_fd = np.array([net.step(t, 0.0, 60.0).q_in for t in t_fine])[59::60]

    last = slice(-24 * 5, None)
    amp = {k: np.ptp(q[last]) / 2 for k, q in (("ctf", q_ctf), ("fd", q_fd))}
    lag = {k: (np.argmax(q[last][:24]) + 6) % 24 for k, q in (("ctf", q_ctf), ("fd", q_fd))}
    print(f"{wall.name}: inner flux amplitude CTF {amp['ctf']:.3f}, FD {amp['fd']:.3f} W/m2; "
          f"peak {lag['ctf']} h / {lag['fd']} h after the outdoor peak")

###############################################################################
# Low-mass walls
# --------------
# A thin steel sheet stores almost nothing over an hour; no transfer
# function is produced and the simulation falls back to steady conduction.
sheet = z.WallAssembly("sheet", (z.Layer.solid(z.material("steel"), 0.0005),))
print(z.compute_ctf(sheet, 3600.0, H_IN, H_OUT))
