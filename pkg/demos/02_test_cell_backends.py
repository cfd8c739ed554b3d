"""
Two conduction backends on one test cell
========================================

The bundled test cell is simulated with finite-difference walls and with
transfer-function walls under the same synthetic weather. The gap between
the two runs is the numerical part of any model-versus-measurement
residual.
"""
import numpy as np

import zonesim as z

cell = z.bundled_building("test_cell")
weather = z.synthetic_weather(35, random=True, seed=3)

results = {}
for backend in ("fd", "ctf"):
    results[backend] = z.run(cell, weather, z.SimulationConfig(backend=backend))
    res = results[backend]
    print(f"{backend}: {len(res.zones[0])} hours after warm-up, "
          f"max energy residual {res.energy_residual.max():.1e}, fallbacks {list(res.fallbacks)}")

fd = results["fd"].zones[0].values
ctf = results["ctf"].zones[0].values
stats = z.residual_stats(fd, ctf)
print(f"fd - ctf: mean {stats.mean:+.4f} C, std {stats.std:.4f} C")

###############################################################################
# Against a converged reference
# -----------------------------
# A one-minute step with ten nodes per layer stands in for the exact
# solution. The two hourly runs are much closer to each other than to it:
# they share the error of sampling the coupled zone balance once an hour,
# which shrinks as the step gets shorter.
reference = z.simulate(cell, weather, z.SimulationConfig(time_step=60.0, nodes_per_solid_layer=10))[0].values
for backend, step, nodes in (("fd", 3600.0, 3), ("ctf", 3600.0, 3), ("fd", 300.0, 10), ("ctf", 300.0, 3)):
    cfg = z.SimulationConfig(backend=backend, time_step=step, nodes_per_solid_layer=nodes)
    values = z.simulate(cell, weather, cfg)[0].values
    print(f"{backend:>3} dt={step:>6.0f}s: std vs reference {np.std(values - reference, ddof=1):.4f} C")

###############################################################################
# Plot
# ----
try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    stamps = results["fd"].zones[0].timestamps
    fig, ax = plt.subplots(2, 1, sharex=True, figsize=(9, 5))
    ax[0].plot(stamps, fd, label="finite difference")
    ax[0].plot(stamps, ctf, label="transfer function", lw=0.8)
    ax[0].set_ylabel("zone air, degC")
    ax[0].legend()
    ax[1].plot(stamps, fd - ctf, color="k", lw=0.8)
    ax[1].set_ylabel("fd - ctf, K")
    fig.tight_layout()
    fig.savefig("test_cell_backends.png", dpi=120)
    print("wrote test_cell_backends.png")
