"""
Where does a model error come from?
===================================

A "measured" test cell is produced by simulating a cell whose insulation
conducts a third better than the model assumes. The residual between
measurement and model is then taken apart: statistics, power spectrum,
squared coherency with the weather, and a per-band split of its variance
among outdoor temperature, direct and diffuse solar radiation.
"""
from dataclasses import replace

import numpy as np

import zonesim as z

model = z.bundled_building("test_cell")


def with_conductivity(b, material, k):
    def layer(l):
        if l.material is not None and l.material.name == material:
            return replace(l, material=replace(l.material, conductivity=k))
        return l
    return replace(b, surfaces=tuple(
        replace(s, assembly=replace(s.assembly, layers=tuple(map(layer, s.assembly.layers))))
        for s in b.surfaces))


weather = z.synthetic_weather(120, random=True, seed=7)
measured = z.simulate(with_conductivity(model, "polyurethane", 0.04), weather)[0].values
simulated = z.simulate(model, weather)[0].values
residual = measured - simulated
stats = z.residual_stats(measured, simulated)
print(f"residual: mean {stats.mean:+.3f} C, std {stats.std:.3f} C over {stats.count} hours")

k = len(weather) - residual.size
excitations = {
    "outdoor_temperature": weather.dry_bulb[k:],
    "direct_solar": weather.direct_horizontal[k:],
    "diffuse_solar": weather.diffuse_horizontal[k:],
}

###############################################################################
# Spectrum
# --------
# Eight-day Hann segments with half overlap. Most of the power sits at the
# daily cycle.
est = z.psd(residual)
fractions = z.band_power_fraction(est)
print(f"peak at {est.peak_frequency():.4f} 1/h")
for label, f in zip(z.DEFAULT_BANDS.labels(), fractions):
    print(f"  band {label:>10} 1/h: {100 * f:5.1f} % of the power")

###############################################################################
# Ranking and decomposition
# -------------------------
# Excitations are ranked by the residual power their coherency explains,
# then each band's variance is split sequentially: every excitation only
# gets credit for what the earlier ones did not already explain.
order = z.rank_excitations(residual, excitations)
print("ranking:", " > ".join(order))
dec = z.decompose_variance(residual, [(name, excitations[name]) for name in order])
for b, label in enumerate(dec.bands.labels()):
    shares = ", ".join(f"{n} {100 * f:4.1f}%" for n, f in zip(dec.excitations, dec.fractions()[b]))
    print(f"  {label:>10}: total {dec.total[b]:.2e} C2 | {shares} | "
          f"unexplained {100 * dec.unexplained[b] / dec.total[b]:4.1f}%")

###############################################################################
# Sky temperature carries no extra information
# --------------------------------------------
# With the sky modelled as the air temperature minus a constant, its
# coherency with the residual is the air temperature's, bit for bit.
ta = excitations["outdoor_temperature"]
same = np.array_equal(z.coherency(residual, ta).gamma_squared,
                      z.coherency(residual, z.sky_temperature(ta)).gamma_squared)
print("coherency with sky temperature identical to outdoor temperature:", same)

try:
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    ax[0].semilogy(est.frequencies, est.power)
    ax[0].set_ylabel("PSD, C2.h")
    for name, x in excitations.items():
        ax[1].plot(est.frequencies, z.coherency(residual, x).gamma_squared, label=name)
    ax[1].set_ylabel("squared coherency")
    ax[1].set_xlabel("frequency, 1/h")
    ax[1].legend()
    fig.tight_layout()
    fig.savefig("residual_analysis.png", dpi=120)
    print("wrote residual_analysis.png")
