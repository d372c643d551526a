"""Film characterization from a cooldown R(T) trace.

Synthesizes a niobium-like resistance curve with a sharp transition at 9.2 K
and a linear phonon slope above it, then runs the standard analysis.
"""

import numpy as np

from jjlab.film import FilmGeometry, RtTrace, analyze_film

tc = 9.2
width = 0.05
r300 = 12.0
rrr = 5.0

# dense sampling through the transition, coarse elsewhere
temperature = np.concatenate([
    np.linspace(1.5, 7.9, 40),
    np.linspace(8.0, 10.5, 500),
    np.linspace(10.6, 295.0, 250),
])
residual = r300 / rrr
phonon = (r300 - residual) * temperature / 295.0
resistance = (residual + phonon) / (1.0 + np.exp(-(temperature - tc) / (width / 4.0)))

rng = np.random.default_rng(0)
resistance = resistance + 2e-3 * rng.standard_normal(temperature.size)

geometry = FilmGeometry(length=1.0e-3, width=40e-6, thickness=100e-9)
trace = RtTrace(temperature=temperature, resistance=resistance, geometry=geometry)
result = analyze_film(trace)

print("Tc              = %.4f K" % result.tc)
print("width           = %.4f K" % result.tc_width)
print("RRR             = %.2f" % result.rrr)
print("rho0            = %.3e ohm m" % result.rho0)
print("R_sheet         = %.3f ohm/sq" % result.sheet_resistance)
print("L_kinetic       = %.3f pH/sq" % (result.kinetic_inductance * 1e12))
print("lambda_L        = %.1f nm" % (result.london_depth * 1e9))
print("Tc suppression  = %+.3f K below bulk" % result.delta_tc_from_bulk)

# the reported Tc should land near the midpoint of the resistive step
i = np.argmin(np.abs(temperature - result.tc))
step = residual + (r300 - residual) * result.tc / 295.0
print("R at reported Tc: %.3f ohm (step midpoint is %.3f)"
      % (resistance[i], step / 2.0))
