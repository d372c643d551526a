"""Qubit coherence fits, design parameters, and a loss budget.

Walks the full chain for one device: decay-curve fits (T1, Ramsey, echo),
transmon frequencies straight from the wafer calibration and drawn
geometry, then a junction/other loss split across a frequency-targeted
device family, and finally the quasiparticle ceiling vs temperature.
"""

import numpy as np

from jjlab.fitkit import Trace
from jjlab.junction import JunctionGeometry, WaferCalibration, ab_icrn
from jjlab.physics import delta0_from_tc
from jjlab.qubit import (
    CoherenceRecord,
    fit_echo,
    fit_ramsey,
    fit_t1,
    loss_budget_fit,
    loss_budget_model,
    quasiparticle_q,
    transmon_from_design,
)

rng = np.random.default_rng(11)

f_q = 4.1e9
t1, t2s, t2e = 62.4e-6, 30e-6, 80e-6

# --- decay fits ------------------------------------------------------------
delays = np.linspace(0.0, 3.0 * t1, 60)
pop = 0.92 * np.exp(-delays / t1) + 0.04
r_t1 = fit_t1(Trace(x=delays, y=pop + 0.01 * rng.standard_normal(60), x_unit="s"))

dr = np.linspace(0.0, 80e-6, 201)
ram = 0.45 * np.exp(-dr / t2s) * np.cos(2 * np.pi * 0.25e6 * dr + 0.3) + 0.5
r_ram = fit_ramsey(Trace(x=dr, y=ram + 0.01 * rng.standard_normal(201), x_unit="s"))

de = np.linspace(0.0, 3.0 * t2e, 60)
echo = 0.46 * np.exp(-de / t2e) + 0.5
r_echo = fit_echo(Trace(x=de, y=echo + 0.01 * rng.standard_normal(60), x_unit="s"))

print("T1      = %.2f us   (set %.2f)" % (r_t1.value("t1") * 1e6, t1 * 1e6))
print("T2*     = %.2f us   (set %.2f), detuning %.0f kHz"
      % (r_ram.value("t2_star") * 1e6, t2s * 1e6, r_ram.value("detuning") / 1e3))
print("T2 echo = %.2f us   (set %.2f)" % (r_echo.value("t2_echo") * 1e6, t2e * 1e6))

record = CoherenceRecord.from_times(f_q, r_t1.value("t1"),
                                    t2_star=r_ram.value("t2_star"),
                                    t2_echo=r_echo.value("t2_echo"))
print("Q1      = %.3g" % record.q1)

# --- design route ----------------------------------------------------------
tc = 9.2
rho_s = 4.94e-9
icrn = ab_icrn(delta0_from_tc(tc), 0.0)
cal = WaferCalibration(
    specific_resistance=rho_s,
    dimension_bias=0.16e-6,
    icrn_product=icrn,
    jc=icrn / rho_s,
    tc=tc,
)
design = transmon_from_design(
    c_sigma=80e-15,
    geometry=JunctionGeometry(design_width=0.5e-6, design_height=0.5e-6),
    calibration=cal,
)
print("f01     = %.3f GHz, anharmonicity %.0f MHz, p_j = %.4f"
      % (design.f01 / 1e9, design.anharmonicity / 1e6, design.participation_pj))
print("flags:", design.flags)

# --- loss budget over a device family --------------------------------------
q_junction, q_other = 1.0e5, 5.0e5
p_j = np.linspace(0.02, 0.30, 9)
q1 = loss_budget_model(p_j, q_junction, q_other)
q1 = q1 * (1.0 + 0.02 * rng.standard_normal(p_j.size))
budget = loss_budget_fit(np.column_stack([p_j, q1]))
print("budget: Q_junction = %.3g (set %.3g), Q_other = %.3g (set %.3g)"
      % (budget.value("q_junction"), q_junction,
         budget.value("q_other"), q_other))

# --- quasiparticle ceiling --------------------------------------------------
delta_al = delta0_from_tc(1.2)
for t in (0.02, 0.10, 0.15, 0.20, 0.25):
    print("  T = %5.0f mK: quasiparticle-limited Q1 = %.3g"
          % (t * 1e3, quasiparticle_q(f_q, t, delta_al)))
