"""One wafer, end to end: synthesize traces, run the pipeline, emit figures.

Everything lands in ./wafer_demo: the input .dat files, the assembled
report.json, and plot-ready tables for two of the standard figures. Rerun
it and the report comes out byte-identical apart from its timestamp.
"""

from pathlib import Path

import numpy as np

from jjlab.io import TraceFile, save_report, save_trace
from jjlab.junction import ab_icrn
from jjlab.physics import delta0_from_tc
from jjlab.pipeline import run_pipeline
from jjlab.plots import emit_plot_data
from jjlab.qubit import loss_budget_model

root = Path("wafer_demo")
root.mkdir(exist_ok=True)
rng = np.random.default_rng(42)

tc = 9.2
rho_s = 4.94e-9
bias = 0.16e-6
icrn = ab_icrn(delta0_from_tc(tc), 0.0)

# film cooldown
t_grid = np.concatenate([np.linspace(1.5, 8.0, 30),
                         np.linspace(8.05, 10.5, 300),
                         np.linspace(10.6, 295.0, 120)])
r = (2.4 + 9.6 * t_grid / 295.0) / (1.0 + np.exp(-(t_grid - tc) / 0.02))
save_trace(TraceFile(kind="rt", header={"label": "witness-strip"},
                     columns={"temperature_k": t_grid, "resistance_ohm": r}),
           root / "film.dat")

# probe-station resistance vs drawn width
w = np.repeat(np.geomspace(0.4e-6, 2.5e-6, 8), 3)
res = rho_s / (w - bias) ** 2 * (1.0 + 0.02 * rng.standard_normal(w.size))
save_trace(TraceFile(kind="areas", header={"process": "PECVD"},
                     columns={"width_m": w, "height_m": w, "resistance_ohm": res}),
           root / "areas.dat")

# cold IV of a 1x1 um test junction
ic = icrn / rho_s * (1.0e-6 - bias) ** 2
i_grid = np.linspace(0.0, 2.0 * ic, 121)
v = np.where(i_grid > ic, (icrn / ic) * i_grid, 0.0)
save_trace(TraceFile(kind="iv", header={"sweep": "up"},
                     columns={"current_a": i_grid, "voltage_v": v}),
           root / "iv.dat")

# readout resonator
f0, qi, qe, phi = 6.0e9, 9.0e5, 2.6e5, 0.1
qt = 1.0 / (1.0 / qi + np.cos(phi) / qe)
f = f0 + np.linspace(-14.0, 14.0, 361) * (f0 / qt) / 2.0
s = 1.0 - (qt / qe) * np.exp(1j * phi) / (1.0 + 2j * qt * (f - f0) / f0)
s = s + 0.003 * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))
save_trace(TraceFile(kind="s21",
                     header={"label": "r1", "power": -95.0, "power_unit": "dbm"},
                     columns={"frequency_hz": f, "re_s21": s.real, "im_s21": s.imag}),
           root / "s21.dat")

# three qubits targeting different junction participations
widths = (0.5e-6, 0.7e-6, 0.9e-6)
c_sigma = 80e-15
inputs = [
    {"path": "film.dat", "kind": "rt"},
    {"path": "areas.dat", "kind": "areas"},
    {"path": "iv.dat", "kind": "iv"},
    {"path": "s21.dat", "kind": "s21"},
]
for k, width in enumerate(widths, start=1):
    p_j = 0.05 * (width - bias) ** 2 / c_sigma
    f_q = 4.1e9
    t1 = loss_budget_model(p_j, 1.0e5, 5.0e5) / (2.0 * np.pi * f_q)
    delay = np.linspace(0.0, 3.0 * t1, 40)
    pop = 0.93 * np.exp(-delay / t1) + 0.03
    pop = pop + 0.005 * rng.standard_normal(delay.size)
    name = f"q{k}_t1.dat"
    save_trace(TraceFile(kind="decay",
                         header={"qubit_id": f"q{k}", "role": "t1", "f_q": f_q,
                                 "c_sigma": c_sigma, "design_width": width,
                                 "design_height": width},
                         columns={"delay_s": delay, "population": pop}),
               root / name)
    inputs.append({"path": name, "kind": "decay"})

config = {"wafer_id": "DEMO1", "base_dir": str(root), "inputs": inputs}
report = run_pipeline(config, workers=4)

print("status:", report.status)
print("film Tc: %.3f K" % report.film[0].result.tc)
cal = report.calibrations[0].result
print("calibration: rho_s=%.3e, bias=%.0f nm, jc=%.3g A/m^2"
      % (cal.specific_resistance, cal.dimension_bias * 1e9, cal.jc))
print("resonator: f0=%.4f GHz, Qi=%.3g" %
      (report.resonators[0].result.f0 / 1e9, report.resonators[0].result.q_internal))
for row in report.qubits:
    q = row.result
    print("qubit %s: T1=%.1f us, p_j=%.4f" %
          (Path(row.source).stem, q.coherence.t1 * 1e6, q.transmon.participation_pj))

save_report(report, root / "report.json")
print("wrote", root / "report.json")

for figure in ("q1_vs_pj", "q1_vs_frequency"):
    written = emit_plot_data(report, figure, root / "figures")
    for path in written:
        print("wrote", path)
