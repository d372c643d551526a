"""RCSJ current-voltage curves, overdamped and hysteretic.

Sweeps a shunted-junction model at two damping levels, pulls switching and
retrapping currents off the hysteretic curve, and round-trips the overdamped
one through the parameter extractor. Saves both sweeps as plain-text traces
and, if matplotlib is on hand, a figure next to them.
"""

import numpy as np

from jjlab.io import TraceFile, save_trace
from jjlab.junction import (
    PHI0,
    RcsjRamp,
    extract_iv_parameters,
    simulate_rcsj_iv,
)

ic = 38e-6
rn = 39.0


def capacitance_for(beta_c):
    return beta_c * PHI0 / (2.0 * np.pi * ic * rn**2)


# overdamped: single-valued curve, V -> Rn*sqrt(I^2 - Ic^2) above Ic.
# sweep well past Ic so the top-of-ramp slope is actually ohmic
up, _ = simulate_rcsj_iv(
    ic, rn, capacitance_for(0.05),
    RcsjRamp(i_max=6.0 * ic, n_steps=220, both_directions=False),
)
params = extract_iv_parameters(up)
print("overdamped (beta_c = 0.05)")
print("  extracted Ic   = %.2f uA  (set %.2f)" % (params["ic"] * 1e6, ic * 1e6))
print("  extracted Rn   = %.2f ohm (set %.2f)" % (params["rn"], rn))
print("  IcRn           = %.3f mV" % (params["icrn_product"] * 1e3))

# underdamped: hysteresis, retrapping well below switching
up_h, down_h = simulate_rcsj_iv(
    ic, rn, capacitance_for(25.0),
    RcsjRamp(i_max=1.5 * ic, n_steps=300, both_directions=True),
)
threshold = 0.02 * ic * rn
i_switch = up_h.current[np.abs(up_h.voltage) > threshold].min()
i_retrap = down_h.current[np.abs(down_h.voltage) > threshold].min()
print("hysteretic (beta_c = 25)")
print("  switching at %.3f Ic, retrapping at %.3f Ic"
      % (i_switch / ic, i_retrap / ic))

for trace, name in ((up, "iv_overdamped.dat"),
                    (up_h, "iv_hysteretic_up.dat"),
                    (down_h, "iv_hysteretic_down.dat")):
    save_trace(
        TraceFile(
            kind="iv",
            header={"sweep": trace.sweep_direction, "ic": ic, "rn": rn},
            columns={"current_a": trace.current, "voltage_v": trace.voltage},
        ),
        name,
    )
print("wrote iv_overdamped.dat, iv_hysteretic_up.dat, iv_hysteretic_down.dat")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(up.voltage * 1e3, up.current * 1e6, ".-", ms=3, label="beta_c=0.05")
    ax.plot(up_h.voltage * 1e3, up_h.current * 1e6, ".-", ms=3, label="beta_c=25 up")
    ax.plot(down_h.voltage * 1e3, down_h.current * 1e6, ".-", ms=3,
            label="beta_c=25 down")
    ax.set_xlabel("voltage (mV)")
    ax.set_ylabel("current (uA)")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig("rcsj_iv.png", dpi=120)
    print("wrote rcsj_iv.png")
