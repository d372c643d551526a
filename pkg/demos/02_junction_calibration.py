"""Wafer-level junction calibration from room-temperature probe data.

Three steps, the same ones the pipeline runs:
  1. fit the resistance-area law R = rho_s / A_eff across a width series
     to get the specific resistance and the lithographic dimension bias,
  2. convert an IcRn product into a critical-current density,
  3. fit the oxidation exposure power law that sets jc in the first place.
"""

import numpy as np

from jjlab.junction import (
    JunctionGeometry,
    WaferCalibration,
    ab_icrn,
    fit_area_scaling,
    fit_exposure_law,
    jc_from_calibration,
)
from jjlab.physics import delta0_from_tc

rng = np.random.default_rng(7)

# --- 1. area scaling ------------------------------------------------------
rho_s = 4.94e-9        # ohm m^2, a few-hundred-Pa*s oxidation
bias = 0.16e-6         # junctions print 160 nm smaller per side than drawn

widths = np.repeat(np.geomspace(0.3e-6, 3.0e-6, 10), 3)
r_clean = rho_s / (widths - bias) ** 2
r_meas = r_clean * (1.0 + 0.02 * rng.standard_normal(widths.size))

fit = fit_area_scaling(np.column_stack([widths, widths, r_meas]))
print("specific resistance: %.3e ohm m^2  (true %.3e)"
      % (fit.value("specific_resistance"), rho_s))
print("dimension bias:      %.1f nm       (true %.1f)"
      % (fit.value("dimension_bias") * 1e9, bias * 1e9))
print("converged: %s after %d iterations" % (fit.converged, fit.iterations))

# --- 2. jc from the calibration ------------------------------------------
tc = 9.2
icrn = ab_icrn(delta0_from_tc(tc), 0.0)
cal = WaferCalibration(
    specific_resistance=fit.value("specific_resistance"),
    dimension_bias=fit.value("dimension_bias"),
    icrn_product=icrn,
    jc=icrn / fit.value("specific_resistance"),
    tc=tc,
)
print("IcRn = %.3f mV  ->  jc = %.2f uA/um^2" % (icrn * 1e3, cal.jc * 1e-6))

geom = JunctionGeometry(design_width=1.0e-6, design_height=1.0e-6)
print("a drawn 1x1 um junction carries Ic = %.1f uA"
      % (cal.jc * geom.effective_area(cal.dimension_bias) * 1e6))
print("check: jc_from_calibration agrees: %.3e == %.3e"
      % (jc_from_calibration(cal.specific_resistance, cal.icrn_product), cal.jc))

# --- 3. exposure law ------------------------------------------------------
exposure = np.geomspace(30.0, 3000.0, 9)       # Pa s
jc_true = 3.0e7 * exposure ** -0.5
jc_meas = jc_true * (1.0 + 0.03 * rng.standard_normal(exposure.size))

law = fit_exposure_law(np.column_stack([exposure, jc_meas]))
print("exposure law: jc = %.3e * E^%.3f   (expected exponent -0.5)"
      % (law.value("prefactor"), law.value("exponent")))

locked = fit_exposure_law(np.column_stack([exposure, jc_meas]), fix_exponent=-0.5)
print("with the exponent pinned: prefactor = %.3e" % locked.value("prefactor"))
