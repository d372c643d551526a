"""Notch resonator fit plus a TLS power sweep.

First half: generate one noisy complex S21 trace and fit it, checking the
1/Qt = 1/Qi + cos(phi)/Qe bookkeeping. Second half: sweep Qi over six
decades of photon number and split the loss into its TLS and residual
parts.
"""

import numpy as np

from jjlab.resonator import (
    S21Trace,
    TlsParams,
    fit_qi_vs_power,
    fit_s21,
    tls_loss,
)

rng = np.random.default_rng(3)

f0 = 6.0e9
qi = 9.0e5
qe = 2.6e5
phi = 0.1
q = 1.0 / (1.0 / qi + np.cos(phi) / qe)

f = f0 + np.linspace(-12.0, 12.0, 301) * (f0 / q) / 2.0
s21 = 1.0 - (q / qe) * np.exp(1j * phi) / (1.0 + 2j * q * (f - f0) / f0)
s21 = s21 + 0.004 * (rng.standard_normal(f.size) + 1j * rng.standard_normal(f.size))

fit = fit_s21(S21Trace(frequency=f, s21=s21))
print("f0  = %.6f GHz   (set %.6f)" % (fit.f0 / 1e9, f0 / 1e9))
print("Qt  = %.0f        (set %.0f)" % (fit.q_total, q))
print("Qi  = %.0f        (set %.0f)" % (fit.q_internal, qi))
print("|Qe|= %.0f        (set %.0f)" % (fit.q_external_mag, qe))
print("phi = %.3f rad    (set %.3f)" % (fit.phi, phi))
closure = 1.0 / fit.q_total - (1.0 / fit.q_internal + np.cos(fit.phi) / fit.q_external_mag)
print("closure residual: %.1e (should be ~0)" % closure)

# --- Qi vs photon number --------------------------------------------------
t = 0.025          # K
params = TlsParams(f_delta0=2.0e-6, n_c=10.0, beta=0.5)
q_other = 2.0e6

n_ph = np.logspace(-1, 5, 25)
qi_curve = 1.0 / (np.array([tls_loss(n, t, f0, params) for n in n_ph]) + 1.0 / q_other)
qi_meas = qi_curve * (1.0 + 0.01 * rng.standard_normal(n_ph.size))

tls_fit = fit_qi_vs_power(np.column_stack([n_ph, qi_meas]), t=t, f=f0)
for name in tls_fit.param_names:
    print("%-9s = %.4g  +- %.2g" % (name, tls_fit.value(name), tls_fit.uncertainty(name)))

low = 1.0 / (tls_loss(n_ph[0], t, f0, params) + 1.0 / q_other)
high = 1.0 / (tls_loss(n_ph[-1], t, f0, params) + 1.0 / q_other)
print("Qi swings from %.2e (single photon) to %.2e (saturated)" % (low, high))
