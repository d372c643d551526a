"""Notch-type resonator spectroscopy and quality-factor budgets.

Complex S21 fitting with the rotated side-coupled model, photon-number
conversion, and the power/temperature dependence of the internal quality
factor (saturable two-level-system loss plus quasiparticle loss through
the conductivity ratio).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import h, hbar, k

from .errors import AnalysisError, DomainError, NoResonanceError
from .fitkit import FitProblem, FitResult, Trace, fit
from .physics import complex_conductivity, delta0_from_tc, gap_vs_temperature

N_C_DEFAULT = 10.0
BETA_DEFAULT = 0.5

__all__ = [
    "ResonatorFit",
    "S21Trace",
    "TlsParams",
    "fit_qi_vs_power",
    "fit_qi_vs_temperature",
    "fit_s21",
    "normalize_baseline",
    "photon_number",
    "qi_temperature_model",
    "tls_loss",
]


@dataclass(frozen=True)
class S21Trace:
    """Complex forward transmission versus frequency.

    The fit renormalizes against its own off-resonance baseline, so the
    trace only needs to be roughly unit-normalized.
    """

    frequency: np.ndarray  # Hz
    s21: np.ndarray  # complex
    stimulus_power: float | None = None  # W at the chip
    temperature: float | None = None  # K

    def __post_init__(self) -> None:
        f = np.asarray(self.frequency, dtype=float)
        s = np.asarray(self.s21, dtype=complex)
        if f.ndim != 1 or f.shape != s.shape or f.size < 10:
            raise DomainError("frequency and s21 must be matching 1-D arrays")
        if np.any(np.diff(f) <= 0):
            raise DomainError("frequencies must be strictly increasing")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(s))):
            raise DomainError("trace contains non-finite values")
        if self.stimulus_power is not None and self.stimulus_power <= 0:
            raise DomainError("stimulus power must be positive when given")
        if self.temperature is not None and self.temperature <= 0:
            raise DomainError("temperature must be positive when given")
        object.__setattr__(self, "frequency", f)
        object.__setattr__(self, "s21", s)

    def __len__(self) -> int:
        return self.frequency.size


@dataclass(frozen=True)
class TlsParams:
    """Saturable two-level-system loss: f_delta0 = F * delta0 filled loss."""

    f_delta0: float
    n_c: float = N_C_DEFAULT
    beta: float = BETA_DEFAULT

    def __post_init__(self) -> None:
        if self.f_delta0 < 0 or self.n_c <= 0 or self.beta <= 0:
            raise DomainError("TLS parameters must be positive (f_delta0 >= 0)")


@dataclass(frozen=True)
class ResonatorFit:
    """Fitted notch-resonator parameters.

    The loss identity 1/q_total = 1/q_internal + cos(phi)/q_external_mag
    is checked at construction.
    """

    f0: float  # Hz
    q_total: float
    q_internal: float
    q_external_mag: float
    phi: float  # rad
    photon_number: float | None = None
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if min(self.f0, self.q_total, self.q_internal, self.q_external_mag) <= 0:
            raise DomainError("f0 and all quality factors must be positive")
        if not abs(self.phi) < np.pi / 2:
            raise DomainError("the rotation angle must satisfy |phi| < pi/2")
        lhs = 1.0 / self.q_total
        rhs = 1.0 / self.q_internal + np.cos(self.phi) / self.q_external_mag
        if abs(lhs - rhs) > 1e-9 * lhs:
            raise DomainError(
                "inconsistent quality factors: 1/q_total differs from "
                f"1/q_internal + cos(phi)/q_external_mag by {abs(lhs - rhs):.3e}"
            )


def _s21_model(f, f0, q, qe_mag, phi):
    detuning = 2.0 * q * (f - f0) / f0
    return 1.0 - (q / qe_mag) * np.exp(1j * phi) / (1.0 + 1j * detuning)


def normalize_baseline(trace: S21Trace, edge_fraction: float = 0.2):
    """Divide out a complex linear baseline fitted to the outer points.

    ``edge_fraction`` is the total fraction of points used, split evenly
    between both ends. Returns the normalized trace and the baseline
    evaluated on the grid.
    """
    if not 0 < edge_fraction < 1:
        raise DomainError("edge fraction must lie in (0, 1)")
    f, s = trace.frequency, trace.s21
    k_edge = max(3, int(round(0.5 * edge_fraction * f.size)))
    sel = np.zeros(f.size, dtype=bool)
    sel[:k_edge] = True
    sel[-k_edge:] = True
    x = (f - f.mean()) / (f[-1] - f[0])
    coeffs = np.polyfit(x[sel], s[sel], 1)
    baseline = np.polyval(coeffs, x)
    if np.any(np.abs(baseline) < 1e-12):
        raise AnalysisError("baseline passes through zero; trace unusable")
    return replace(trace, s21=s / baseline), baseline


def fit_s21(trace: S21Trace, max_iterations: int = 200) -> ResonatorFit:
    """Fit the rotated notch model to a complex transmission trace.

    S21 = 1 - (Q/|Q_e|) e^{i phi} / (1 + 2 i Q (f - f0)/f0), fit in the
    complex plane after baseline normalization. Initial values come from
    the magnitude dip: its location, -3 dB width and depth. Because the
    Lorentzian wings leak into the baseline window on a finite span, the
    baseline is re-estimated against the fitted wings and the fit
    repeated until the parameters settle. The internal quality factor
    follows from 1/Q_i = 1/Q - cos(phi)/|Q_e|.
    """
    norm, _ = normalize_baseline(trace)
    f, s = norm.frequency, norm.s21
    mag = np.abs(s)
    k_edge = max(3, f.size // 10)
    noise = float(np.std(np.concatenate([mag[:k_edge], mag[-k_edge:]])))

    i0 = int(np.argmin(mag))
    depth = 1.0 - mag[i0]
    if depth < max(3.0 * noise, 1e-9):
        raise NoResonanceError(
            f"no dip beyond 3x the noise floor (depth {depth:.2e}, "
            f"noise {noise:.2e})"
        )
    level = 1.0 - 0.5 * depth
    above_left = np.nonzero(mag[: i0 + 1] >= level)[0]
    above_right = np.nonzero(mag[i0:] >= level)[0]
    if above_left.size == 0 or above_right.size == 0:
        raise AnalysisError("resonance dip is cut off by the trace edge")
    f_lo = f[above_left[-1]]
    f_hi = f[i0 + above_right[0]]
    fwhm = f_hi - f_lo
    f0_init = float(f[i0])
    if fwhm <= 0:
        raise AnalysisError("could not measure a -3 dB width")
    if f0_init - f[0] < 3.0 * fwhm or f[-1] - f0_init < 3.0 * fwhm:
        raise AnalysisError(
            "trace spans fewer than 3 linewidths on one side of the resonance"
        )

    q_init = f0_init / fwhm
    qe_init = max(q_init / min(depth, 1.0 - 1e-6), 1.5)

    def model(p, x):
        f0 = f0_init + p[0] * fwhm
        return _s21_model(x, f0, p[1], p[2], p[3])

    x_base = (f - f.mean()) / (f[-1] - f[0])
    edge = np.zeros(f.size, dtype=bool)
    edge[:k_edge] = True
    edge[-k_edge:] = True

    eps = 1e-6
    params = [0.0, q_init, qe_init, 0.0]
    result = None
    for _pass in range(8):
        result = fit(
            FitProblem(
                model=model,
                initial_params=params,
                lower_bounds=[-np.inf, 1.0, 1.0, -np.pi / 2 * (1 - eps)],
                upper_bounds=[np.inf, np.inf, np.inf, np.pi / 2 * (1 - eps)],
                max_iterations=max_iterations,
                param_names=("detuning", "q_total", "q_external_mag", "phi"),
            ),
            Trace(x=f, y=s),
        )
        shift = np.max(
            np.abs(result.params - np.asarray(params))
            / np.maximum(np.abs(result.params), 1.0)
        )
        params = list(result.params)
        if shift < 1e-10:
            break
        wings = model(result.params, f)
        coeffs = np.polyfit(x_base[edge], (trace.s21 / wings)[edge], 1)
        s = trace.s21 / np.polyval(coeffs, x_base)
    x0, q, qe_mag, phi = result.params
    f0 = f0_init + x0 * fwhm
    inv_qi = 1.0 / q - np.cos(phi) / qe_mag
    if inv_qi <= 0:
        raise AnalysisError(
            "fitted external coupling absorbs the whole linewidth; "
            "internal loss is not resolvable"
        )
    flags = tuple(fl for fl in result.flags if fl == "bounds")
    if not result.converged:
        flags = flags + ("not-converged",)
    out = ResonatorFit(
        f0=float(f0),
        q_total=float(q),
        q_internal=float(1.0 / inv_qi),
        q_external_mag=float(qe_mag),
        phi=float(phi),
        flags=flags,
    )
    if trace.stimulus_power is not None:
        out = replace(out, photon_number=photon_number(out, trace.stimulus_power))
    return out


def photon_number(fit: ResonatorFit, power_at_chip: float) -> float:
    """Mean photon occupation of a side-coupled notch resonator.

    n = 2 Q^2 P / (hbar omega0^2 |Q_e|).
    """
    if power_at_chip <= 0:
        raise DomainError("power must be positive")
    omega0 = 2.0 * np.pi * fit.f0
    return float(
        2.0
        * fit.q_total**2
        * power_at_chip
        / (hbar * omega0**2 * fit.q_external_mag)
    )


def tls_loss(n_ph: float, t: float, f: float, params: TlsParams) -> float:
    """Saturable TLS loss 1/Q = F delta0 tanh(hf/2kT) / (1 + n/n_c)^beta.

    t = 0 is allowed and gives the fully polarized tanh -> 1 limit.
    """
    if n_ph < 0 or t < 0 or f <= 0:
        raise DomainError("n_ph and t must be non-negative, f positive")
    thermal = 1.0 if t == 0 else np.tanh(h * f / (2.0 * k * t))
    return params.f_delta0 * thermal / (1.0 + n_ph / params.n_c) ** params.beta


def _loss_points(points) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError("points must be an (n, 2) array")
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError("points must be finite and positive")
    return arr[:, 0], arr[:, 1]


def _embed_fixed(result, full_values, free, names, extra_flags=()):
    """Expand a reduced-parameter fit back to the full parameter list."""
    n = len(full_values)
    cov = np.zeros((n, n))
    idx = np.nonzero(free)[0]
    for a, ia in enumerate(idx):
        for b, ib in enumerate(idx):
            cov[ia, ib] = result.covariance[a, b]
    return FitResult(
        params=np.asarray(full_values, dtype=float),
        covariance=cov,
        residual_norm=result.residual_norm,
        iterations=result.iterations,
        converged=result.converged,
        param_names=tuple(names),
        flags=tuple(result.flags) + tuple(extra_flags),
    )


def fit_qi_vs_power(points, t: float, f: float) -> FitResult:
    """Fit 1/Q_i(n) = tls_loss(n) + 1/Q_other to a power scan.

    ``points`` are (photon number, Q_i) pairs. Returns params
    (f_delta0, n_c, beta, q_other). Data without any resolvable power
    dependence falls back to the constant-loss model, with the TLS
    amplitude reported as 0 with an uncertainty bounding whatever the
    scatter could hide ('tls-not-detected' flag).
    """
    n_ph, q_i = _loss_points(points)
    if n_ph.size < 5:
        raise DomainError("at least 5 points are required")
    if t < 0 or f <= 0:
        raise DomainError("temperature must be non-negative, frequency positive")
    y = 1.0 / q_i
    thermal = 1.0 if t == 0 else float(np.tanh(h * f / (2.0 * k * t)))
    flags = []
    if np.log10(n_ph.max() / n_ph.min()) < 2.0:
        flags.append("dynamic-range")

    names = ("f_delta0", "n_c", "beta", "q_other")
    spread = y.max() - y.min()
    n_c0 = float(np.exp(np.mean(np.log(n_ph))))

    def fallback():
        loss0 = float(np.mean(y))
        resid = y - loss0
        sigma_q = float(np.std(resid, ddof=1) / loss0**2 / np.sqrt(y.size))
        out = FitResult(
            params=np.array([0.0, n_c0, BETA_DEFAULT, 1.0 / loss0]),
            covariance=np.diag([(spread / thermal) ** 2, 0.0, 0.0, sigma_q**2]),
            residual_norm=float(np.linalg.norm(resid)),
            iterations=0,
            converged=True,
            param_names=names,
            flags=tuple(flags) + ("tls-not-detected",),
        )
        return out

    if spread <= 1e-6 * float(np.median(y)):
        return fallback()

    def model(p, x):
        sat = (1.0 + x / p[1]) ** -p[2]
        return p[0] * thermal * sat + p[3]

    initial = [
        max(spread / thermal, 1e-10),
        n_c0,
        BETA_DEFAULT,
        0.9 * y.min(),
    ]
    try:
        result = fit(
            FitProblem(
                model=model,
                initial_params=initial,
                lower_bounds=[1e-13, 1e-9, 0.05, 1e-13],
                upper_bounds=[np.inf, np.inf, 4.0, np.inf],
                param_names=("f_delta0", "n_c", "beta", "loss_other"),
            ),
            Trace(x=n_ph, y=y),
        )
    except Exception:
        return fallback()
    f_d0 = result.params[0]
    sigma_f = result.param_uncertainties[0]
    if not result.converged or not np.isfinite(sigma_f) or f_d0 < 2.0 * sigma_f:
        return fallback()
    loss_other = result.params[3]
    jac = np.eye(4)
    jac[3, 3] = -1.0 / loss_other**2
    values = result.params.copy()
    values[3] = 1.0 / loss_other
    out = result.reparametrized(values=values, jacobian=jac, param_names=names)
    return FitResult(
        params=out.params,
        covariance=out.covariance,
        residual_norm=out.residual_norm,
        iterations=out.iterations,
        converged=out.converged,
        param_names=names,
        flags=tuple(out.flags) + tuple(flags),
    )


def _mb_loss_ratio(temperatures, f, tc, tol):
    """sigma1/sigma2 on the grid, gap self-consistent with tc."""
    delta0 = delta0_from_tc(tc)
    out = np.empty(len(temperatures))
    for i, t in enumerate(temperatures):
        delta = float(gap_vs_temperature(delta0, tc, t))
        sigma = complex_conductivity(f, t, delta, tol=tol)
        out[i] = sigma.sigma1 / sigma.sigma2
    return out


def qi_temperature_model(
    temperatures,
    f: float,
    tc: float,
    q_other: float,
    f_delta0: float,
    alpha_kin: float,
    n_ph: float = 0.0,
    n_c: float = N_C_DEFAULT,
    beta: float = BETA_DEFAULT,
    tol: float = 1e-9,
) -> np.ndarray:
    """Q_i(T) from constant, TLS and quasiparticle losses.

    1/Q_i = 1/q_other + tls_loss(n_ph, T) + alpha_kin * sigma1/sigma2.
    """
    t_arr = np.asarray(temperatures, dtype=float)
    if np.any(t_arr <= 0):
        raise DomainError("temperatures must be positive")
    if np.any(t_arr >= tc):
        raise DomainError("temperatures must stay below tc")
    ratio = _mb_loss_ratio(t_arr, f, tc, tol)
    tls = np.array(
        [tls_loss(n_ph, t, f, TlsParams(f_delta0, n_c, beta)) for t in t_arr]
    )
    return 1.0 / (1.0 / q_other + tls + alpha_kin * ratio)


def fit_qi_vs_temperature(
    points,
    f: float,
    tc: float,
    n_ph: float = 0.0,
    n_c: float = N_C_DEFAULT,
    beta: float = BETA_DEFAULT,
    fix_f_delta0: float | None = None,
    fix_alpha_kin: float | None = None,
    tol: float = 1e-9,
) -> FitResult:
    """Decompose a Q_i(T) scan into constant, TLS and quasiparticle losses.

    ``points`` are (temperature K, Q_i) pairs, all below the fixed tc.
    The conductivity ratio is evaluated once per temperature; only its
    prefactor alpha_kin (the kinetic-inductance fraction) is fit. The TLS
    saturation (n_c, beta) is not identifiable from a temperature scan at
    one power, so those stay fixed. Returns params
    (q_other, f_delta0, alpha_kin); fixing a parameter keeps its slot
    with zero uncertainty.
    """
    t_arr, q_i = _loss_points(points)
    if t_arr.size < 4:
        raise DomainError("at least 4 points are required")
    if np.any(t_arr >= tc):
        raise DomainError(
            f"temperatures up to {t_arr.max():.3f} K reach tc = {tc:.3f} K"
        )
    if t_arr.max() / t_arr.min() < 4.0:
        raise DomainError("points must span at least a factor 4 in temperature")
    y = 1.0 / q_i
    ratio = _mb_loss_ratio(t_arr, f, tc, tol)
    thermal = np.tanh(h * f / (2.0 * k * t_arr))
    sat = (1.0 + n_ph / n_c) ** -beta

    names = ("q_other", "f_delta0", "alpha_kin")
    free = np.array([True, fix_f_delta0 is None, fix_alpha_kin is None])

    def model_loss(q_other, f_d0, alpha):
        return 1.0 / q_other + f_d0 * thermal * sat + alpha * ratio

    i_cold = int(np.argmin(t_arr))
    alpha0 = max((y.max() - y[i_cold]) / max(ratio.max(), 1e-300), 1e-8)
    full0 = np.array(
        [
            0.9 / y.min(),
            max((y[i_cold] - 0.8 * y.min()) / max(thermal[i_cold] * sat, 1e-12), 1e-9)
            if fix_f_delta0 is None
            else fix_f_delta0,
            alpha0 if fix_alpha_kin is None else fix_alpha_kin,
        ]
    )

    def model(p, x):
        full = full0.copy()
        full[free] = p
        return model_loss(full[0], full[1], full[2])

    result = fit(
        FitProblem(
            model=model,
            initial_params=full0[free],
            lower_bounds=np.array([1.0, 1e-13, 1e-13])[free],
            upper_bounds=[np.inf] * int(free.sum()),
            param_names=tuple(np.array(names)[free]),
        ),
        Trace(x=t_arr, y=y),
    )
    full = full0.copy()
    full[free] = result.params
    return _embed_fixed(result, full, free, names)
