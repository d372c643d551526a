"""Superconducting gap, complex conductivity and quasiparticle relations.

Energies are in eV, temperatures in K, frequencies in Hz. Conductivities are
returned as ratios to the normal-state conductivity, so they are
dimensionless and material-independent once the gap is fixed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.constants import e, h, k

from .errors import DomainError, NormalStateWarning, UnsupportedRegimeError

K_B_EV = k / e  # Boltzmann constant (eV/K)
H_EV = h / e  # Planck constant (eV s)
BCS_RATIO = 1.76  # Delta0/(kB Tc) in the weak-coupling limit
GAP_SHAPE = 1.74  # coefficient of the gap-vs-temperature interpolation

__all__ = [
    "BCS_RATIO",
    "ComplexConductivity",
    "SuperconductorParams",
    "complex_conductivity",
    "delta0_from_tc",
    "gap_vs_temperature",
    "quasiparticle_density",
    "tc_from_delta0",
]


def delta0_from_tc(tc: float) -> float:
    """Zero-temperature gap (eV) from the critical temperature (K)."""
    if tc <= 0:
        raise DomainError(f"critical temperature must be positive, got {tc!r}")
    return BCS_RATIO * K_B_EV * tc


def tc_from_delta0(delta0: float) -> float:
    """Critical temperature (K) from the zero-temperature gap (eV)."""
    if delta0 <= 0:
        raise DomainError(f"gap must be positive, got {delta0!r}")
    return delta0 / (BCS_RATIO * K_B_EV)


def gap_vs_temperature(delta0: float, tc: float, t):
    """Interpolated gap Delta(T) = Delta0 tanh(1.74 sqrt(Tc/T - 1)).

    Parameters
    ----------
    delta0 : float
        Zero-temperature gap (eV).
    tc : float
        Critical temperature (K).
    t : float or ndarray
        Evaluation temperature(s) (K), 0 <= t.

    Returns
    -------
    float or ndarray
        Gap in eV. Zero at and above ``tc`` (a ``NormalStateWarning`` is
        emitted when any point lies there).
    """
    if delta0 <= 0 or tc <= 0:
        raise DomainError("delta0 and tc must be positive")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("temperature must be non-negative")
    normal = t_arr >= tc
    if np.any(normal):
        warnings.warn(
            "temperature at or above tc, gap is zero there", NormalStateWarning,
            stacklevel=2,
        )
    with np.errstate(divide="ignore", invalid="ignore"):
        arg = np.sqrt(np.maximum(tc / np.where(t_arr > 0, t_arr, np.inf) - 1.0, 0.0))
    gap = np.where(normal, 0.0, delta0 * np.tanh(GAP_SHAPE * arg))
    gap = np.where(t_arr == 0, delta0, gap)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(gap)
    return gap


def quasiparticle_density(t: float, delta: float) -> float:
    """Thermal quasiparticle fraction x_qp = sqrt(2 pi kT/Delta) exp(-Delta/kT).

    Normalized to the Cooper-pair density; ``delta`` in eV, ``t`` in K.
    Returns 0 at t = 0 (the Boltzmann tail vanishes faster than the
    square-root prefactor diverges).
    """
    if delta <= 0:
        raise DomainError(f"gap must be positive, got {delta!r}")
    if t < 0:
        raise DomainError(f"temperature must be non-negative, got {t!r}")
    if t == 0:
        return 0.0
    kt = K_B_EV * t
    return float(np.sqrt(2.0 * np.pi * kt / delta) * np.exp(-delta / kt))


@dataclass(frozen=True)
class SuperconductorParams:
    """Material parameters of a superconducting film.

    ``tc`` (K) and ``delta0`` (eV) are required; the transport quantities
    are optional and filled in by the film analysis when available.
    """

    tc: float
    delta0: float
    rho0: float | None = None  # residual resistivity, Ohm m
    sheet_resistance: float | None = None  # Ohm per square
    thickness: float | None = None  # m
    kinetic_inductance: float | None = None  # H per square
    london_depth: float | None = None  # m

    def __post_init__(self) -> None:
        if self.tc <= 0 or self.delta0 <= 0:
            raise DomainError("tc and delta0 must be positive")
        for name in (
            "rho0",
            "sheet_resistance",
            "thickness",
            "kinetic_inductance",
            "london_depth",
        ):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise DomainError(f"{name} must be positive when given, got {v!r}")

    @classmethod
    def from_tc(cls, tc: float, **transport) -> "SuperconductorParams":
        """Weak-coupling parameters with delta0 = 1.76 kB tc."""
        return cls(tc=tc, delta0=delta0_from_tc(tc), **transport)

    def gap_at(self, t):
        """Delta(T) in eV; see :func:`gap_vs_temperature`."""
        return gap_vs_temperature(self.delta0, self.tc, t)


@dataclass(frozen=True)
class ComplexConductivity:
    """Conductivity ratios sigma1/sigma_n and sigma2/sigma_n.

    Records the evaluation point (frequency, temperature, gap) alongside
    the ratios so downstream caches stay self-describing.
    """

    sigma1: float
    sigma2: float
    frequency: float = float("nan")  # Hz
    temperature: float = float("nan")  # K
    delta: float = float("nan")  # eV

    @property
    def loss_ratio(self) -> float:
        """sigma1/sigma2, the dissipative fraction seen by a resonator."""
        return self.sigma1 / self.sigma2


def _fermi(x, theta):
    # occupation at energy x (units of Delta) and reduced temperature theta;
    # tanh form stays finite where exp(x/theta) would overflow
    return 0.5 * (1.0 - np.tanh(0.5 * x / theta))


def complex_conductivity(
    freq: float, t: float, delta: float, tol: float = 1e-9
) -> ComplexConductivity:
    """Thermal-equilibrium conductivity of a BCS superconductor, hf < 2 Delta.

    Evaluates the standard dirty-limit (Mattis-Bardeen) integrals for the
    real and imaginary parts of sigma/sigma_n at photon energies below the
    pair-breaking edge. Integrable inverse-square-root endpoints are removed
    by substitution before adaptive quadrature.

    Parameters
    ----------
    freq : float
        Probe frequency (Hz), > 0.
    t : float
        Temperature (K), >= 0. At t = 0 the dissipative part is identically
        zero for sub-gap photons.
    delta : float
        Gap Delta(T) (eV), > 0.
    tol : float
        Absolute and relative quadrature tolerance.

    Returns
    -------
    ComplexConductivity
    """
    if freq <= 0:
        raise DomainError(f"frequency must be positive, got {freq!r}")
    if delta <= 0:
        raise DomainError(f"gap must be positive, got {delta!r}")
    if t < 0:
        raise DomainError(f"temperature must be non-negative, got {t!r}")
    w = H_EV * freq / delta  # photon energy in units of Delta
    if w >= 2.0:
        raise UnsupportedRegimeError(
            f"photon energy {H_EV * freq:.3e} eV is not below the "
            f"pair-breaking edge 2*Delta = {2 * delta:.3e} eV"
        )

    theta = K_B_EV * t / delta if t > 0 else 0.0

    # sigma1: E from Delta to infinity, substitution E = 1 + u^2 removes the
    # sqrt(E^2 - 1) singularity at the lower limit.
    if theta == 0.0:
        sigma1 = 0.0
    else:

        def s1_integrand(u):
            en = 1.0 + u * u
            occ = _fermi(en, theta) - _fermi(en + w, theta)
            g = en * (en + w) + 1.0
            return 2.0 * occ * g / (np.sqrt(en + 1.0) * np.sqrt((en + w) ** 2 - 1.0))

        val, _ = integrate.quad(
            s1_integrand, 0.0, np.inf, epsabs=tol, epsrel=tol, limit=200
        )
        sigma1 = 2.0 / w * val

    # sigma2: E from 1 - w to 1, singular at both ends; split at the midpoint
    # and substitute towards each endpoint.
    half = np.sqrt(0.5 * w)

    def s2_upper(u):
        en = 1.0 - u * u
        occ = 1.0 - 2.0 * _fermi(en + w, theta) if theta > 0 else 1.0
        g = en * (en + w) + 1.0
        return 2.0 * occ * g / (np.sqrt(1.0 + en) * np.sqrt((en + w) ** 2 - 1.0))

    def s2_lower(u):
        en = 1.0 - w + u * u
        occ = 1.0 - 2.0 * _fermi(en + w, theta) if theta > 0 else 1.0
        g = en * (en + w) + 1.0
        return 2.0 * occ * g / (np.sqrt(1.0 - en * en) * np.sqrt(en + w + 1.0))

    hi, _ = integrate.quad(s2_upper, 0.0, half, epsabs=tol, epsrel=tol, limit=200)
    lo, _ = integrate.quad(s2_lower, 0.0, half, epsabs=tol, epsrel=tol, limit=200)
    sigma2 = (hi + lo) / w

    return ComplexConductivity(
        sigma1=float(sigma1),
        sigma2=float(sigma2),
        frequency=freq,
        temperature=t,
        delta=delta,
    )
