"""Superconducting film transport analysis.

Pulls material parameters out of resistance-vs-temperature traces: the
critical temperature and transition width, residual resistivity ratio,
residual resistivity, and the derived sheet/kinetic inductance and London
penetration depth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import e, hbar, mu_0

from .errors import AnalysisError, DomainError
from .physics import delta0_from_tc

BULK_TC = 9.3  # K, clean-limit reference for sputtered Nb

__all__ = [
    "BULK_TC",
    "FilmGeometry",
    "FilmReport",
    "RtTrace",
    "analyze_film",
    "extract_tc",
    "kinetic_parameters",
    "residual_ratio",
]


@dataclass(frozen=True)
class FilmGeometry:
    """Four-point measurement bar geometry, SI units."""

    length: float
    width: float
    thickness: float

    def __post_init__(self) -> None:
        if min(self.length, self.width, self.thickness) <= 0:
            raise DomainError("all film dimensions must be positive")


@dataclass(frozen=True)
class RtTrace:
    """Resistance vs temperature, sorted ascending in temperature.

    ``geometry`` is needed only for the resistivity-based quantities.
    """

    temperature: np.ndarray  # K
    resistance: np.ndarray  # Ohm
    geometry: FilmGeometry | None = None
    label: str = ""

    def __post_init__(self) -> None:
        t = np.asarray(self.temperature, dtype=float)
        r = np.asarray(self.resistance, dtype=float)
        if t.ndim != 1 or t.shape != r.shape or t.size < 2:
            raise DomainError(
                "temperature and resistance must be matching 1-D arrays"
            )
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(r))):
            raise DomainError("trace contains non-finite values")
        if np.any(t <= 0):
            raise DomainError("temperatures must be strictly positive")
        order = np.argsort(t, kind="stable")
        object.__setattr__(self, "temperature", t[order])
        object.__setattr__(self, "resistance", r[order])

    def __len__(self) -> int:
        return self.temperature.size


@dataclass(frozen=True)
class FilmReport:
    """Derived film parameters; resistivity entries are None without geometry."""

    tc: float  # K
    tc_width: float  # K
    rrr: float
    rho0: float | None  # Ohm m
    sheet_resistance: float | None  # Ohm/sq
    kinetic_inductance: float | None  # H/sq
    london_depth: float | None  # m
    delta_tc_from_bulk: float  # K

    def __post_init__(self) -> None:
        if self.tc <= 0:
            raise DomainError("tc must be positive")
        if self.tc_width < 0:
            raise DomainError("transition width cannot be negative")
        if self.rrr < 1.0 - 1e-9:
            raise DomainError(
                f"residual ratio {self.rrr!r} below 1 is not metallic"
            )
        if self.delta_tc_from_bulk < -0.05:
            raise DomainError(
                f"tc exceeds the bulk value by {-self.delta_tc_from_bulk:.3f} K; "
                "allowed overshoot is 0.05 K"
            )


def _plateau(t: np.ndarray, r: np.ndarray, anchor: float, window: float) -> float:
    sel = (t > anchor) & (t <= anchor + window)
    if sel.sum() < 3:
        raise AnalysisError(
            f"fewer than 3 points in the normal-state window "
            f"({anchor:.2f}, {anchor + window:.2f}] K"
        )
    return float(np.median(r[sel]))


def _crossing(t: np.ndarray, r: np.ndarray, level: float, t_max: float) -> float:
    """Highest-temperature upward crossing of ``level`` at or below t_max."""
    below = np.nonzero((r <= level) & (t <= t_max))[0]
    if below.size == 0 or below[-1] + 1 >= t.size:
        raise AnalysisError("resistance never crosses the transition threshold")
    i = int(below[-1])
    r0, r1 = r[i], r[i + 1]
    if r1 <= r0:
        return float(t[i])
    frac = (level - r0) / (r1 - r0)
    return float(t[i] + frac * (t[i + 1] - t[i]))


def extract_tc(trace: RtTrace, plateau_window: float = 2.0) -> tuple[float, float]:
    """Critical temperature and 10-90% width from an R(T) trace.

    The normal-state plateau is the median resistance in a window just
    above the transition; tc is where R crosses half the plateau, the
    width spans the 10% and 90% crossings. The plateau is located twice:
    first anchored at the steepest slope, then re-anchored at the 90%
    crossing, which keeps phonon-slope contamination out of the window.
    Percent thresholds make the result invariant under resistance
    rescaling.
    """
    if len(trace) < 20:
        raise AnalysisError(
            f"need at least 20 points for a transition analysis, got {len(trace)}"
        )
    t, r = trace.temperature, trace.resistance
    slope = np.diff(r) / np.diff(t)
    anchor = float(t[int(np.argmax(slope)) + 1])
    for _ in range(2):
        plateau = _plateau(t, r, anchor, plateau_window)
        if plateau <= 0 or r.min() >= 0.05 * plateau:
            raise AnalysisError(
                "no superconducting transition: resistance never drops below "
                "5% of the normal-state plateau"
            )
        t90 = _crossing(t, r, 0.9 * plateau, anchor + plateau_window)
        anchor = t90
    tc = _crossing(t, r, 0.5 * plateau, t90)
    t10 = _crossing(t, r, 0.1 * plateau, t90)
    return tc, t90 - t10


def residual_ratio(trace: RtTrace, tc: float) -> float:
    """RRR, the interpolated R(300 K) over R just above the transition."""
    t, r = trace.temperature, trace.resistance
    if t.max() < 295.0:
        raise AnalysisError(
            f"no points in the 295-300 K range needed for the room-temperature "
            f"reference (trace ends at {t.max():.1f} K)"
        )
    t_ref = tc + 0.5
    if t.max() < t_ref or t.min() > t_ref:
        raise AnalysisError(
            f"no resistance data at {t_ref:.2f} K, just above the transition"
        )
    r_norm = float(np.interp(t_ref, t, r))
    if r_norm <= 0:
        raise AnalysisError("non-positive resistance just above the transition")
    return float(np.interp(300.0, t, r)) / r_norm


def kinetic_parameters(
    rho0: float, thickness: float, delta0: float
) -> tuple[float, float, float]:
    """Sheet resistance, kinetic inductance per square, London depth.

    R_sq = rho0/thickness, L_K = hbar R_sq / (pi Delta0), and
    lambda_L = sqrt(thickness L_K / mu0); ``delta0`` in eV.
    """
    if rho0 <= 0 or thickness <= 0 or delta0 <= 0:
        raise DomainError("rho0, thickness and delta0 must all be positive")
    sheet = rho0 / thickness
    l_k = hbar * sheet / (np.pi * delta0 * e)
    depth = np.sqrt(thickness * l_k / mu_0)
    return sheet, l_k, float(depth)


def analyze_film(
    trace: RtTrace,
    bulk_tc: float = BULK_TC,
    plateau_window: float = 2.0,
) -> FilmReport:
    """Full film characterization from one R(T) trace.

    Resistivity-derived fields need trace.geometry; the gap entering the
    kinetic inductance comes from the weak-coupling gap-to-tc ratio. The
    residual resistivity is taken at tc + 0.5 K, the same reference point
    the RRR denominator uses.
    """
    tc, width = extract_tc(trace, plateau_window=plateau_window)
    rrr = residual_ratio(trace, tc)
    rho0 = sheet = l_k = depth = None
    if trace.geometry is not None:
        g = trace.geometry
        r_res = float(np.interp(tc + 0.5, trace.temperature, trace.resistance))
        rho0 = r_res * g.width * g.thickness / g.length
        delta0 = delta0_from_tc(tc)
        sheet, l_k, depth = kinetic_parameters(rho0, g.thickness, delta0)
    return FilmReport(
        tc=tc,
        tc_width=width,
        rrr=rrr,
        rho0=rho0,
        sheet_resistance=sheet,
        kinetic_inductance=l_k,
        london_depth=depth,
        delta_tc_from_bulk=bulk_tc - tc,
    )
