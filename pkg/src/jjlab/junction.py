"""Josephson junction characterization and prediction.

Room-temperature resistance to cryogenic critical current (via the
Ambegaokar-Baratoff product), area/dimension-bias calibration, critical
current density scaling with barrier oxygen exposure, annealing kinetics,
and RCSJ phase-dynamics IV simulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.constants import e, h, k

from .errors import (
    AnalysisError,
    DomainError,
    GeometryError,
    RankDeficiencyError,
)
from .fitkit import FitProblem, FitResult, Trace, fit

K_B_EV = k / e  # eV/K
PHI0 = h / (2 * e)  # flux quantum, Wb

_PROCESSES = ("PECVD", "HDPCVD")

__all__ = [
    "IvTrace",
    "JunctionGeometry",
    "PredictedJunction",
    "RcsjRamp",
    "WaferCalibration",
    "ab_icrn",
    "extract_iv_parameters",
    "fit_annealing",
    "fit_area_scaling",
    "fit_exposure_law",
    "fit_exposure_law_shared",
    "ic_from_rn",
    "jc_from_calibration",
    "josephson_inductance",
    "predict_junction",
    "simulate_rcsj_iv",
]


# ---------------------------------------------------------------- types


@dataclass(frozen=True)
class JunctionGeometry:
    """Lithographic junction design plus the etch-induced dimension bias.

    ``dimension_bias`` is the total reduction per lateral dimension; when
    None, the wafer calibration's bias applies.
    """

    design_width: float
    design_height: float
    dimension_bias: float | None = None

    def __post_init__(self) -> None:
        if self.design_width <= 0 or self.design_height <= 0:
            raise DomainError("design dimensions must be positive")
        if self.dimension_bias is not None and self.dimension_bias < 0:
            raise DomainError("dimension bias cannot be negative")

    def effective_dims(self, fallback_bias: float = 0.0) -> tuple[float, float]:
        bias = self.dimension_bias if self.dimension_bias is not None else fallback_bias
        w = self.design_width - bias
        if w <= 0:
            raise GeometryError(
                f"effective width {w:.3e} m is non-positive "
                f"(design {self.design_width:.3e} m, bias {bias:.3e} m)"
            )
        hgt = self.design_height - bias
        if hgt <= 0:
            raise GeometryError(
                f"effective height {hgt:.3e} m is non-positive "
                f"(design {self.design_height:.3e} m, bias {bias:.3e} m)"
            )
        return w, hgt

    def effective_area(self, fallback_bias: float = 0.0) -> float:
        w, hgt = self.effective_dims(fallback_bias)
        return w * hgt


@dataclass(frozen=True)
class WaferCalibration:
    """Per-wafer junction constants tying design geometry to electrical data.

    ``jc`` must satisfy jc = icrn_product / specific_resistance; use
    :meth:`from_measurements` to fill it in consistently.
    """

    specific_resistance: float  # Ohm m^2
    dimension_bias: float  # m
    icrn_product: float  # V
    jc: float  # A/m^2
    oxidation_exposure: float | None = None  # Pa s
    spacer_process: str | None = None
    tc: float | None = None  # K

    def __post_init__(self) -> None:
        if self.specific_resistance <= 0:
            raise DomainError("specific resistance must be positive")
        if self.dimension_bias < 0:
            raise DomainError("dimension bias cannot be negative")
        if self.icrn_product <= 0:
            raise DomainError("IcRn product must be positive")
        expected = self.icrn_product / self.specific_resistance
        if not np.isclose(self.jc, expected, rtol=1e-9, atol=0.0):
            raise DomainError(
                f"inconsistent calibration: jc = {self.jc!r} but "
                f"icrn/rho_s = {expected!r}"
            )
        if self.spacer_process is not None and self.spacer_process not in _PROCESSES:
            raise DomainError(
                f"unknown spacer process {self.spacer_process!r}; "
                f"expected one of {_PROCESSES}"
            )
        if self.tc is not None and self.tc <= 0:
            raise DomainError("tc must be positive when given")

    @classmethod
    def from_measurements(
        cls,
        specific_resistance: float,
        dimension_bias: float,
        icrn_product: float,
        **meta,
    ) -> "WaferCalibration":
        return cls(
            specific_resistance=specific_resistance,
            dimension_bias=dimension_bias,
            icrn_product=icrn_product,
            jc=icrn_product / specific_resistance,
            **meta,
        )


@dataclass(frozen=True)
class IvTrace:
    """One sweep direction of a simulated or measured IV curve."""

    current: np.ndarray  # A
    voltage: np.ndarray  # V
    sweep_direction: str  # 'up' | 'down'
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        cur = np.asarray(self.current, dtype=float)
        vol = np.asarray(self.voltage, dtype=float)
        if cur.shape != vol.shape or cur.ndim != 1:
            raise DomainError("current and voltage must be matching 1-D arrays")
        if self.sweep_direction not in ("up", "down"):
            raise DomainError(f"unknown sweep direction {self.sweep_direction!r}")
        if (
            self.sweep_direction == "up"
            and cur.size
            and abs(cur[0]) > 0.02 * np.abs(cur).max()
        ):
            raise DomainError("an up-sweep must start at zero bias current")
        object.__setattr__(self, "current", cur)
        object.__setattr__(self, "voltage", vol)


@dataclass(frozen=True)
class RcsjRamp:
    """Bias-current ramp description for the IV simulator."""

    i_max: float  # A
    n_steps: int = 200
    both_directions: bool = True


@dataclass(frozen=True)
class PredictedJunction:
    """Cryogenic junction parameters predicted from room-temperature data."""

    rn: float  # Ohm
    ic: float  # A
    l_j: float  # H
    ej_over_h: float  # Hz


# ------------------------------------------------------------ conversions


def ab_icrn(delta: float, t: float) -> float:
    """Ambegaokar-Baratoff IcRn product (V): (pi Delta/2e) tanh(Delta/2 kB T).

    ``delta`` in eV; t = 0 gives the zero-temperature value pi*Delta/2e.
    """
    if delta <= 0:
        raise DomainError(f"gap must be positive, got {delta!r}")
    if t < 0:
        raise DomainError(f"temperature must be non-negative, got {t!r}")
    thermal = 1.0 if t == 0 else np.tanh(delta / (2.0 * K_B_EV * t))
    return 0.5 * np.pi * delta * thermal


def ic_from_rn(rn: float, icrn_product: float) -> float:
    """Critical current (A) from normal-state resistance and IcRn product."""
    if rn <= 0:
        raise DomainError(f"normal-state resistance must be positive, got {rn!r}")
    if icrn_product <= 0:
        raise DomainError(f"IcRn product must be positive, got {icrn_product!r}")
    return icrn_product / rn


def josephson_inductance(ic: float) -> float:
    """Zero-bias Josephson inductance L_J = Phi0/(2 pi Ic), in henries."""
    if ic <= 0:
        raise DomainError(f"critical current must be positive, got {ic!r}")
    return PHI0 / (2.0 * np.pi * ic)


def jc_from_calibration(specific_resistance: float, icrn_product: float) -> float:
    """Critical current density (A/m^2) = IcRn / rho_s."""
    if specific_resistance <= 0 or icrn_product <= 0:
        raise DomainError("specific resistance and IcRn product must be positive")
    return icrn_product / specific_resistance


# ------------------------------------------------------------------ fits


def _as_points(points, n_cols: int, what: str) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != n_cols:
        raise DomainError(f"{what} must be an (n, {n_cols}) array of points")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} contain non-finite values")
    return arr


def fit_area_scaling(samples) -> FitResult:
    """Fit R = rho_s / ((w - d)(h - d)) for specific resistance and bias.

    ``samples`` is a sequence of (design_width, design_height, resistance)
    triples in SI units. The bias d is constrained to [0, smallest design
    dimension). Returns a result with params (specific_resistance,
    dimension_bias).
    """
    arr = _as_points(samples, 3, "area samples")
    if arr.shape[0] < 4:
        raise DomainError("at least 4 samples are required")
    if np.any(arr <= 0):
        raise DomainError("dimensions and resistances must be positive")
    w, hgt, r = arr.T
    areas = w * hgt
    if np.unique(areas.round(decimals=20)).size < 2:
        raise RankDeficiencyError(
            "all samples share one area; the bias and specific resistance "
            "are not separable"
        )
    min_dim = min(w.min(), hgt.min())
    rho_scale = float(np.median(r * areas))

    def model(p, x):
        d = p[1] * min_dim
        return p[0] * rho_scale / ((x[:, 0] - d) * (x[:, 1] - d))

    data = Trace(x=np.column_stack([w, hgt]), y=r)
    result = fit(
        FitProblem(
            model=model,
            initial_params=[1.0, 0.05],
            lower_bounds=[1e-12, 0.0],
            upper_bounds=[np.inf, 1.0 - 1e-9],
            param_names=("specific_resistance", "dimension_bias"),
        ),
        data,
    )
    scale = np.array([rho_scale, min_dim])
    return result.reparametrized(
        values=result.params * scale,
        jacobian=np.diag(scale),
        param_names=("specific_resistance", "dimension_bias"),
    )


def fit_exposure_law(points, fix_exponent: float | None = None) -> FitResult:
    """Fit J_c = K * E^p to (exposure, jc) points in log-log space.

    With ``fix_exponent`` only the prefactor is free; its covariance row
    stays in the result with zero uncertainty for the pinned exponent.
    Returns params (prefactor, exponent).
    """
    arr = _as_points(points, 2, "exposure points")
    if np.any(arr <= 0):
        raise DomainError("exposures and critical current densities must be positive")
    log_e, log_j = np.log(arr[:, 0]), np.log(arr[:, 1])
    if fix_exponent is None and np.unique(log_e).size < 2:
        raise RankDeficiencyError(
            "a free exponent needs at least two distinct exposures"
        )
    if arr.shape[0] < 3:
        raise DomainError("at least 3 points are required")
    data = Trace(x=log_e, y=log_j)
    if fix_exponent is None:
        result = fit(
            FitProblem(
                model=lambda p, x: p[0] + p[1] * x,
                initial_params=[log_j.mean(), -0.5],
            ),
            data,
        )
        k_hat = float(np.exp(result.params[0]))
        return result.reparametrized(
            values=np.array([k_hat, result.params[1]]),
            jacobian=np.array([[k_hat, 0.0], [0.0, 1.0]]),
            param_names=("prefactor", "exponent"),
        )
    result = fit(
        FitProblem(
            model=lambda p, x: p[0] + fix_exponent * x,
            initial_params=[log_j.mean()],
        ),
        data,
    )
    k_hat = float(np.exp(result.params[0]))
    cov = np.zeros((2, 2))
    cov[0, 0] = k_hat**2 * result.covariance[0, 0]
    return FitResult(
        params=np.array([k_hat, fix_exponent]),
        covariance=cov,
        residual_norm=result.residual_norm,
        iterations=result.iterations,
        converged=result.converged,
        param_names=("prefactor", "exponent"),
        flags=result.flags,
    )


def fit_exposure_law_shared(
    groups: Mapping[str, Sequence], fix_exponent: float | None = None
) -> tuple[FitResult, tuple[str, ...]]:
    """Joint exposure-law fit with per-group prefactors and one exponent.

    Returns the result (params: one prefactor per group, exponent last)
    and the group ordering used.
    """
    names = tuple(sorted(groups))
    if len(names) < 1:
        raise DomainError("at least one group is required")
    blocks = [_as_points(groups[g], 2, f"exposure points of {g!r}") for g in names]
    if any(np.any(b <= 0) for b in blocks):
        raise DomainError("exposures and critical current densities must be positive")
    idx = np.concatenate([np.full(len(b), i) for i, b in enumerate(blocks)])
    log_e = np.log(np.concatenate([b[:, 0] for b in blocks]))
    log_j = np.log(np.concatenate([b[:, 1] for b in blocks]))
    if log_e.size < len(names) + (1 if fix_exponent is None else 0) + 1:
        raise DomainError("not enough points for the requested parameters")
    n_g = len(names)
    x = np.column_stack([idx, log_e])

    if fix_exponent is None:

        def model(p, x):
            return p[x[:, 0].astype(int)] + p[n_g] * x[:, 1]

        initial = [log_j.mean()] * n_g + [-0.5]
    else:

        def model(p, x):
            return p[x[:, 0].astype(int)] + fix_exponent * x[:, 1]

        initial = [log_j.mean()] * n_g

    result = fit(FitProblem(model=model, initial_params=initial), Trace(x=x, y=log_j))
    k_hats = np.exp(result.params[:n_g])
    if fix_exponent is None:
        values = np.append(k_hats, result.params[n_g])
        jac = np.diag(np.append(k_hats, 1.0))
        out = result.reparametrized(
            values=values,
            jacobian=jac,
            param_names=tuple(f"prefactor_{g}" for g in names) + ("exponent",),
        )
    else:
        values = np.append(k_hats, fix_exponent)
        cov = np.zeros((n_g + 1, n_g + 1))
        cov[:n_g, :n_g] = (
            np.outer(k_hats, k_hats) * result.covariance[:n_g, :n_g]
        )
        out = FitResult(
            params=values,
            covariance=cov,
            residual_norm=result.residual_norm,
            iterations=result.iterations,
            converged=result.converged,
            param_names=tuple(f"prefactor_{g}" for g in names) + ("exponent",),
            flags=result.flags,
        )
    return out, names


def fit_annealing(points) -> FitResult:
    """Fit J_c(t)/J_c(0) = (1 - alpha) exp(-t/tau) + alpha.

    ``points`` are (time s, ratio) pairs with ratios in (0, 1]; alpha is
    the saturation fraction, tau the critical time. Returns params
    (alpha, tau).
    """
    arr = _as_points(points, 2, "annealing points")
    if arr.shape[0] < 3:
        raise DomainError("at least 3 points are required")
    t, ratio = arr.T
    if np.any(t < 0):
        raise DomainError("annealing times must be non-negative")
    if np.any(ratio > 1.0 + 1e-12):
        raise DomainError(
            "ratios above 1 are outside the model (the critical current "
            "density cannot exceed its initial value)"
        )
    if np.any(ratio <= 0):
        raise DomainError("ratios must be positive")
    t_scale = float(t.max())
    if t_scale <= 0:
        raise RankDeficiencyError("all points at t = 0 cannot constrain tau")

    alpha0 = float(np.clip(ratio.min(), 1e-3, 0.9))
    # time at which the decaying part has dropped to 1/e, linearly located
    target = alpha0 + (1.0 - alpha0) / np.e
    below = np.nonzero(ratio <= target)[0]
    tau0 = float(t[below[0]]) / t_scale if below.size else 0.3
    tau0 = min(max(tau0, 1e-3), 10.0)

    def model(p, x):
        return (1.0 - p[0]) * np.exp(-x / (p[1] * t_scale)) + p[0]

    result = fit(
        FitProblem(
            model=model,
            initial_params=[alpha0, tau0],
            lower_bounds=[1e-9, 1e-9],
            upper_bounds=[1.0 - 1e-9, np.inf],
            param_names=("alpha", "tau"),
        ),
        Trace(x=t, y=ratio),
    )
    scale = np.array([1.0, t_scale])
    return result.reparametrized(
        values=result.params * scale,
        jacobian=np.diag(scale),
        param_names=("alpha", "tau"),
    )


# ------------------------------------------------------------- prediction


def predict_junction(
    geometry: JunctionGeometry, cal: WaferCalibration
) -> PredictedJunction:
    """Predict cryogenic junction parameters from design geometry.

    rn from the area law, ic via the calibrated IcRn product, then the
    Josephson inductance and E_J/h.
    """
    area = geometry.effective_area(cal.dimension_bias)
    rn = cal.specific_resistance / area
    ic = ic_from_rn(rn, cal.icrn_product)
    l_j = josephson_inductance(ic)
    ej_over_h = ic * PHI0 / (2.0 * np.pi * h)
    return PredictedJunction(rn=rn, ic=ic, l_j=l_j, ej_over_h=ej_over_h)


# ---------------------------------------------------------- IV simulation


def _sweep(i_values, phi, vel, beta_c, dt, window_steps, periods, max_windows, rtol, g_sub, v_gap):
    """Hold each bias until the window-averaged velocity converges.

    Windows snap to whole phase revolutions (interpolated 2*pi crossings)
    so the running-state average is free of partial-period truncation
    error; a trapped junction simply exhausts the step budget with a near
    zero average. Plain-python body, also compiled by numba as-is.
    """
    n = i_values.size
    v_avg = np.zeros(n)
    flags = np.zeros(n, dtype=np.int8)
    two_pi = 2.0 * np.pi

    def step(p, v, ib):
        g1 = g_sub if (v_gap > 0.0 and abs(v) < v_gap) else 1.0
        k1p = v
        k1v = (ib - np.sin(p) - g1 * v) / beta_c
        v2 = v + 0.5 * dt * k1v
        g2 = g_sub if (v_gap > 0.0 and abs(v2) < v_gap) else 1.0
        k2p = v2
        k2v = (ib - np.sin(p + 0.5 * dt * k1p) - g2 * v2) / beta_c
        v3 = v + 0.5 * dt * k2v
        g3 = g_sub if (v_gap > 0.0 and abs(v3) < v_gap) else 1.0
        k3p = v3
        k3v = (ib - np.sin(p + 0.5 * dt * k2p) - g3 * v3) / beta_c
        v4 = v + dt * k3v
        g4 = g_sub if (v_gap > 0.0 and abs(v4) < v_gap) else 1.0
        k4p = v4
        k4v = (ib - np.sin(p + dt * k3p) - g4 * v4) / beta_c
        p_new = p + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        v_new = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        return p_new, v_new

    settle_steps = int(max(50.0, 10.0 * beta_c) / dt)
    for idx in range(n):
        ib = i_values[idx]
        for _ in range(settle_steps):
            phi, vel = step(phi, vel, ib)
        prev = np.inf
        converged = False
        for _w in range(max_windows):
            phi_start = phi
            adv_prev = 0.0
            revs = 0
            t_rev = 0.0
            next_mark = two_pi
            k = 0
            while k < window_steps and revs < periods:
                phi, vel = step(phi, vel, ib)
                k += 1
                adv = abs(phi - phi_start)
                if adv >= next_mark:
                    frac = (next_mark - adv_prev) / (adv - adv_prev)
                    t_rev = (k - 1 + frac) * dt
                    revs += 1
                    next_mark += two_pi
                adv_prev = adv
            if revs >= 1:
                sign = 1.0 if phi >= phi_start else -1.0
                avg = sign * two_pi * revs / t_rev
            else:
                avg = (phi - phi_start) / (k * dt)
            if abs(avg - prev) <= rtol * max(abs(avg), 1e-8):
                v_avg[idx] = avg
                converged = True
                break
            prev = avg
        if not converged:
            v_avg[idx] = prev
            flags[idx] = 1
    return v_avg, phi, vel, flags


_KERNEL = None


def _get_kernel():
    """Compile the sweep kernel on first use; fall back to pure python."""
    global _KERNEL
    if _KERNEL is None:
        try:
            from numba import njit

            _KERNEL = njit(cache=True)(_sweep)
        except ImportError:  # pragma: no cover - numba present in normal installs
            _KERNEL = _sweep
    return _KERNEL


def simulate_rcsj_iv(
    ic: float,
    rn: float,
    capacitance: float,
    ramp: RcsjRamp,
    subgap_resistance: float = 8e3,
    gap_voltage: float | None = None,
) -> tuple[IvTrace, IvTrace | None]:
    """Simulate hysteretic IV curves of the RCSJ circuit model.

    Integrates beta_c phi'' + g(v) phi' + sin(phi) = i in dimensionless
    time tau = t * 2 pi Ic Rn / Phi0 with fixed-step RK4, holding each bias
    value until the window-averaged voltage converges (relative change
    below 1e-4 between successive windows; windows snap to whole phase
    revolutions in the running state). The up sweep starts from rest, the
    down sweep continues from the running state.

    With ``gap_voltage`` set, damping switches to ``subgap_resistance``
    below that voltage, mimicking the quasiparticle branch; by default the
    damping is uniform (single-R model).

    Returns (up, down); down is None when the ramp is one-directional.
    """
    if ic <= 0 or rn <= 0 or capacitance <= 0:
        raise DomainError("ic, rn and capacitance must be positive")
    if ramp.n_steps < 100:
        raise DomainError("at least 100 ramp steps are required")
    if ramp.i_max == 0:
        raise DomainError("ramp amplitude cannot be zero")

    beta_c = 2.0 * np.pi * ic * rn**2 * capacitance / PHI0
    dt = min(0.02, 2.5 * beta_c)
    window_steps = int(round(max(200.0, 40.0 * beta_c) / dt))
    g_sub = rn / subgap_resistance
    v_gap_norm = -1.0 if gap_voltage is None else gap_voltage / (ic * rn)

    flags: list[str] = []
    if beta_c > 1.0:
        retrap = 4.0 / (np.pi * np.sqrt(beta_c))
        width = max(0.0, 1.0 - retrap)
        if width > 0 and abs(ramp.i_max) / ic / ramp.n_steps > width / 4.0:
            flags.append("coarse-bias-grid")

    kernel = _get_kernel()
    i_up = np.linspace(0.0, ramp.i_max / ic, ramp.n_steps)
    v_up, phi, vel, k_flags = kernel(
        i_up, 0.0, 0.0, beta_c, dt, window_steps, 25, 400, 1e-4, g_sub, v_gap_norm
    )
    trace_flags = tuple(flags) + (("window-not-converged",) if k_flags.any() else ())
    v_up = np.where(np.abs(v_up) < 1e-7, 0.0, v_up)
    up = IvTrace(
        current=i_up * ic,
        voltage=v_up * ic * rn,
        sweep_direction="up",
        flags=trace_flags,
    )
    if not ramp.both_directions:
        return up, None

    i_down = i_up[::-1].copy()
    v_down, _, _, k_flags_d = kernel(
        i_down, phi, vel, beta_c, dt, window_steps, 25, 400, 1e-4, g_sub, v_gap_norm
    )
    v_down = np.where(np.abs(v_down) < 1e-7, 0.0, v_down)
    down = IvTrace(
        current=i_down * ic,
        voltage=v_down * ic * rn,
        sweep_direction="down",
        flags=tuple(flags) + (("window-not-converged",) if k_flags_d.any() else ()),
    )
    return up, down


def extract_iv_parameters(trace: IvTrace, high_bias_fraction: float = 0.2) -> dict:
    """Switching current, normal resistance and their product from an up sweep.

    The switching current sits at the largest voltage jump; rn is the
    slope of a straight-line fit over the top ``high_bias_fraction`` of
    the bias range.
    """
    if trace.sweep_direction != "up":
        raise DomainError("IV parameter extraction expects the up sweep")
    cur, vol = trace.current, np.abs(trace.voltage)
    if cur.size < 10:
        raise AnalysisError("too few IV points to locate the switching current")
    jumps = np.diff(vol)
    j = int(np.argmax(jumps))
    if jumps[j] <= 0:
        raise AnalysisError("no voltage onset found; junction never switched")
    ic = float(cur[j + 1])
    hi = cur >= (1.0 - high_bias_fraction) * cur.max()
    if hi.sum() < 2:
        raise AnalysisError("too few high-bias points for a resistance fit")
    slope, _ = np.polyfit(cur[hi], trace.voltage[hi], 1)
    rn = float(slope)
    if rn <= 0:
        raise AnalysisError("non-positive high-bias slope; check the sweep")
    return {"ic": ic, "rn": rn, "icrn_product": ic * rn}
