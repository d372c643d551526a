"""Transmon spectra, coherence-decay fits, and loss budgets.

The chain mirrors how a cooldown is analyzed: junction calibration data
predicts E_J, the shunt capacitance sets E_C, charge-basis diagonalization
gives the spectrum, and time-domain traces are reduced to (T1, T2*, T2_echo)
quality factors that feed participation and temperature models.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.constants import e, h, k
from scipy.linalg import eigvalsh_tridiagonal

from .errors import (
    DomainError,
    FitEvaluationError,
    RankDeficiencyError,
    UnsupportedRegimeError,
)
from .fitkit import FitProblem, FitResult, Trace, fit
from .junction import JunctionGeometry, WaferCalibration, predict_junction
from .physics import quasiparticle_density, tc_from_delta0

__all__ = [
    "SPECIFIC_CAPACITANCE",
    "TransmonParams",
    "CoherenceRecord",
    "transmon_spectrum",
    "transmon_from_design",
    "fit_t1",
    "fit_ramsey",
    "fit_echo",
    "loss_budget_fit",
    "loss_budget_model",
    "quasiparticle_q",
    "q_vs_temperature_model",
]

SPECIFIC_CAPACITANCE = 0.05  # F/m^2 (50 fF/um^2), typical AlOx trilayer
TRANSMON_RATIO = 20.0  # E_J/E_C above which charge dispersion is negligible
_ASYMPTOTIC_FLOOR = 5.0


@dataclass(frozen=True)
class TransmonParams:
    """Designed (or extracted) transmon parameters, energies in Hz.

    ``participation_pj`` is the junction's share of the total capacitance,
    used as the participation ratio in loss budgets.
    """

    ej_over_h: float
    ec_over_h: float
    f01: float
    anharmonicity: float
    c_sigma: float
    junction_capacitance: float
    participation_pj: float
    flags: tuple = ()

    def __post_init__(self):
        for name in ("ej_over_h", "ec_over_h", "f01", "c_sigma", "junction_capacitance"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be positive, got {value}")
        if self.anharmonicity >= 0:
            raise DomainError(
                f"anharmonicity must be negative, got {self.anharmonicity}"
            )
        if not 0.0 < self.participation_pj < 1.0:
            raise DomainError(
                f"participation_pj must lie in (0, 1), got {self.participation_pj}"
            )
        ratio = self.ej_over_h / self.ec_over_h
        flags = tuple(self.flags)
        if ratio >= TRANSMON_RATIO:
            if "transmon-regime" not in flags:
                flags = flags + ("transmon-regime",)
        else:
            warnings.warn(
                f"E_J/E_C = {ratio:.2f} is below {TRANSMON_RATIO:g}; charge "
                "dispersion will not be negligible",
                UserWarning,
                stacklevel=2,
            )
        object.__setattr__(self, "flags", flags)


@dataclass(frozen=True)
class CoherenceRecord:
    """One qubit's coherence summary with quality factors by construction.

    q1 = 2*pi*f_q*t1 always holds exactly; the same identity ties the
    optional T2 entries to their quality factors.  Build records through
    :meth:`from_times` so the identities cannot drift.
    """

    f_q: float
    t1: float
    q1: float
    t2_star: float | None = None
    q2_star: float | None = None
    t2_echo: float | None = None
    q2_echo: float | None = None
    temperature: float | None = None
    flags: tuple = ()

    def __post_init__(self):
        if self.f_q <= 0 or self.t1 <= 0:
            raise DomainError("f_q and t1 must be positive")
        self._check_identity("q1", self.q1, self.t1)
        for t_name, q_name in (("t2_star", "q2_star"), ("t2_echo", "q2_echo")):
            t_val = getattr(self, t_name)
            q_val = getattr(self, q_name)
            if (t_val is None) != (q_val is None):
                raise DomainError(f"{t_name} and {q_name} must be given together")
            if t_val is not None:
                if t_val <= 0:
                    raise DomainError(f"{t_name} must be positive, got {t_val}")
                self._check_identity(q_name, q_val, t_val)
        # 10% slack: the bound only holds up to the fit uncertainties
        if self.t2_star is not None and self.t2_star > 2.0 * self.t1 * 1.1:
            raise DomainError(
                f"t2_star = {self.t2_star:.3e} exceeds 2*t1 = {2 * self.t1:.3e} "
                "beyond fit uncertainty"
            )
        if self.temperature is not None and self.temperature <= 0:
            raise DomainError(f"temperature must be positive, got {self.temperature}")

    def _check_identity(self, name, q_val, t_val):
        expected = 2.0 * np.pi * self.f_q * t_val
        if not np.isclose(q_val, expected, rtol=1e-9, atol=0.0):
            raise DomainError(
                f"{name} = {q_val:.6e} violates 2*pi*f_q*t = {expected:.6e}; "
                "use CoherenceRecord.from_times"
            )

    @classmethod
    def from_times(cls, f_q, t1, t2_star=None, t2_echo=None, temperature=None):
        if f_q <= 0:
            raise DomainError(f"f_q must be positive, got {f_q}")
        omega = 2.0 * np.pi * f_q
        flags = ()
        if t2_star is not None and t2_echo is not None and t2_echo < t2_star:
            flags = ("echo-below-ramsey",)
        return cls(
            f_q=float(f_q),
            t1=float(t1),
            q1=omega * float(t1),
            t2_star=None if t2_star is None else float(t2_star),
            q2_star=None if t2_star is None else omega * float(t2_star),
            t2_echo=None if t2_echo is None else float(t2_echo),
            q2_echo=None if t2_echo is None else omega * float(t2_echo),
            temperature=None if temperature is None else float(temperature),
            flags=flags,
        )


def transmon_spectrum(ej_over_h, ec_over_h, mode="asymptotic", n_g=0.5, cutoff=20):
    """Transition frequency and anharmonicity of a single transmon, in Hz.

    ``asymptotic`` uses f01 = sqrt(8 E_J E_C)/h - E_C/h with anharmonicity
    -E_C/h, valid deep in the transmon regime; ``exact`` diagonalizes the
    Cooper-pair-box Hamiltonian in the charge basis truncated at
    ``|n| <= cutoff``.  Charge dispersion makes the exact answer depend
    (weakly) on the offset charge ``n_g``; the sweet spot 0.5 is the default.
    """
    if ej_over_h <= 0 or ec_over_h <= 0:
        raise DomainError("ej_over_h and ec_over_h must be positive")
    ratio = ej_over_h / ec_over_h
    if mode == "asymptotic":
        if ratio < _ASYMPTOTIC_FLOOR:
            raise UnsupportedRegimeError(
                f"E_J/E_C = {ratio:.2f} < {_ASYMPTOTIC_FLOOR:g}: the asymptotic "
                "expansion is unreliable, use mode='exact'"
            )
        f01 = np.sqrt(8.0 * ej_over_h * ec_over_h) - ec_over_h
        return {"f01": float(f01), "anharmonicity": float(-ec_over_h)}
    if mode != "exact":
        raise DomainError(f"mode must be 'asymptotic' or 'exact', got {mode!r}")
    cutoff = int(cutoff)
    if cutoff < 5:
        raise DomainError(f"cutoff must be at least 5, got {cutoff}")
    n = np.arange(-cutoff, cutoff + 1, dtype=float)
    diagonal = 4.0 * ec_over_h * (n - n_g) ** 2
    off_diagonal = np.full(n.size - 1, -0.5 * ej_over_h)
    levels = eigvalsh_tridiagonal(
        diagonal, off_diagonal, select="i", select_range=(0, 2)
    )
    f01 = levels[1] - levels[0]
    anharmonicity = levels[2] - 2.0 * levels[1] + levels[0]
    return {"f01": float(f01), "anharmonicity": float(anharmonicity)}


def transmon_from_design(
    c_sigma,
    geometry: JunctionGeometry,
    calibration: WaferCalibration,
    specific_capacitance=SPECIFIC_CAPACITANCE,
):
    """Predict transmon parameters from layout and wafer calibration.

    E_C comes from the total shunt capacitance, E_J from the resistance-area
    calibration, and the junction's self-capacitance (specific capacitance
    times effective area) sets the participation ratio.
    """
    if c_sigma <= 0:
        raise DomainError(f"c_sigma must be positive, got {c_sigma}")
    if specific_capacitance <= 0:
        raise DomainError(
            f"specific_capacitance must be positive, got {specific_capacitance}"
        )
    predicted = predict_junction(geometry, calibration)
    ec_over_h = e**2 / (2.0 * c_sigma * h)
    # exact diagonalization is cheap and stays valid outside the transmon regime
    spectrum = transmon_spectrum(predicted.ej_over_h, ec_over_h, mode="exact")
    c_j = specific_capacitance * geometry.effective_area(calibration.dimension_bias)
    if c_j >= c_sigma:
        raise DomainError(
            f"junction capacitance {c_j:.3e} F must stay below c_sigma "
            f"{c_sigma:.3e} F"
        )
    return TransmonParams(
        ej_over_h=predicted.ej_over_h,
        ec_over_h=ec_over_h,
        f01=spectrum["f01"],
        anharmonicity=spectrum["anharmonicity"],
        c_sigma=float(c_sigma),
        junction_capacitance=c_j,
        participation_pj=c_j / c_sigma,
    )


def _decay_trace(trace: Trace, minimum_points: int):
    x = np.asarray(trace.x, dtype=float)
    y = np.asarray(trace.y, dtype=float)
    if x.ndim != 1:
        raise DomainError("decay traces need a 1-D delay axis")
    if x.size < minimum_points:
        raise DomainError(
            f"need at least {minimum_points} points, got {x.size}"
        )
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("delays and signal must be finite")
    if np.any(x < 0):
        raise DomainError("delays must be non-negative")
    order = np.argsort(x, kind="stable")
    x, y = x[order], y[order]
    if np.any(np.diff(x) <= 0):
        raise DomainError("delays must be distinct")
    return x, y


def _unbounded_decay(x, y, names, flag, iterations):
    mean = float(np.mean(y))
    residual = y - mean
    n = y.size
    covariance = np.zeros((3, 3))
    covariance[0, 0] = np.inf
    covariance[2, 2] = float(np.var(residual)) / n
    return FitResult(
        params=np.array([np.nan, 0.0, mean]),
        covariance=covariance,
        residual_norm=float(np.linalg.norm(residual)),
        iterations=iterations,
        converged=False,
        param_names=names,
        flags=(flag,),
    )


def _fit_exponential_decay(x, y, names, unbounded_flag):
    """Fit A*exp(-t/T) + B; non-decaying data gets an unbounded-T fallback."""
    span = x[-1] - x[0]
    tail = max(3, x.size // 5)
    head = max(3, x.size // 10)
    b0 = float(np.mean(y[-tail:]))
    a0 = float(np.mean(y[:head])) - b0
    spread = float(np.ptp(y))
    if spread == 0.0:
        return _unbounded_decay(x, y, names, unbounded_flag, 0)
    if abs(a0) < 0.05 * spread:
        a0 = np.sign(a0 or 1.0) * spread
    # crude T from where the excursion falls below a0/e
    below = np.nonzero(np.abs(y - b0) < abs(a0) / np.e)[0]
    t0 = float(x[below[0]]) if below.size and below[0] > 0 else span / 3.0
    t0 = min(max(t0, span * 1e-3), span * 10.0)

    def model(p, t):
        return p[1] * np.exp(-t / p[0]) + p[2]

    problem = FitProblem(
        model=model,
        initial_params=np.array([t0, a0, b0]),
        lower_bounds=np.array([span * 1e-6, -np.inf, -np.inf]),
        upper_bounds=np.array([np.inf, np.inf, np.inf]),
        param_names=names,
    )
    try:
        result = fit(problem, Trace(x=x, y=y))
    except (RankDeficiencyError, FitEvaluationError):
        return _unbounded_decay(x, y, names, unbounded_flag, 1)
    t_hat, a_hat = result.params[0], result.params[1]
    sigma_a = result.param_uncertainties[1]
    undecided = (
        not np.isfinite(t_hat)
        or t_hat > 50.0 * span
        or (np.isfinite(sigma_a) and abs(a_hat) < 2.0 * sigma_a)
    )
    if undecided:
        return _unbounded_decay(x, y, names, unbounded_flag, result.iterations)
    return result


def fit_t1(trace: Trace) -> FitResult:
    """Energy-relaxation fit A*exp(-t/T1) + B.

    Non-decaying data cannot bound T1 from above: the result then carries
    t1 = nan with infinite uncertainty and the 't1-unbounded' flag.
    """
    x, y = _decay_trace(trace, 10)
    return _fit_exponential_decay(x, y, ("t1", "amplitude", "offset"), "t1-unbounded")


def fit_echo(trace: Trace) -> FitResult:
    """Hahn-echo decay fit A*exp(-t/T2_echo) + B."""
    x, y = _decay_trace(trace, 10)
    return _fit_exponential_decay(
        x, y, ("t2_echo", "amplitude", "offset"), "t2-unbounded"
    )


_RAMSEY_NAMES = ("t2_star", "detuning", "phase", "amplitude", "offset")


def _ramsey_fringe_guess(x, y):
    """Spectral peak of the detrended record, or None when no fringe shows.

    The delay grid is resampled to uniform spacing for the FFT only; the
    fit itself runs on the raw points.
    """
    n = x.size
    dx = np.diff(x)
    if np.allclose(dx, dx[0], rtol=1e-6, atol=0.0):
        xg, yg = x, y
    else:
        xg = np.linspace(x[0], x[-1], n)
        yg = np.interp(xg, x, y)
    spectrum = np.abs(np.fft.rfft(yg - np.mean(yg)))
    frequencies = np.fft.rfftfreq(n, d=xg[1] - xg[0])
    if spectrum.size < 4:
        return None
    peak = 1 + int(np.argmax(spectrum[1:]))
    floor = float(np.median(spectrum[1:]))
    # the lowest bin also catches the decay envelope, so a fringe must sit
    # above it AND clear the typical spectral level
    if peak < 2 or spectrum[peak] < 3.0 * floor:
        return None
    damp = float(np.mean(np.exp(-xg / max(x[-1] / 3.0, x[-1] * 1e-3))))
    amplitude = 2.0 * spectrum[peak] / (n * max(damp, 1e-3))
    z = np.fft.rfft(yg - np.mean(yg))[peak]
    phase = float(np.angle(z) - 2.0 * np.pi * frequencies[peak] * x[0])
    return float(frequencies[peak]), amplitude, phase


def fit_ramsey(trace: Trace) -> FitResult:
    """Ramsey fit A*exp(-t/T2*)*cos(2*pi*detuning*t + phase) + B.

    The fringe frequency is seeded from the spectrum of the record.  When no
    spectral peak clears three times the floor the oscillating model is
    unidentifiable and a plain exponential is fitted instead, flagged
    'no-fringe' with detuning and phase pinned at zero.
    """
    x, y = _decay_trace(trace, 20)
    guess = _ramsey_fringe_guess(x, y)
    if guess is None:
        inner = _fit_exponential_decay(
            x, y, ("t2_star", "amplitude", "offset"), "t2-unbounded"
        )
        params = np.array(
            [inner.params[0], 0.0, 0.0, inner.params[1], inner.params[2]]
        )
        covariance = np.zeros((5, 5))
        keep = np.array([0, 3, 4])
        covariance[np.ix_(keep, keep)] = inner.covariance
        return FitResult(
            params=params,
            covariance=covariance,
            residual_norm=inner.residual_norm,
            iterations=inner.iterations,
            converged=inner.converged,
            param_names=_RAMSEY_NAMES,
            flags=("no-fringe",) + inner.flags,
        )

    f0, a0, phi0 = guess
    span = x[-1] - x[0]
    b0 = float(np.mean(y))
    t0 = span / 3.0

    def model(p, t):
        return p[3] * np.exp(-t / p[0]) * np.cos(2.0 * np.pi * p[1] * t + p[2]) + p[4]

    problem = FitProblem(
        model=model,
        initial_params=np.array([t0, f0, phi0, a0, b0]),
        lower_bounds=np.array([span * 1e-6, -np.inf, -np.inf, -np.inf, -np.inf]),
        upper_bounds=None,
        param_names=_RAMSEY_NAMES,
    )
    result = fit(problem, Trace(x=x, y=y))
    # canonicalize: detuning >= 0 (cos is even in its frequency) and
    # amplitude >= 0, phase wrapped into (-pi, pi]
    t2, detuning, phase, amplitude, offset = result.params
    jacobian = np.eye(5)
    if detuning < 0:
        detuning, phase = -detuning, -phase
        jacobian[1, 1] = jacobian[2, 2] = -1.0
    if amplitude < 0:
        amplitude, phase = -amplitude, phase + np.pi
        jacobian[3, 3] = -1.0
    phase = float(np.angle(np.exp(1j * phase)))
    values = np.array([t2, detuning, phase, amplitude, offset])
    if not np.allclose(jacobian, np.eye(5)) or values[2] != result.params[2]:
        result = result.reparametrized(values, jacobian, _RAMSEY_NAMES)
    return result


def loss_budget_model(p_j, q_junction, q_other):
    """Composite Q1 for a junction participation p_j: series loss channels."""
    p = np.asarray(p_j, dtype=float)
    return 1.0 / (p / q_junction + (1.0 - p) / q_other)


def loss_budget_fit(points) -> FitResult:
    """Fit 1/Q1 = p_j/Q_J + (1 - p_j)/Q_0 over (p_j, Q1) samples.

    The junction and everything-else channels are only separable when the
    participation actually varies; a single p_j value is rank deficient.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError(f"expected (n, 2) (p_j, q1) samples, got {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise DomainError("loss-budget samples must be finite")
    p, q1 = pts[:, 0], pts[:, 1]
    if np.any(q1 <= 0):
        raise DomainError("q1 values must be positive")
    if np.any(p <= 0) or np.any(p > 1):
        raise DomainError("participation values must lie in (0, 1]")
    if np.unique(np.round(p, 12)).size < 2:
        raise RankDeficiencyError(
            "all samples share one participation value; Q_J and Q_0 are "
            "not separable"
        )
    if pts.shape[0] < 3:
        raise DomainError(f"need at least 3 samples, got {pts.shape[0]}")
    y = 1.0 / q1
    design = np.column_stack([p, 1.0 - p])
    slopes, *_ = np.linalg.lstsq(design, y, rcond=None)
    fallback = 1.0 / np.mean(y)
    initial = np.array(
        [1.0 / s if s > 0 else fallback for s in slopes], dtype=float
    )

    def model(params, x):
        return x / params[0] + (1.0 - x) / params[1]

    problem = FitProblem(
        model=model,
        initial_params=np.clip(initial, 1.0, 1e12),
        lower_bounds=np.array([1.0, 1.0]),
        upper_bounds=None,
        param_names=("q_junction", "q_other"),
    )
    return fit(problem, Trace(x=p, y=y))


def quasiparticle_q(f_q, t, delta):
    """Quality factor of quasiparticle tunneling loss at qubit frequency f_q.

    Q_qp = (pi/x_qp)*sqrt(h*f_q/(2*Delta)); the thermal quasiparticle
    density empties exponentially as T -> 0, so Q_qp diverges there.
    ``delta`` is the superconducting gap in eV.
    """
    if f_q <= 0 or delta <= 0:
        raise DomainError("f_q and delta must be positive")
    if t < 0:
        raise DomainError(f"temperature must be non-negative, got {t}")
    x_qp = quasiparticle_density(t, delta)
    if x_qp == 0.0:
        return np.inf
    return float(np.pi / x_qp * np.sqrt(h * f_q / (2.0 * delta * e)))


def q_vs_temperature_model(temperatures, f_q, delta, q1_zero, t_ref=None):
    """Composite Q1(T) from a thermal-photon bath plus quasiparticle loss.

    1/Q1 = 1/Q_bath + 1/Q_qp with Q_bath(T) = q1_zero*tanh(h*f_q/(2*k*T)),
    optionally renormalized so the bath term equals q1_zero at ``t_ref``
    (matching an anchor measurement) instead of at T = 0.
    """
    t = np.atleast_1d(np.asarray(temperatures, dtype=float))
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise DomainError("temperatures must be positive and finite")
    if f_q <= 0 or delta <= 0 or q1_zero <= 0:
        raise DomainError("f_q, delta, and q1_zero must be positive")
    tc = tc_from_delta0(delta)
    if np.any(t >= tc):
        raise DomainError(
            f"temperatures must stay below tc = {tc:.3f} K for gap {delta:.3e} eV"
        )
    argument = h * f_q / (2.0 * k * t)
    normalization = 1.0
    if t_ref is not None:
        if t_ref <= 0:
            raise DomainError(f"t_ref must be positive, got {t_ref}")
        normalization = np.tanh(h * f_q / (2.0 * k * t_ref))
    q_bath = q1_zero * np.tanh(argument) / normalization
    q_qp = np.array([quasiparticle_q(f_q, ti, delta) for ti in t])
    return 1.0 / (1.0 / q_bath + 1.0 / q_qp)
