"""Shared weighted least-squares engine.

A small Levenberg-Marquardt implementation with box bounds handled by
smooth reparametrization, numeric Jacobians, and profile-likelihood
confidence intervals. All fitting in the toolkit funnels through here so
that damping, convergence and uncertainty conventions are uniform.

Conventions:

* weights are 1/sigma^2 per point; with explicit weights the covariance is
  (J^T W J)^-1, without them it is rescaled by the reduced chi-square,
* bounded parameters ride a logistic map (two-sided) or a log map
  (one-sided) internally; results are reported in external units,
* Jacobians are central finite differences with relative step 1e-6,
* a fit that runs out of iterations returns ``converged=False`` instead of
  raising; only non-finite models and degenerate problems raise.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.special import expit, logit
from scipy.stats import norm

from .errors import DomainError, FitEvaluationError, RankDeficiencyError

__all__ = [
    "ConfidenceInterval",
    "FitProblem",
    "FitResult",
    "Trace",
    "fit",
    "minimize_residuals",
    "profile_confidence",
]

_LAMBDA_INIT = 1e-3
_LAMBDA_MAX = 1e12
_FD_REL_STEP = 1e-6


@dataclass(frozen=True)
class Trace:
    """A sampled curve: y(x) plus bookkeeping the analyses can carry along.

    ``x`` is usually a 1-D abscissa but may be (n, k) for models with
    several predictors per point (e.g. width/height pairs).
    """

    x: np.ndarray
    y: np.ndarray
    x_unit: str = ""
    y_unit: str = ""
    label: str = ""
    extras: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y))
        y = y.astype(complex) if np.iscomplexobj(y) else y.astype(float)
        if y.ndim != 1 or x.ndim not in (1, 2) or x.shape[0] != y.shape[0]:
            raise DomainError(
                f"x and y must share their leading dimension, got {x.shape} "
                f"and {y.shape}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.y.size


@dataclass(frozen=True)
class FitProblem:
    """A curve model plus everything needed to start a fit.

    ``model(params, x)`` returns the prediction for ``x``; it may be
    complex-valued, in which case residuals are the stacked real and
    imaginary parts.
    """

    model: Callable[[np.ndarray, np.ndarray], np.ndarray]
    initial_params: np.ndarray
    lower_bounds: np.ndarray | None = None
    upper_bounds: np.ndarray | None = None
    weights: np.ndarray | None = None
    max_iterations: int = 200
    tolerance: float = 1e-10
    param_names: tuple[str, ...] | None = None


@dataclass(frozen=True)
class FitResult:
    """Converged (or not) parameter estimates with uncertainties.

    ``covariance`` rows/columns follow ``params``; ``flags`` collects
    non-fatal conditions ('bounds', 'rank-deficient', ...).
    """

    params: np.ndarray
    covariance: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    param_names: tuple[str, ...] | None = None
    flags: tuple[str, ...] = ()

    @property
    def param_uncertainties(self) -> np.ndarray:
        d = np.diag(self.covariance).copy()
        d[d < 0] = np.nan
        return np.sqrt(d)

    def _index(self, name: str) -> int:
        if self.param_names is None:
            raise KeyError("result carries no parameter names")
        try:
            return self.param_names.index(name)
        except ValueError:
            raise KeyError(f"unknown parameter {name!r}") from None

    def value(self, name: str) -> float:
        return float(self.params[self._index(name)])

    def uncertainty(self, name: str) -> float:
        return float(self.param_uncertainties[self._index(name)])

    def reparametrized(
        self,
        values: np.ndarray,
        jacobian: np.ndarray,
        param_names: tuple[str, ...] | None = None,
    ) -> "FitResult":
        """Map the result through new = f(old) with d(new)/d(old) = jacobian."""
        jacobian = np.atleast_2d(np.asarray(jacobian, dtype=float))
        cov = jacobian @ self.covariance @ jacobian.T
        return replace(
            self,
            params=np.asarray(values, dtype=float),
            covariance=0.5 * (cov + cov.T),
            param_names=param_names,
        )


@dataclass(frozen=True)
class ConfidenceInterval:
    """Profile-likelihood interval for one parameter."""

    param_index: int
    level: float
    lower: float
    upper: float
    lower_open: bool = False
    upper_open: bool = False


class _BoundMap:
    """Smooth bijection between external (bounded) and internal parameters."""

    def __init__(self, lower, upper, n: int):
        lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, float)
        hi = np.full(n, np.inf) if upper is None else np.asarray(upper, float)
        if lo.shape != (n,) or hi.shape != (n,):
            raise DomainError("bounds must match the parameter count")
        if np.any(lo >= hi):
            raise DomainError("lower bounds must lie strictly below upper bounds")
        self.lo, self.hi = lo, hi
        self.two = np.isfinite(lo) & np.isfinite(hi)
        self.lo_only = np.isfinite(lo) & ~np.isfinite(hi)
        self.hi_only = ~np.isfinite(lo) & np.isfinite(hi)

    def check_initial(self, p: np.ndarray) -> None:
        if np.any(p < self.lo) or np.any(p > self.hi):
            raise DomainError("initial parameters violate the bounds")

    def to_internal(self, p: np.ndarray) -> np.ndarray:
        z = np.array(p, dtype=float)
        if self.two.any():
            span = self.hi[self.two] - self.lo[self.two]
            frac = (p[self.two] - self.lo[self.two]) / span
            z[self.two] = logit(np.clip(frac, 1e-12, 1 - 1e-12))
        if self.lo_only.any():
            z[self.lo_only] = np.log(
                np.maximum(p[self.lo_only] - self.lo[self.lo_only], 1e-300)
            )
        if self.hi_only.any():
            z[self.hi_only] = np.log(
                np.maximum(self.hi[self.hi_only] - p[self.hi_only], 1e-300)
            )
        return z

    def to_external(self, z: np.ndarray) -> np.ndarray:
        # runaway internal steps overflow exp to inf; the caller's divergence
        # handling deals with that, so keep the warnings quiet here
        p = np.array(z, dtype=float)
        with np.errstate(over="ignore"):
            if self.two.any():
                span = self.hi[self.two] - self.lo[self.two]
                p[self.two] = self.lo[self.two] + span * expit(z[self.two])
            if self.lo_only.any():
                p[self.lo_only] = self.lo[self.lo_only] + np.exp(z[self.lo_only])
            if self.hi_only.any():
                p[self.hi_only] = self.hi[self.hi_only] - np.exp(z[self.hi_only])
        return p

    def scale(self, z: np.ndarray) -> np.ndarray:
        """|dp/dz| per parameter, for chaining Jacobians back to p-space."""
        s = np.ones_like(np.asarray(z, dtype=float))
        with np.errstate(over="ignore"):
            if self.two.any():
                span = self.hi[self.two] - self.lo[self.two]
                sig = expit(z[self.two])
                s[self.two] = span * sig * (1.0 - sig)
            if self.lo_only.any():
                s[self.lo_only] = np.exp(z[self.lo_only])
            if self.hi_only.any():
                s[self.hi_only] = np.exp(z[self.hi_only])
        return s

    def near_bound(self, p: np.ndarray) -> bool:
        tol = 1e-6 * np.where(
            self.two, self.hi - self.lo, np.maximum(np.abs(p), 1.0)
        )
        with np.errstate(invalid="ignore"):
            at_lo = np.isfinite(self.lo) & (p - self.lo <= tol)
            at_hi = np.isfinite(self.hi) & (self.hi - p <= tol)
        return bool(np.any(at_lo | at_hi))


def _param_text(p, names) -> str:
    if names is None:
        return ", ".join(f"p[{i}]={v!r}" for i, v in enumerate(p))
    return ", ".join(f"{n}={v!r}" for n, v in zip(names, p))


def _jacobian(fn, p: np.ndarray, rel_step: float = _FD_REL_STEP) -> np.ndarray:
    """Central finite-difference Jacobian of a residual map."""
    p = np.asarray(p, dtype=float)
    cols = []
    for i in range(p.size):
        h = rel_step * max(abs(p[i]), 1.0)
        pp = p.copy()
        pm = p.copy()
        pp[i] += h
        pm[i] -= h
        cols.append((fn(pp) - fn(pm)) / (2.0 * h))
    return np.column_stack(cols) if cols else np.empty((0, 0))


def minimize_residuals(
    residual_fn: Callable[[np.ndarray], np.ndarray],
    initial_params,
    *,
    lower_bounds=None,
    upper_bounds=None,
    max_iterations: int = 200,
    tolerance: float = 1e-10,
    param_names: tuple[str, ...] | None = None,
) -> FitResult:
    """Levenberg-Marquardt on a raw residual map r(p).

    The damping factor starts at 1e-3, divides by 10 on accepted steps and
    multiplies by 10 on rejected ones. Covariance is (J^T J)^-1 of the
    residual Jacobian at the solution; callers that fold weights into the
    residuals therefore get (J^T W J)^-1.
    """
    p0 = np.atleast_1d(np.asarray(initial_params, dtype=float))
    n_par = p0.size
    if n_par == 0:
        raise DomainError("at least one parameter is required")
    bmap = _BoundMap(lower_bounds, upper_bounds, n_par)
    bmap.check_initial(p0)

    def resid_z(z):
        return np.asarray(residual_fn(bmap.to_external(z)), dtype=float)

    z = bmap.to_internal(p0)
    r = resid_z(z)
    if not np.all(np.isfinite(r)):
        raise FitEvaluationError(
            "model is not finite at the initial parameters: "
            + _param_text(p0, param_names)
        )
    chi2 = float(r @ r)
    lam = _LAMBDA_INIT
    flags: list[str] = []
    converged = False
    iterations = 0

    for iterations in range(1, max_iterations + 1):
        jac = _jacobian(resid_z, z)
        if not np.all(np.isfinite(jac)):
            if iterations == 1:
                raise FitEvaluationError(
                    "model is not finite near the initial parameters: "
                    + _param_text(bmap.to_external(z), param_names)
                )
            flags.append("jacobian-failed")
            break
        if np.linalg.matrix_rank(jac) < n_par:
            if iterations == 1:
                raise RankDeficiencyError(
                    "degenerate Jacobian: the data do not constrain all "
                    f"{n_par} parameters"
                )
            if "rank-deficient" not in flags:
                flags.append("rank-deficient")
        a = jac.T @ jac
        g = jac.T @ r
        diag = np.diag(a).copy()
        diag[diag <= 0] = max(diag.max(initial=0.0), 1.0) * 1e-14

        accepted = False
        while lam <= _LAMBDA_MAX:
            try:
                step = np.linalg.solve(a + lam * np.diag(diag), -g)
            except np.linalg.LinAlgError:
                step, *_ = np.linalg.lstsq(a + lam * np.diag(diag), -g, rcond=None)
            if np.max(np.abs(step) / (1.0 + np.abs(z))) < tolerance:
                converged = True
                break
            z_try = z + step
            try:
                r_try = resid_z(z_try)
                chi2_try = (
                    float(r_try @ r_try) if np.all(np.isfinite(r_try)) else np.inf
                )
            except (FloatingPointError, ValueError, ZeroDivisionError, OverflowError):
                chi2_try = np.inf
            if chi2_try < chi2:
                drop = (chi2 - chi2_try) / max(chi2, 1e-300)
                z, r, chi2 = z_try, r_try, chi2_try
                lam = max(lam / 10.0, 1e-14)
                accepted = True
                if drop < tolerance:
                    converged = True
                break
            lam *= 10.0
        if converged:
            break
        if not accepted:
            # damping exhausted without an acceptable step
            break

    if converged:
        z, r, chi2 = _polish(resid_z, z, r, chi2)

    p_star = bmap.to_external(z)
    cov, cov_flags = _covariance(resid_z, z, bmap)
    flags.extend(f for f in cov_flags if f not in flags)
    if bmap.near_bound(p_star) and "bounds" not in flags:
        flags.append("bounds")

    return FitResult(
        params=p_star,
        covariance=cov,
        residual_norm=float(np.sqrt(chi2)),
        iterations=iterations,
        converged=converged,
        param_names=param_names,
        flags=tuple(flags),
    )


def _polish(resid_z, z, r, chi2):
    """One undamped Gauss-Newton step at the solution.

    Near the minimum the squared-residual comparison saturates at rounding
    precision before the parameters do; a single full step pins the result
    to the stationary point (exactly, for linear models) and makes the
    outcome independent of data ordering.
    """
    jac = _jacobian(resid_z, z)
    if not np.all(np.isfinite(jac)):
        return z, r, chi2
    try:
        step = np.linalg.solve(jac.T @ jac, -(jac.T @ r))
    except np.linalg.LinAlgError:
        return z, r, chi2
    if not np.all(np.isfinite(step)) or np.max(np.abs(step) / (1.0 + np.abs(z))) > 1e-6:
        return z, r, chi2
    r_new = resid_z(z + step)
    if not np.all(np.isfinite(r_new)):
        return z, r, chi2
    chi2_new = float(r_new @ r_new)
    if chi2_new <= chi2 * (1.0 + 1e-9):
        return z + step, r_new, chi2_new
    return z, r, chi2


def _covariance(resid_z, z, bmap) -> tuple[np.ndarray, list[str]]:
    n_par = z.size
    jac_z = _jacobian(resid_z, z)
    scale = bmap.scale(z)
    # guard parameters pinned against a bound, where dp/dz underflows
    scale = np.where(np.abs(scale) < 1e-300, 1e-300, scale)
    jac_p = jac_z / scale
    if not np.all(np.isfinite(jac_p)):
        return np.full((n_par, n_par), np.nan), ["covariance-failed"]
    a = jac_p.T @ jac_p
    cov = np.linalg.pinv(a)
    return 0.5 * (cov + cov.T), []


def _stacked_residual(model, x, y, sqrt_w, params):
    pred = np.asarray(model(params, x))
    res = pred - y
    if np.iscomplexobj(res):
        return np.concatenate([res.real, res.imag]) * np.concatenate(
            [sqrt_w, sqrt_w]
        )
    return np.asarray(res, dtype=float) * sqrt_w


def fit(problem: FitProblem, data: Trace) -> FitResult:
    """Weighted least-squares fit of ``problem.model`` to ``data``.

    Without explicit weights the covariance is scaled by the reduced
    chi-square, the usual convention when point errors are unknown.
    """
    x, y = data.x, data.y
    p0 = np.atleast_1d(np.asarray(problem.initial_params, dtype=float))
    n_res = y.size * (2 if np.iscomplexobj(y) else 1)
    if n_res < p0.size:
        raise RankDeficiencyError(
            f"{y.size} data points cannot constrain {p0.size} parameters"
        )
    if problem.weights is None:
        w = np.ones(y.size)
    else:
        w = np.asarray(problem.weights, dtype=float)
        if w.shape != (y.size,):
            raise DomainError("weights must match the data length")
        if np.any(w <= 0):
            raise DomainError("weights must be strictly positive")
    sqrt_w = np.sqrt(w)

    result = minimize_residuals(
        lambda p: _stacked_residual(problem.model, x, y, sqrt_w, p),
        p0,
        lower_bounds=problem.lower_bounds,
        upper_bounds=problem.upper_bounds,
        max_iterations=problem.max_iterations,
        tolerance=problem.tolerance,
        param_names=problem.param_names,
    )
    if problem.weights is None:
        dof = n_res - p0.size
        if dof > 0:
            scale = result.residual_norm**2 / dof
            result = replace(result, covariance=result.covariance * scale)
        else:
            result = replace(
                result,
                covariance=np.full((p0.size, p0.size), np.nan),
                flags=result.flags + ("no-degrees-of-freedom",),
            )
    return result


def _fixed_param_problem(problem: FitProblem, index: int, value: float, start):
    """Sub-problem with one parameter frozen, for profiling."""

    def model(q, x):
        return problem.model(np.insert(q, index, value), x)

    def cut(arr):
        return None if arr is None else np.delete(np.asarray(arr, float), index)

    return FitProblem(
        model=model,
        initial_params=np.delete(np.asarray(start, float), index),
        lower_bounds=cut(problem.lower_bounds),
        upper_bounds=cut(problem.upper_bounds),
        weights=problem.weights,
        max_iterations=problem.max_iterations,
        tolerance=problem.tolerance,
    )


def profile_confidence(
    result: FitResult,
    problem: FitProblem,
    data: Trace,
    param_index: int,
    level: float = 0.95,
    max_steps: int = 50,
) -> ConfidenceInterval:
    """Profile-likelihood confidence interval for one parameter.

    The parameter is scanned away from its estimate, re-optimizing all the
    others, until the chi-square rises by z^2 (times the reduced chi-square
    when no weights were supplied, mirroring the covariance convention).
    For a linear model this reproduces the covariance interval exactly.
    A profile that never crosses the threshold before the bounds or the
    scan limit is reported as open on that side.
    """
    if not (0 < level < 1):
        raise DomainError(f"confidence level must be in (0, 1), got {level!r}")
    if not result.converged:
        raise DomainError("profile interval requested for a non-converged fit")
    p_hat = np.asarray(result.params, dtype=float)
    n_par = p_hat.size
    if not 0 <= param_index < n_par:
        raise DomainError(f"parameter index {param_index} out of range")

    zq = float(norm.ppf(0.5 * (1.0 + level)))
    chi2_min = result.residual_norm**2
    y = data.y
    n_res = y.size * (2 if np.iscomplexobj(y) else 1)
    dof = n_res - n_par
    scale = chi2_min / dof if (problem.weights is None and dof > 0) else 1.0
    threshold = chi2_min + zq**2 * scale

    sigma = result.param_uncertainties[param_index]
    if not np.isfinite(sigma) or sigma == 0:
        sigma = 0.05 * max(abs(p_hat[param_index]), 1.0)

    if problem.weights is None:
        w = np.ones(y.size)
    else:
        w = np.asarray(problem.weights, dtype=float)
    sqrt_w = np.sqrt(w)

    def profiled_chi2(value: float) -> float:
        if n_par == 1:
            r = _stacked_residual(problem.model, data.x, y, sqrt_w, np.array([value]))
            return float(r @ r)
        sub = _fixed_param_problem(problem, param_index, value, p_hat)
        res = fit(sub, data)
        return res.residual_norm**2

    lo = np.asarray(problem.lower_bounds, float)[param_index] if problem.lower_bounds is not None else -np.inf
    hi = np.asarray(problem.upper_bounds, float)[param_index] if problem.upper_bounds is not None else np.inf

    def scan(direction: int) -> tuple[float, bool]:
        limit = hi if direction > 0 else lo
        prev_v = p_hat[param_index]
        for step in range(1, max_steps + 1):
            v = p_hat[param_index] + direction * step * zq * sigma
            clipped = (direction > 0 and v >= limit) or (
                direction < 0 and v <= limit
            )
            if clipped:
                v = np.nextafter(limit, -direction * np.inf)
            c = profiled_chi2(v)
            if c >= threshold:
                return _bisect(profiled_chi2, prev_v, v, threshold), False
            prev_v = v
            if clipped:
                break
        return prev_v, True

    lower, lower_open = scan(-1)
    upper, upper_open = scan(+1)
    return ConfidenceInterval(
        param_index=param_index,
        level=level,
        lower=float(lower),
        upper=float(upper),
        lower_open=lower_open,
        upper_open=upper_open,
    )


def _bisect(fn, inside: float, outside: float, threshold: float, iters: int = 60) -> float:
    a, b = inside, outside
    for _ in range(iters):
        mid = 0.5 * (a + b)
        if fn(mid) < threshold:
            a = mid
        else:
            b = mid
        if abs(b - a) <= 1e-12 * max(abs(a), abs(b), 1.0):
            break
    return 0.5 * (a + b)
