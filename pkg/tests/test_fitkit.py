"""Fit-engine behavior: recovery, covariance conventions, bounds, profiles."""

import numpy as np
import pytest
from scipy.stats import norm

from jjlab.errors import DomainError, FitEvaluationError, RankDeficiencyError
from jjlab.fitkit import (
    FitProblem,
    FitResult,
    Trace,
    fit,
    minimize_residuals,
    profile_confidence,
)


def linear(p, x):
    return p[0] + p[1] * x


def make_linear_data(a=1.5, b=-0.7, sigma=0.05, n=40, seed=7):
    rng = np.random.default_rng(seed)
    x = np.linspace(0.0, 5.0, n)
    y = a + b * x + rng.normal(0.0, sigma, n)
    return Trace(x=x, y=y), sigma


class TestTrace:
    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            Trace(x=np.arange(3), y=np.arange(4))

    def test_complex_preserved(self):
        t = Trace(x=[0.0, 1.0], y=[1 + 2j, 3 - 1j])
        assert np.iscomplexobj(t.y)
        assert len(t) == 2


class TestBasicRecovery:
    def test_linear_exact(self):
        x = np.linspace(0, 4, 20)
        data = Trace(x=x, y=2.0 + 3.0 * x)
        res = fit(FitProblem(model=linear, initial_params=[0.0, 0.0]), data)
        assert res.converged
        assert res.params == pytest.approx([2.0, 3.0], abs=1e-9)
        assert res.residual_norm < 1e-9

    def test_exponential_recovery(self):
        rng = np.random.default_rng(3)
        x = np.linspace(0, 10, 60)
        true = np.array([2.5, 3.0])
        y = true[0] * np.exp(-x / true[1]) + rng.normal(0, 0.01, x.size)
        res = fit(
            FitProblem(
                model=lambda p, x: p[0] * np.exp(-x / p[1]),
                initial_params=[1.0, 1.0],
            ),
            Trace(x=x, y=y),
        )
        assert res.converged
        assert res.params == pytest.approx(true, rel=0.02)
        assert res.iterations >= 1

    def test_exponential_noiseless_tau(self):
        x = np.linspace(0, 25, 50)
        y = np.exp(-x / 5.0)
        res = fit(
            FitProblem(
                model=lambda p, x: np.exp(-x / p[0]), initial_params=[2.0]
            ),
            Trace(x=x, y=y),
        )
        assert res.converged
        assert res.params[0] == pytest.approx(5.0, rel=1e-8)

    def test_tau_coverage_monte_carlo(self):
        # reported sigma must cover the truth at the ~3-sigma level
        x = np.linspace(0, 25, 200)
        hits = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            y = np.exp(-x / 5.0) + rng.normal(0, 0.01, x.size)
            res = fit(
                FitProblem(
                    model=lambda p, x: np.exp(-x / p[0]), initial_params=[3.0]
                ),
                Trace(x=x, y=y),
            )
            if res.converged and abs(res.params[0] - 5.0) <= 3 * res.param_uncertainties[0]:
                hits += 1
        assert hits >= 90

    def test_reorder_invariance(self):
        data, _ = make_linear_data()
        rng = np.random.default_rng(1)
        order = rng.permutation(len(data))
        shuffled = Trace(x=data.x[order], y=data.y[order])
        problem = dict(model=linear, initial_params=[0.0, 0.0], tolerance=1e-15)
        r1 = fit(FitProblem(**problem), data)
        r2 = fit(FitProblem(**problem), shuffled)
        assert r2.params == pytest.approx(r1.params, rel=1e-12, abs=1e-12)

    def test_linear_matches_normal_equations(self):
        data, _ = make_linear_data()
        res = fit(FitProblem(model=linear, initial_params=[0.0, 0.0]), data)
        design = np.column_stack([np.ones(len(data)), data.x])
        exact, *_ = np.linalg.lstsq(design, data.y, rcond=None)
        assert res.params == pytest.approx(exact, rel=1e-8)

    def test_complex_model(self):
        x = np.linspace(0, 1, 15)
        y = (2.0 + 1.5j) * x

        def model(p, x):
            return (p[0] + 1j * p[1]) * x

        res = fit(FitProblem(model=model, initial_params=[1.0, 0.0]), Trace(x=x, y=y))
        assert res.params == pytest.approx([2.0, 1.5], abs=1e-8)

    def test_param_names_accessors(self):
        x = np.linspace(0, 4, 20)
        data = Trace(x=x, y=2.0 + 3.0 * x)
        res = fit(
            FitProblem(
                model=linear, initial_params=[0.0, 0.0], param_names=("offset", "slope")
            ),
            data,
        )
        assert res.value("slope") == pytest.approx(3.0, abs=1e-9)
        assert np.isfinite(res.uncertainty("offset")) or res.uncertainty("offset") == 0
        with pytest.raises(KeyError):
            res.value("nope")


class TestCovarianceConventions:
    def test_weighted_linear_matches_normal_equations(self):
        data, sigma = make_linear_data()
        w = np.full(len(data), 1.0 / sigma**2)
        res = fit(
            FitProblem(model=linear, initial_params=[0.0, 0.0], weights=w), data
        )
        design = np.column_stack([np.ones(len(data)), data.x])
        cov_exact = np.linalg.inv(design.T @ np.diag(w) @ design)
        assert res.covariance == pytest.approx(cov_exact, rel=1e-5)

    def test_weight_scaling_scales_covariance(self):
        data, sigma = make_linear_data()
        w = np.full(len(data), 1.0 / sigma**2)
        r1 = fit(FitProblem(model=linear, initial_params=[0.0, 0.0], weights=w), data)
        r2 = fit(
            FitProblem(model=linear, initial_params=[0.0, 0.0], weights=4.0 * w), data
        )
        assert r2.params == pytest.approx(r1.params, rel=1e-9)
        assert r2.covariance == pytest.approx(r1.covariance / 4.0, rel=1e-6)

    def test_unweighted_scaled_by_reduced_chi_square(self):
        # doubling the noise must double the reported uncertainties
        d1, _ = make_linear_data(sigma=0.05, seed=11)
        rng = np.random.default_rng(11)
        x = np.linspace(0.0, 5.0, 40)
        y = 1.5 - 0.7 * x + rng.normal(0.0, 0.05, 40) * 2.0
        d2 = Trace(x=x, y=y)
        r1 = fit(FitProblem(model=linear, initial_params=[0.0, 0.0]), d1)
        r2 = fit(FitProblem(model=linear, initial_params=[0.0, 0.0]), d2)
        assert r2.param_uncertainties == pytest.approx(
            2.0 * r1.param_uncertainties, rel=1e-6
        )

    def test_covariance_symmetric(self):
        data, sigma = make_linear_data()
        res = fit(FitProblem(model=linear, initial_params=[0.0, 0.0]), data)
        asym = np.abs(res.covariance - res.covariance.T).max()
        assert asym < 1e-12 * np.abs(res.covariance).max()

    def test_rescaling_invariance(self):
        # same model in rescaled parameters recovers rescaled values
        rng = np.random.default_rng(5)
        x = np.linspace(0, 10, 50)
        y = 2.5 * np.exp(-x / 3.0) + rng.normal(0, 0.01, x.size)
        data = Trace(x=x, y=y)
        r1 = fit(
            FitProblem(
                model=lambda p, x: p[0] * np.exp(-x / p[1]), initial_params=[1.0, 1.0]
            ),
            data,
        )
        r2 = fit(
            FitProblem(
                model=lambda p, x: p[0] * np.exp(-x / (1e3 * p[1])),
                initial_params=[1.0, 1e-3],
            ),
            data,
        )
        assert r2.params[0] == pytest.approx(r1.params[0], rel=1e-6)
        assert 1e3 * r2.params[1] == pytest.approx(r1.params[1], rel=1e-6)

    def test_reparametrized(self):
        res = FitResult(
            params=np.array([2.0]),
            covariance=np.array([[0.04]]),
            residual_norm=0.0,
            iterations=1,
            converged=True,
        )
        out = res.reparametrized(
            values=np.array([np.exp(2.0)]),
            jacobian=np.array([[np.exp(2.0)]]),
            param_names=("k",),
        )
        assert out.value("k") == pytest.approx(np.exp(2.0))
        assert out.uncertainty("k") == pytest.approx(0.2 * np.exp(2.0))


class TestBoundsAndEdgeCases:
    def test_bounded_interior_solution(self):
        x = np.linspace(0, 4, 30)
        data = Trace(x=x, y=0.5 * x)
        res = fit(
            FitProblem(
                model=lambda p, x: p[0] * x,
                initial_params=[0.9],
                lower_bounds=[0.0],
                upper_bounds=[1.0],
            ),
            data,
        )
        assert res.converged
        assert res.params[0] == pytest.approx(0.5, abs=1e-8)
        assert "bounds" not in res.flags

    def test_active_bound_flagged(self):
        x = np.linspace(0, 4, 30)
        data = Trace(x=x, y=2.0 * x)
        res = fit(
            FitProblem(
                model=lambda p, x: p[0] * x,
                initial_params=[0.5],
                lower_bounds=[0.0],
                upper_bounds=[1.0],
            ),
            data,
        )
        assert res.params[0] <= 1.0
        assert res.params[0] == pytest.approx(1.0, abs=1e-4)
        assert "bounds" in res.flags

    def test_initial_outside_bounds(self):
        with pytest.raises(DomainError):
            minimize_residuals(
                lambda p: p - 1.0, [2.0], lower_bounds=[0.0], upper_bounds=[1.0]
            )

    def test_non_finite_initial_model(self):
        x = np.linspace(0, 1, 10)
        data = Trace(x=x, y=x)
        with pytest.raises(FitEvaluationError, match="tau"):
            fit(
                FitProblem(
                    model=lambda p, x: np.log(p[0]) * x,
                    initial_params=[-1.0],
                    param_names=("tau",),
                ),
                data,
            )

    def test_rank_deficient_model(self):
        x = np.linspace(0, 1, 10)
        data = Trace(x=x, y=2 * x)
        with pytest.raises(RankDeficiencyError):
            fit(
                FitProblem(
                    model=lambda p, x: p[0] * x + 0.0 * p[1],
                    initial_params=[1.0, 1.0],
                ),
                data,
            )

    def test_fewer_points_than_params(self):
        data = Trace(x=[1.0], y=[2.0])
        with pytest.raises(RankDeficiencyError):
            fit(FitProblem(model=linear, initial_params=[0.0, 0.0]), data)

    def test_iteration_cap_returns_unconverged(self):
        rng = np.random.default_rng(0)
        x = np.linspace(0, 1, 30)
        y = np.sin(5 * x) + rng.normal(0, 0.1, 30)
        res = fit(
            FitProblem(
                model=lambda p, x: p[0] * np.exp(-x / p[1]) + p[2],
                initial_params=[5.0, 0.05, -2.0],
                max_iterations=1,
            ),
            Trace(x=x, y=y),
        )
        assert not res.converged
        assert res.iterations == 1

    def test_minimize_residuals_direct(self):
        res = minimize_residuals(lambda p: np.array([p[0] - 3.0, p[1] + 1.0]), [0.0, 0.0])
        assert res.params == pytest.approx([3.0, -1.0], abs=1e-10)


class TestProfileConfidence:
    def test_matches_covariance_for_linear_model(self):
        data, sigma = make_linear_data()
        w = np.full(len(data), 1.0 / sigma**2)
        problem = FitProblem(model=linear, initial_params=[0.0, 0.0], weights=w)
        res = fit(problem, data)
        ci = profile_confidence(res, problem, data, param_index=1, level=0.95)
        z = norm.ppf(0.975)
        s = res.param_uncertainties[1]
        assert ci.lower == pytest.approx(res.params[1] - z * s, abs=1e-5 * s)
        assert ci.upper == pytest.approx(res.params[1] + z * s, abs=1e-5 * s)
        assert not ci.lower_open and not ci.upper_open

    def test_open_interval_at_bound(self):
        data, sigma = make_linear_data()
        w = np.full(len(data), 1.0 / sigma**2)
        problem = FitProblem(model=linear, initial_params=[0.0, 0.0], weights=w)
        free = fit(problem, data)
        s = free.param_uncertainties[1]
        bounded = FitProblem(
            model=linear,
            initial_params=[0.0, free.params[1]],
            weights=w,
            lower_bounds=[-np.inf, free.params[1] - 10 * s],
            upper_bounds=[np.inf, free.params[1] + 0.5 * s],
        )
        res = fit(bounded, data)
        ci = profile_confidence(res, bounded, data, param_index=1, level=0.95)
        assert ci.upper_open
        assert not ci.lower_open

    def test_degenerate_parameter_open_both_sides(self):
        # a parameter the data cannot see: profile is flat, interval open
        x = np.linspace(0, 4, 25)
        data = Trace(x=x, y=2.0 * x)
        problem = FitProblem(
            model=lambda p, x: p[0] * x + 0.0 * p[1],
            initial_params=[2.0, 1.0],
            weights=np.ones(25),
        )
        res = FitResult(
            params=np.array([2.0, 1.0]),
            covariance=np.array([[1e-6, 0.0], [0.0, np.inf]]),
            residual_norm=0.1,
            iterations=3,
            converged=True,
        )
        ci = profile_confidence(res, problem, data, param_index=1)
        assert ci.lower_open and ci.upper_open

    def test_requires_converged_fit(self):
        data, _ = make_linear_data()
        problem = FitProblem(model=linear, initial_params=[0.0, 0.0])
        res = fit(problem, data)
        broken = FitResult(
            params=res.params,
            covariance=res.covariance,
            residual_norm=res.residual_norm,
            iterations=res.iterations,
            converged=False,
        )
        with pytest.raises(DomainError):
            profile_confidence(broken, problem, data, 0)

    def test_level_validation(self):
        data, _ = make_linear_data()
        problem = FitProblem(model=linear, initial_params=[0.0, 0.0])
        res = fit(problem, data)
        with pytest.raises(DomainError):
            profile_confidence(res, problem, data, 0, level=1.5)
