import numpy as np
import pytest

from jjlab.errors import AnalysisError, DomainError
from jjlab.junction import (
    PHI0,
    IvTrace,
    RcsjRamp,
    extract_iv_parameters,
    simulate_rcsj_iv,
)

IC = 38e-6
RN = 39.0


def capacitance_for(beta_c):
    return beta_c * PHI0 / (2.0 * np.pi * IC * RN**2)


@pytest.fixture(scope="module")
def underdamped():
    # beta_c = 25, well inside the hysteretic regime
    ramp = RcsjRamp(i_max=1.5 * IC, n_steps=300, both_directions=True)
    return simulate_rcsj_iv(IC, RN, capacitance_for(25.0), ramp)


@pytest.fixture(scope="module")
def overdamped():
    ramp = RcsjRamp(i_max=2.0 * IC, n_steps=150, both_directions=True)
    return simulate_rcsj_iv(IC, RN, capacitance_for(0.05), ramp)


class TestUnderdamped:
    def test_superconducting_branch_is_exactly_zero(self, underdamped):
        up, _ = underdamped
        sel = up.current < 0.95 * IC
        assert np.all(up.voltage[sel] == 0.0)

    def test_switching_near_ic(self, underdamped):
        up, _ = underdamped
        running = np.abs(up.voltage) > 0.1 * IC * RN
        assert running.any()
        i_switch = up.current[running].min()
        assert i_switch == pytest.approx(IC, rel=0.02)

    def test_hysteresis(self, underdamped):
        up, down = underdamped
        running_up = np.abs(up.voltage) > 0.02 * IC * RN
        running_down = np.abs(down.voltage) > 0.02 * IC * RN
        i_switch = up.current[running_up].min()
        i_retrap = down.current[running_down].min()
        assert i_retrap < 0.6 * i_switch

    def test_retrapping_current(self, underdamped):
        _, down = underdamped
        running = np.abs(down.voltage) > 0.02 * IC * RN
        i_retrap = down.current[running].min()
        assert i_retrap == pytest.approx(4.0 * IC / (np.pi * np.sqrt(25.0)), rel=0.25)

    def test_loop_area_non_negative(self, underdamped):
        # the down branch keeps running below the switching current, so it
        # bounds the loop from above
        up, down = underdamped
        gap = down.voltage[::-1] - up.voltage
        area = np.trapezoid(gap, up.current)
        assert area > 0.0

    def test_running_branch_near_ohmic(self, underdamped):
        # far above ic the inertia averages out the supercurrent
        up, _ = underdamped
        sel = up.current > 1.3 * IC
        assert np.allclose(up.voltage[sel], up.current[sel] * RN, rtol=5e-3)


class TestOverdamped:
    def test_matches_analytic_solution(self, overdamped):
        up, _ = overdamped
        sel = up.current >= 1.05 * IC
        expected = RN * np.sqrt(up.current[sel] ** 2 - IC**2)
        assert np.allclose(up.voltage[sel], expected, rtol=1e-2)

    def test_no_hysteresis(self, overdamped):
        up, down = overdamped
        gap = np.abs(up.voltage - down.voltage[::-1])
        assert gap.max() <= 1e-3 * IC * RN

    def test_subcritical_bias_stays_static(self, overdamped):
        up, _ = overdamped
        sel = up.current < 0.95 * IC
        assert np.all(up.voltage[sel] == 0.0)


class TestSymmetryAndValidation:
    def test_antisymmetric_under_bias_reversal(self):
        cap = capacitance_for(2.0)
        pos, _ = simulate_rcsj_iv(
            IC, RN, cap, RcsjRamp(i_max=1.3 * IC, n_steps=120, both_directions=False)
        )
        neg, _ = simulate_rcsj_iv(
            IC, RN, cap, RcsjRamp(i_max=-1.3 * IC, n_steps=120, both_directions=False)
        )
        assert np.allclose(neg.current, -pos.current, rtol=0, atol=0)
        assert np.allclose(neg.voltage, -pos.voltage, rtol=1e-10, atol=1e-15)

    def test_coarse_ramp_flagged(self):
        up, _ = simulate_rcsj_iv(
            IC,
            RN,
            capacitance_for(25.0),
            RcsjRamp(i_max=100.0 * IC, n_steps=100, both_directions=False),
        )
        assert "coarse-bias-grid" in up.flags

    def test_validation(self):
        ramp = RcsjRamp(i_max=1.5 * IC, n_steps=50)
        with pytest.raises(DomainError):
            simulate_rcsj_iv(IC, RN, capacitance_for(1.0), ramp)
        with pytest.raises(DomainError):
            simulate_rcsj_iv(-IC, RN, capacitance_for(1.0), RcsjRamp(i_max=1e-5))

    def test_up_sweep_must_start_at_zero(self):
        with pytest.raises(DomainError):
            IvTrace(
                current=np.array([1e-5, 2e-5]),
                voltage=np.array([0.0, 1e-4]),
                sweep_direction="up",
            )


class TestIvExtraction:
    def test_round_trip_through_simulation(self, underdamped):
        up, _ = underdamped
        out = extract_iv_parameters(up)
        assert out["ic"] == pytest.approx(IC, rel=0.02)
        assert out["rn"] == pytest.approx(RN, rel=0.02)
        assert out["icrn_product"] == pytest.approx(IC * RN, rel=0.03)

    def test_rejects_down_sweep(self, underdamped):
        _, down = underdamped
        with pytest.raises(DomainError):
            extract_iv_parameters(down)

    def test_no_switching_found(self):
        i = np.linspace(0.0, 1e-5, 50)
        trace = IvTrace(current=i, voltage=np.zeros_like(i), sweep_direction="up")
        with pytest.raises(AnalysisError):
            extract_iv_parameters(trace)
