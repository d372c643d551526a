import numpy as np
import pytest

from jjlab.errors import AnalysisError, DomainError
from jjlab.film import (
    FilmGeometry,
    FilmReport,
    RtTrace,
    analyze_film,
    extract_tc,
    kinetic_parameters,
    residual_ratio,
)


def transition_grid(tc=9.2, span=305.0):
    # dense sampling through the transition, sparse elsewhere
    return np.concatenate(
        [
            np.linspace(2.0, tc - 0.8, 30),
            np.linspace(tc - 0.75, tc + 1.3, 300),
            np.linspace(tc + 1.4, span, 80),
        ]
    )


def logistic_trace(r_normal=12.0, tc=9.2, width=0.05, phonon=0.0, geometry=None):
    t = transition_grid(tc)
    r = r_normal / (1.0 + np.exp(-(t - tc) / width))
    r = r + phonon * np.clip(t - 20.0, 0.0, None)
    return RtTrace(temperature=t, resistance=r, geometry=geometry)


class TestExtractTc:
    def test_logistic_midpoint(self):
        tc, width = extract_tc(logistic_trace())
        assert tc == pytest.approx(9.2, abs=0.01)

    def test_logistic_width(self):
        # 10-90% span of a logistic of scale w is 2 w ln 9
        tc, width = extract_tc(logistic_trace(width=0.05))
        assert width == pytest.approx(0.21972245773362198, abs=0.005)

    def test_sharp_step_width_collapses_to_grid(self):
        t = np.arange(2.0, 305.0, 0.05)
        r = np.where(t < 9.2, 0.0, 14.0)
        tc, width = extract_tc(RtTrace(temperature=t, resistance=r))
        assert abs(tc - 9.2) <= 0.05
        assert width <= 0.05 + 1e-12

    def test_rescaling_invariance(self):
        trace = logistic_trace(phonon=0.08)
        scaled = RtTrace(
            temperature=trace.temperature, resistance=trace.resistance * 137.0
        )
        assert extract_tc(trace) == pytest.approx(extract_tc(scaled), rel=1e-12)

    def test_no_transition_is_an_error(self):
        t = np.linspace(4.0, 300.0, 200)
        r = 10.0 + 0.03 * t
        with pytest.raises(AnalysisError):
            extract_tc(RtTrace(temperature=t, resistance=r))

    def test_too_few_points(self):
        t = np.linspace(4.0, 300.0, 19)
        r = np.where(t < 9.2, 0.0, 10.0)
        with pytest.raises(AnalysisError):
            extract_tc(RtTrace(temperature=t, resistance=r))

    def test_phonon_slope_does_not_drag_tc(self):
        # steep phonon resistivity above the plateau must not shift the
        # 50% crossing; the plateau window re-anchors at the 90% point
        clean, _ = extract_tc(logistic_trace(phonon=0.0))
        sloped, _ = extract_tc(logistic_trace(phonon=0.12))
        assert sloped == pytest.approx(clean, abs=0.005)


class TestResidualRatio:
    def test_flat_trace_gives_one(self):
        t = np.linspace(4.0, 310.0, 100)
        trace = RtTrace(temperature=t, resistance=np.full_like(t, 7.0))
        assert residual_ratio(trace, tc=9.2) == pytest.approx(1.0, rel=1e-12)

    def test_direct_ratio(self):
        t = np.array([5.0, 9.7, 150.0, 300.0, 310.0])
        r = np.array([0.0, 4.0, 4.0, 20.0, 20.0])
        trace = RtTrace(temperature=t, resistance=r)
        assert residual_ratio(trace, tc=9.2) == pytest.approx(5.0, rel=1e-12)

    def test_power_law_phonon_trace(self):
        # r(T) = r0 + a T^3 above 30 K, known ratio by construction
        t = np.linspace(5.0, 310.0, 2000)
        r0, a = 3.0, 1e-6
        r = r0 + a * np.clip(t - 30.0, 0.0, None) ** 3
        trace = RtTrace(temperature=t, resistance=r)
        expected = (r0 + a * 270.0**3) / r0
        assert residual_ratio(trace, tc=9.2) == pytest.approx(expected, rel=0.01)

    def test_missing_room_temperature_region(self):
        t = np.linspace(4.0, 150.0, 100)
        trace = RtTrace(temperature=t, resistance=np.full_like(t, 5.0))
        with pytest.raises(AnalysisError, match="300"):
            residual_ratio(trace, tc=9.2)


class TestKineticParameters:
    def test_unit_sheet_resistance(self):
        sheet, l_k, depth = kinetic_parameters(
            rho0=8e-8, thickness=80e-9, delta0=0.0013953186018065473
        )
        assert sheet == pytest.approx(1.0, rel=1e-12)
        assert l_k == pytest.approx(1.5015593774109325e-13, rel=1e-12)
        assert depth == pytest.approx(9.77712835739599e-8, rel=1e-12)

    def test_linearity_in_rho0(self):
        a = kinetic_parameters(8e-8, 80e-9, 1.4e-3)
        b = kinetic_parameters(16e-8, 80e-9, 1.4e-3)
        assert b[1] == pytest.approx(2.0 * a[1], rel=1e-12)
        assert b[2] == pytest.approx(np.sqrt(2.0) * a[2], rel=1e-12)

    def test_product_depends_only_on_sheet_resistance(self):
        # same R_sq from different (rho0, thickness) pairs
        _, l_k1, _ = kinetic_parameters(8e-8, 80e-9, 1.4e-3)
        _, l_k2, _ = kinetic_parameters(16e-8, 160e-9, 1.4e-3)
        assert l_k1 == pytest.approx(l_k2, rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            kinetic_parameters(-1e-8, 80e-9, 1.4e-3)


class TestAnalyzeFilm:
    def geometry(self):
        return FilmGeometry(length=1e-3, width=1e-4, thickness=80e-9)

    def film_trace(self):
        # plateau 10 Ohm, R(300 K) = 50 Ohm, R_sq = 1 at the geometry above
        return logistic_trace(
            r_normal=10.0, phonon=40.0 / 280.0, geometry=self.geometry()
        )

    def test_full_report(self):
        report = analyze_film(self.film_trace())
        assert report.tc == pytest.approx(9.2, abs=0.01)
        assert report.rrr == pytest.approx(5.0, rel=1e-3)
        assert report.rho0 == pytest.approx(8e-8, rel=1e-3)
        assert report.sheet_resistance == pytest.approx(1.0, rel=1e-3)
        assert report.kinetic_inductance == pytest.approx(
            1.5015593774109325e-13, rel=2e-3
        )
        assert report.london_depth == pytest.approx(9.77712835739599e-8, rel=1e-3)
        assert report.delta_tc_from_bulk == pytest.approx(0.1, abs=0.01)

    def test_no_geometry_leaves_resistivity_fields_empty(self):
        report = analyze_film(logistic_trace())
        assert report.rho0 is None
        assert report.sheet_resistance is None
        assert report.kinetic_inductance is None
        assert report.london_depth is None
        assert report.rrr >= 1.0

    def test_report_invariants(self):
        with pytest.raises(DomainError):
            FilmReport(
                tc=9.2,
                tc_width=-0.1,
                rrr=5.0,
                rho0=None,
                sheet_resistance=None,
                kinetic_inductance=None,
                london_depth=None,
                delta_tc_from_bulk=0.1,
            )
        with pytest.raises(DomainError):
            FilmReport(
                tc=9.5,
                tc_width=0.1,
                rrr=5.0,
                rho0=None,
                sheet_resistance=None,
                kinetic_inductance=None,
                london_depth=None,
                delta_tc_from_bulk=9.3 - 9.5,
            )
        with pytest.raises(DomainError):
            FilmReport(
                tc=9.2,
                tc_width=0.1,
                rrr=0.8,
                rho0=None,
                sheet_resistance=None,
                kinetic_inductance=None,
                london_depth=None,
                delta_tc_from_bulk=0.1,
            )


class TestRtTrace:
    def test_sorts_ascending(self):
        trace = RtTrace(
            temperature=np.array([10.0, 4.0, 300.0]),
            resistance=np.array([5.0, 0.0, 25.0]),
        )
        assert np.all(np.diff(trace.temperature) > 0)
        assert trace.resistance[0] == 0.0

    def test_rejects_non_positive_temperature(self):
        with pytest.raises(DomainError):
            RtTrace(temperature=np.array([0.0, 5.0]), resistance=np.array([1.0, 2.0]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(DomainError):
            RtTrace(temperature=np.array([1.0, 5.0]), resistance=np.array([1.0]))
