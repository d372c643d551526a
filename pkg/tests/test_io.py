import numpy as np
import pytest

from jjlab.errors import SchemaError
from jjlab.film import FilmReport
from jjlab.io import (
    AnalysisReport,
    AuxiliaryResult,
    QubitResult,
    ReportRow,
    TraceFile,
    as_decay_trace,
    as_iv_trace,
    as_rt_trace,
    as_s21_trace,
    file_digest,
    ingest,
    load_report,
    report_from_dict,
    report_to_dict,
    save_report,
    save_trace,
)
from jjlab.junction import WaferCalibration
from jjlab.qubit import CoherenceRecord, TransmonParams


def write(tmp_path, text, name="trace.dat"):
    path = tmp_path / name
    path.write_text(text)
    return path


RT_TEXT = """\
# kind: rt
# wafer_id: W3
# length: 1e-3
# width: 1e-4
# thickness: 1e-7
# columns: temperature_k resistance_ohm
2.0 0.1
9.2 6.0
10.0 12.0
300.0 30.0
"""


class TestIngest:
    def test_rt_file_parses(self, tmp_path):
        trace = ingest(write(tmp_path, RT_TEXT))
        assert trace.kind == "rt"
        assert len(trace) == 4
        assert trace.header["wafer_id"] == "W3"
        assert trace.header["length"] == 1e-3
        np.testing.assert_allclose(
            trace.column("temperature_k"), [2.0, 9.2, 10.0, 300.0]
        )

    def test_digest_matches_file(self, tmp_path):
        path = write(tmp_path, RT_TEXT)
        assert ingest(path).digest == file_digest(path)

    def test_expected_kind_accepts_match(self, tmp_path):
        assert ingest(write(tmp_path, RT_TEXT), expected_kind="rt").kind == "rt"

    def test_expected_kind_mismatch(self, tmp_path):
        with pytest.raises(SchemaError, match="expected a 'iv' trace"):
            ingest(write(tmp_path, RT_TEXT), expected_kind="iv")

    def test_missing_kind(self, tmp_path):
        text = "# columns: current_a voltage_v\n0.0 0.0\n"
        with pytest.raises(SchemaError, match="missing 'kind'"):
            ingest(write(tmp_path, text))

    def test_unknown_kind(self, tmp_path):
        text = "# kind: beer\n# columns: a b\n1 2\n"
        with pytest.raises(SchemaError, match="unknown kind 'beer'"):
            ingest(write(tmp_path, text))

    def test_missing_required_column_is_named(self, tmp_path):
        text = (
            "# kind: s21\n# columns: frequency_hz re_s21\n"
            "6e9 0.5\n6.1e9 0.6\n"
        )
        with pytest.raises(SchemaError, match="im_s21"):
            ingest(write(tmp_path, text))

    def test_non_numeric_cell_cites_line(self, tmp_path):
        text = (
            "# kind: iv\n# columns: current_a voltage_v\n"
            "0.0 0.0\n1e-6 oops\n"
        )
        path = write(tmp_path, text)
        with pytest.raises(SchemaError, match=rf"{path.name}:4: .*'oops'"):
            ingest(path)

    def test_column_count_mismatch_cites_line(self, tmp_path):
        text = "# kind: iv\n# columns: current_a voltage_v\n0.0 0.0 1.0\n"
        with pytest.raises(SchemaError, match=":3: expected 2 values, got 3"):
            ingest(write(tmp_path, text))

    def test_data_before_columns(self, tmp_path):
        text = "# kind: iv\n0.0 0.0\n# columns: current_a voltage_v\n"
        with pytest.raises(SchemaError, match=":2: data rows before"):
            ingest(write(tmp_path, text))

    def test_malformed_header_line(self, tmp_path):
        text = "# kind: iv\n# just words\n# columns: current_a voltage_v\n0 0\n"
        with pytest.raises(SchemaError, match=":2: header line needs"):
            ingest(write(tmp_path, text))

    def test_no_data_rows(self, tmp_path):
        text = "# kind: iv\n# columns: current_a voltage_v\n"
        with pytest.raises(SchemaError, match="no data rows"):
            ingest(write(tmp_path, text))

    def test_numeric_header_coercion_spares_identifiers(self, tmp_path):
        text = (
            "# kind: decay\n# qubit_id: 007\n# f_q: 4.1e9\n"
            "# columns: delay_s population\n0.0 1.0\n1e-6 0.9\n"
        )
        trace = ingest(write(tmp_path, text))
        assert trace.header["qubit_id"] == "007"
        assert trace.header["f_q"] == 4.1e9

    def test_extra_columns_preserved(self, tmp_path):
        text = (
            "# kind: iv\n# columns: current_a voltage_v hall_v\n"
            "0.0 0.0 0.3\n1e-6 1e-3 0.4\n"
        )
        trace = ingest(write(tmp_path, text))
        np.testing.assert_allclose(trace.column("hall_v"), [0.3, 0.4])

    def test_blank_and_comment_only_lines_skipped(self, tmp_path):
        text = "# kind: iv\n#\n\n# columns: current_a voltage_v\n\n0 0\n1e-6 1e-3\n"
        assert len(ingest(write(tmp_path, text))) == 2


class TestUnits:
    def test_current_in_microamps(self, tmp_path):
        text = (
            "# kind: iv\n# current_unit: uA\n"
            "# columns: current_a voltage_v\n0.0 0.0\n38.0 1.5e-3\n"
        )
        trace = ingest(write(tmp_path, text))
        np.testing.assert_allclose(trace.column("current_a"), [0.0, 38.0e-6])

    @pytest.mark.parametrize(
        "unit,factor",
        [
            ("GHz", 1e9),
            ("MHz", 1e6),
            ("kohm", 1e3),
            ("mohm", 1e-3),
            ("ns", 1e-9),
            ("mK", 1e-3),
            ("uV", 1e-6),
            ("pa_s", 1.0),
            ("Hz", 1.0),
        ],
    )
    def test_prefix_table(self, tmp_path, unit, factor):
        text = (
            f"# kind: decay\n# f_q: 2.5\n# f_q_unit: {unit}\n"
            "# columns: delay_s population\n0.0 1.0\n"
            "1e-6 0.9\n"
        )
        trace = ingest(write(tmp_path, text, name=f"u_{unit}.dat"))
        assert trace.header["f_q"] == pytest.approx(2.5 * factor, rel=1e-15)

    def test_dbm_power(self, tmp_path):
        text = (
            "# kind: s21\n# power: -95\n# power_unit: dBm\n"
            "# columns: frequency_hz re_s21 im_s21\n"
            "6e9 1.0 0.0\n6.1e9 0.9 0.1\n"
        )
        trace = ingest(write(tmp_path, text))
        assert trace.header["power"] == pytest.approx(
            10 ** ((-95 - 30) / 10), rel=1e-12
        )

    def test_unit_scales_matching_columns_only(self, tmp_path):
        # time_s matches t_unit only through the exact-base-name rule
        text = (
            "# kind: anneal\n# time_unit: ks\n"
            "# columns: time_s resistance_ratio\n1.0 0.9\n2.0 0.8\n"
        )
        trace = ingest(write(tmp_path, text))
        np.testing.assert_allclose(trace.column("time_s"), [1000.0, 2000.0])
        np.testing.assert_allclose(
            trace.column("resistance_ratio"), [0.9, 0.8]
        )

    def test_unit_keys_dropped_after_application(self, tmp_path):
        text = (
            "# kind: iv\n# current_unit: uA\n"
            "# columns: current_a voltage_v\n1.0 0.0\n2.0 1e-3\n"
        )
        trace = ingest(write(tmp_path, text))
        assert "current_unit" not in trace.header

    def test_unknown_unit_rejected(self, tmp_path):
        text = (
            "# kind: iv\n# current_unit: furlong\n"
            "# columns: current_a voltage_v\n0 0\n1e-6 0\n"
        )
        with pytest.raises(SchemaError, match="'furlong' not recognized"):
            ingest(write(tmp_path, text))

    def test_prefix_is_case_sensitive(self, tmp_path):
        # M and m differ by nine orders of magnitude
        for unit, factor in (("MV", 1e6), ("mV", 1e-3)):
            text = (
                "# kind: iv\n# voltage_unit: {u}\n"
                "# columns: current_a voltage_v\n0 0\n1e-6 1.0\n"
            ).format(u=unit)
            trace = ingest(write(tmp_path, text, name=f"case_{unit}.dat"))
            assert trace.column("voltage_v")[1] == pytest.approx(factor)


class TestSerializeRoundTrip:
    def test_numeric_identity(self, tmp_path):
        rng = np.random.default_rng(3)
        cur = np.sort(rng.uniform(0, 1e-4, 40))
        vol = rng.standard_normal(40) * 1e-3
        trace = TraceFile(
            kind="iv",
            header={"wafer_id": "W1", "sweep": "up", "note": 1.5},
            columns={"current_a": cur, "voltage_v": vol},
        )
        path = tmp_path / "iv.dat"
        save_trace(trace, path)
        back = ingest(path)
        assert back.kind == "iv"
        assert back.header["wafer_id"] == "W1"
        assert back.header["note"] == 1.5
        # repr round-trip must be exact, not approximate
        assert np.array_equal(back.column("current_a"), cur)
        assert np.array_equal(back.column("voltage_v"), vol)

    def test_reserialization_is_stable(self, tmp_path):
        p1, p2 = tmp_path / "a.dat", tmp_path / "b.dat"
        save_trace(ingest(write(tmp_path, RT_TEXT)), p1)
        save_trace(ingest(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestAdapters:
    def test_rt_adapter_builds_geometry(self, tmp_path):
        rt = as_rt_trace(ingest(write(tmp_path, RT_TEXT)))
        assert rt.geometry is not None
        assert rt.geometry.thickness == 1e-7
        assert rt.label == "W3"

    def test_rt_adapter_without_geometry(self, tmp_path):
        text = (
            "# kind: rt\n# columns: temperature_k resistance_ohm\n"
            "2.0 0.1\n10.0 12.0\n"
        )
        assert as_rt_trace(ingest(write(tmp_path, text))).geometry is None

    def test_iv_adapter_reads_sweep(self, tmp_path):
        text = (
            "# kind: iv\n# sweep: down\n"
            "# columns: current_a voltage_v\n1e-4 4e-3\n0.0 0.0\n"
        )
        assert as_iv_trace(ingest(write(tmp_path, text))).sweep_direction == "down"

    def test_s21_adapter_assembles_complex(self, tmp_path):
        rows = "\n".join(
            f"{6.0e9 + 1e5 * i} {0.8 + 0.01 * i} {-0.1 + 0.01 * i}"
            for i in range(12)
        )
        text = (
            "# kind: s21\n# power: -90\n# power_unit: dBm\n# temperature: 0.02\n"
            f"# columns: frequency_hz re_s21 im_s21\n{rows}\n"
        )
        s21 = as_s21_trace(ingest(write(tmp_path, text)))
        assert s21.s21[0] == pytest.approx(0.8 - 0.1j)
        assert s21.stimulus_power == pytest.approx(1e-12)
        assert s21.temperature == 0.02

    def test_decay_adapter_accepts_ramsey(self, tmp_path):
        text = (
            "# kind: ramsey\n# qubit_id: q3\n"
            "# columns: delay_s population\n0.0 1.0\n1e-6 0.6\n"
        )
        trace = as_decay_trace(ingest(write(tmp_path, text)))
        assert trace.label == "q3"
        assert trace.x_unit == "s"

    def test_adapter_rejects_wrong_kind(self, tmp_path):
        trace = ingest(write(tmp_path, RT_TEXT))
        with pytest.raises(SchemaError, match="need a iv trace"):
            as_iv_trace(trace)


def film_row():
    report = FilmReport(
        tc=9.2,
        tc_width=0.05,
        rrr=3.1,
        rho0=4.0e-9,
        sheet_resistance=0.04,
        kinetic_inductance=1.8e-13,
        london_depth=1.2e-7,
        delta_tc_from_bulk=0.1,
    )
    return ReportRow(result=report, source="film.dat", digest="aa11", wafer_id="W3")


def qubit_row():
    coherence = CoherenceRecord.from_times(4.1e9, 60e-6, t2_echo=80e-6)
    transmon = TransmonParams(
        ej_over_h=1.7e10,
        ec_over_h=2.4e8,
        f01=5.5e9,
        anharmonicity=-2.7e8,
        c_sigma=8e-14,
        junction_capacitance=5.78e-15,
        participation_pj=0.072,
    )
    return ReportRow(
        result=QubitResult(coherence=coherence, transmon=transmon),
        source="q1.dat",
        digest="bb22",
        wafer_id="W3",
    )


def aux_row():
    result = AuxiliaryResult(
        analysis="anneal",
        param_names=("alpha", "tau"),
        params=(0.45, 300.0),
        covariance=((1e-6, 0.0), (0.0, 2.0)),
        points=((0.0, 1.0), (600.0, 0.62)),
        context={"process": "PECVD"},
    )
    return ReportRow(result=result, source="anneal.dat", digest="cc33", wafer_id="W3")


def sample_report():
    calibration = WaferCalibration(
        specific_resistance=4.94e-9,
        dimension_bias=1.6e-7,
        icrn_product=1.482e-3,
        jc=1.482e-3 / 4.94e-9,
        spacer_process="PECVD",
        tc=9.2,
    )
    return AnalysisReport(
        wafer_id="W3",
        created_at="2026-02-03T04:05:06Z",
        film=(film_row(),),
        calibrations=(
            ReportRow(calibration, source="areas.dat", digest="dd44", wafer_id="W3"),
        ),
        qubits=(qubit_row(),),
        auxiliary=(aux_row(),),
        errors=({"source": "x.dat", "stage": "ingest", "message": "boom"},),
        status="partial",
    )


class TestReportPersistence:
    def test_save_load_save_is_byte_identical(self, tmp_path):
        p1, p2 = tmp_path / "r1.json", tmp_path / "r2.json"
        save_report(sample_report(), p1)
        save_report(load_report(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_loaded_rows_equal_originals(self, tmp_path):
        path = tmp_path / "r.json"
        original = sample_report()
        save_report(original, path)
        loaded = load_report(path)
        assert loaded.film[0].result == original.film[0].result
        assert loaded.calibrations[0].result == original.calibrations[0].result
        assert loaded.qubits[0].result == original.qubits[0].result
        assert loaded.auxiliary[0].result == original.auxiliary[0].result
        assert loaded.errors == original.errors
        assert loaded.status == "partial"

    def test_provenance_maps_sources_to_digests(self):
        report = sample_report()
        assert report.provenance == {
            "film.dat": "aa11",
            "areas.dat": "dd44",
            "q1.dat": "bb22",
            "anneal.dat": "cc33",
        }

    def test_dict_round_trip(self):
        report = sample_report()
        assert report_from_dict(report_to_dict(report)) == report

    def test_schema_version_checked(self):
        doc = report_to_dict(sample_report())
        doc["schema_version"] = 99
        with pytest.raises(SchemaError, match="schema_version 99"):
            report_from_dict(doc)

    def test_non_json_file_rejected(self, tmp_path):
        path = write(tmp_path, "not json at all", name="r.json")
        with pytest.raises(SchemaError, match="not a report file"):
            load_report(path)

    def test_qubit_result_needs_content(self):
        with pytest.raises(Exception, match="coherence or transmon"):
            QubitResult()
