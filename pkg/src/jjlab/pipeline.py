"""Batch orchestration: ingest trace files, run fits, assemble one report.

Stages respect physical dependencies (film tc feeds the calibration, the
calibration feeds junction predictions, predictions feed transmon
parameters); everything inside a stage is independent and fans out to a
worker pool.  Rows are sorted by (wafer_id, digest) so reruns and
different worker counts produce identical reports.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

from .errors import JjlabError, SchemaError, UnmetDependencyError
from .film import analyze_film
from .io import (
    KIND_COLUMNS,
    TOOLKIT_VERSION,
    AnalysisReport,
    AuxiliaryResult,
    QubitResult,
    ReportRow,
    as_decay_trace,
    as_iv_trace,
    as_rt_trace,
    as_s21_trace,
    ingest,
)
from .junction import (
    JunctionGeometry,
    WaferCalibration,
    ab_icrn,
    extract_iv_parameters,
    fit_annealing,
    fit_area_scaling,
    fit_exposure_law,
)
from .physics import delta0_from_tc
from .qubit import CoherenceRecord, fit_echo, fit_ramsey, fit_t1, transmon_from_design
from .resonator import fit_qi_vs_power, fit_qi_vs_temperature, fit_s21

__all__ = ["load_config", "run_pipeline"]


def load_config(source) -> dict:
    """Accepts a config dict or a JSON file path; validates the input list."""
    if isinstance(source, dict):
        config = dict(source)
        base = Path(config.get("base_dir", "."))
    else:
        path = Path(source)
        try:
            config = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(config, dict):
            raise SchemaError(f"{path}: config must be a JSON object")
        # relative base_dir is anchored at the config file, not the cwd
        base = path.parent / Path(config.get("base_dir", "."))
    inputs = config.get("inputs")
    if not isinstance(inputs, list) or not inputs:
        raise SchemaError("config needs a non-empty 'inputs' list")
    normalized = []
    for i, entry in enumerate(inputs):
        if not isinstance(entry, dict) or "path" not in entry or "kind" not in entry:
            raise SchemaError(f"inputs[{i}] needs 'path' and 'kind'")
        kind = entry["kind"]
        if kind not in KIND_COLUMNS:
            raise SchemaError(
                f"inputs[{i}]: unknown kind {kind!r}; expected one of "
                f"{sorted(KIND_COLUMNS)}"
            )
        item = dict(entry)
        item["path"] = str(base / entry["path"])
        normalized.append(item)
    config["inputs"] = normalized
    config.setdefault("wafer_id", "")
    config["workers"] = int(config.get("workers", 1))
    if config["workers"] < 1:
        raise SchemaError("workers must be at least 1")
    return config


def _error_row(source: str, stage: str, exc: Exception) -> dict:
    return {"source": source, "stage": stage, "message": str(exc)}


def _row(result, trace, wafer_fallback: str, extras=()) -> ReportRow:
    wafer = str(trace.header.get("wafer_id", "") or wafer_fallback)
    return ReportRow(
        result=result,
        source=trace.path,
        digest=trace.digest,
        wafer_id=wafer,
        inputs=tuple((t.path, t.digest) for t in extras),
    )


def _run_stage(executor, tasks):
    """tasks: list of (callable, trace, stage). Returns (rows, errors) in
    deterministic submission order regardless of worker count."""
    futures = [(executor.submit(fn), trace, stage) for fn, trace, stage in tasks]
    rows, errors = [], []
    for future, trace, stage in futures:
        try:
            rows.append((future.result(), trace))
        except JjlabError as exc:
            errors.append(_error_row(trace.path, stage, exc))
    return rows, errors


def _header_float(trace, key):
    value = trace.header.get(key)
    return value if isinstance(value, float) else None


def _build_calibration(areas_trace, films, ivs, config):
    samples = areas_trace.points("width_m", "height_m", "resistance_ohm")
    scaling = fit_area_scaling(samples)
    rho_s = scaling.value("specific_resistance")
    bias = scaling.value("dimension_bias")

    tc = None
    if films:
        tc = films[0][0].tc
    if tc is None:
        tc = _header_float(areas_trace, "tc")

    icrn = None
    for parsed, iv_trace in ivs:
        icrn = parsed["icrn_product"]
        break
    if icrn is None:
        icrn = _header_float(areas_trace, "icrn_product")
    if icrn is None and isinstance(config.get("icrn_product"), (int, float)):
        icrn = float(config["icrn_product"])
    if icrn is None and tc is not None:
        icrn = ab_icrn(delta0_from_tc(tc), 0.0)
    if icrn is None:
        raise UnmetDependencyError(
            "calibration needs an IcRn product: provide an iv trace, an "
            "icrn_product value, or a film trace for the gap estimate"
        )
    return WaferCalibration(
        specific_resistance=rho_s,
        dimension_bias=bias,
        icrn_product=icrn,
        jc=icrn / rho_s,
        oxidation_exposure=_header_float(areas_trace, "exposure"),
        spacer_process=areas_trace.header.get("process"),
        tc=tc,
    )


def _fit_result_row(analysis, result, points, context):
    return AuxiliaryResult(
        analysis=analysis,
        param_names=tuple(result.param_names or ()),
        params=tuple(float(v) for v in result.params),
        covariance=tuple(tuple(float(v) for v in row) for row in result.covariance),
        flags=tuple(result.flags),
        points=tuple((float(x), float(y)) for x, y in points),
        context={k: v for k, v in context.items() if v is not None},
    )


def _auxiliary_task(trace):
    if trace.kind == "qi_power":
        points = trace.points("photon_number", "qi")
        temperature = _header_float(trace, "temperature")
        frequency = _header_float(trace, "frequency")
        if temperature is None or frequency is None:
            raise SchemaError(
                f"{trace.path}: qi_power header needs temperature and frequency"
            )
        result = fit_qi_vs_power(points, t=temperature, f=frequency)
        context = {
            "temperature": temperature,
            "frequency": frequency,
            "label": trace.header.get("label"),
        }
    elif trace.kind == "qi_temp":
        points = trace.points("temperature_k", "qi")
        frequency = _header_float(trace, "frequency")
        tc = _header_float(trace, "tc")
        if frequency is None or tc is None:
            raise SchemaError(
                f"{trace.path}: qi_temp header needs frequency and tc"
            )
        result = fit_qi_vs_temperature(points, f=frequency, tc=tc)
        context = {"frequency": frequency, "tc": tc}
    elif trace.kind == "anneal":
        points = trace.points("time_s", "resistance_ratio")
        result = fit_annealing(points)
        context = {}
    elif trace.kind == "exposure":
        points = trace.points("exposure_pa_s", "jc_a_m2")
        result = fit_exposure_law(points)
        context = {"process": trace.header.get("process")}
    else:
        raise SchemaError(f"{trace.path}: no auxiliary analysis for {trace.kind}")
    return _fit_result_row(trace.kind, result, points, context)


def _qubit_group(qubit_id, traces, calibration):
    t1_trace = next(
        (t for t in traces if t.kind == "decay" and t.header.get("role") != "echo"),
        None,
    )
    echo_trace = next(
        (t for t in traces if t.kind == "decay" and t.header.get("role") == "echo"),
        None,
    )
    ramsey_trace = next((t for t in traces if t.kind == "ramsey"), None)
    if t1_trace is None:
        raise UnmetDependencyError(
            f"qubit {qubit_id!r} has no t1 decay trace"
        )
    f_q = next(
        (v for v in (_header_float(t, "f_q") for t in traces) if v is not None),
        None,
    )
    if f_q is None:
        raise SchemaError(f"qubit {qubit_id!r} traces carry no f_q header")
    temperature = next(
        (
            v
            for v in (_header_float(t, "temperature") for t in traces)
            if v is not None
        ),
        None,
    )

    t1 = fit_t1(as_decay_trace(t1_trace)).value("t1")
    t2_star = None
    if ramsey_trace is not None:
        t2_star = fit_ramsey(as_decay_trace(ramsey_trace)).value("t2_star")
    t2_echo = None
    if echo_trace is not None:
        t2_echo = fit_echo(as_decay_trace(echo_trace)).value("t2_echo")
    coherence = CoherenceRecord.from_times(
        f_q, t1, t2_star=t2_star, t2_echo=t2_echo, temperature=temperature
    )

    transmon = None
    c_sigma = _header_float(t1_trace, "c_sigma")
    width = _header_float(t1_trace, "design_width")
    height = _header_float(t1_trace, "design_height")
    if c_sigma is not None and width is not None and height is not None:
        if calibration is None:
            raise UnmetDependencyError(
                f"qubit {qubit_id!r} requests transmon parameters but the "
                "report has no wafer calibration"
            )
        transmon = transmon_from_design(
            c_sigma, JunctionGeometry(width, height), calibration
        )
    extras = tuple(t for t in (ramsey_trace, echo_trace) if t is not None)
    return QubitResult(coherence=coherence, transmon=transmon), t1_trace, extras


def run_pipeline(config, workers: int | None = None) -> AnalysisReport:
    """Execute every analysis a config asks for and assemble the report.

    Per-row failures are recorded and the run continues; the report's
    status says whether anything was skipped.
    """
    config = load_config(config)
    if workers is None:
        workers = config["workers"]
    wafer_id = str(config["wafer_id"])
    errors: list = []

    ingested = []
    for entry in config["inputs"]:
        try:
            trace = ingest(entry["path"], expected_kind=entry["kind"])
        except (OSError, JjlabError) as exc:
            errors.append(_error_row(entry["path"], "ingest", exc))
            continue
        overrides = {
            k.lower(): v for k, v in entry.items() if k not in ("path", "kind")
        }
        if overrides:
            trace.header.update(overrides)
        ingested.append(trace)

    by_kind: dict = {}
    for trace in ingested:
        by_kind.setdefault(trace.kind, []).append(trace)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        film_rows, stage_errors = _run_stage(
            executor,
            [
                (lambda t=t: analyze_film(as_rt_trace(t)), t, "film")
                for t in by_kind.get("rt", [])
            ],
        )
        errors.extend(stage_errors)

        iv_rows, stage_errors = _run_stage(
            executor,
            [
                (lambda t=t: extract_iv_parameters(as_iv_trace(t)), t, "iv")
                for t in by_kind.get("iv", [])
            ],
        )
        errors.extend(stage_errors)

        calibration_rows = []
        for areas_trace in by_kind.get("areas", []):
            try:
                cal = _build_calibration(areas_trace, film_rows, iv_rows, config)
                calibration_rows.append((cal, areas_trace))
            except JjlabError as exc:
                errors.append(_error_row(areas_trace.path, "calibration", exc))
        calibration = calibration_rows[0][0] if calibration_rows else None

        resonator_rows, stage_errors = _run_stage(
            executor,
            [
                (lambda t=t: fit_s21(as_s21_trace(t)), t, "resonator")
                for t in by_kind.get("s21", [])
            ],
        )
        errors.extend(stage_errors)

        auxiliary_rows, stage_errors = _run_stage(
            executor,
            [
                (lambda t=t: _auxiliary_task(t), t, t.kind)
                for kind in ("qi_power", "qi_temp", "anneal", "exposure")
                for t in by_kind.get(kind, [])
            ],
        )
        errors.extend(stage_errors)
        # keep the raw extraction visible even when no calibration uses it
        names = ("ic", "rn", "icrn_product")
        zeros = tuple((0.0,) * 3 for _ in range(3))
        for parsed, iv_trace in iv_rows:
            auxiliary_rows.append(
                (
                    AuxiliaryResult(
                        analysis="iv",
                        param_names=names,
                        params=tuple(float(parsed[k]) for k in names),
                        covariance=zeros,
                    ),
                    iv_trace,
                )
            )

        groups: dict = {}
        for trace in by_kind.get("decay", []) + by_kind.get("ramsey", []):
            key = str(trace.header.get("qubit_id", "") or Path(trace.path).stem)
            groups.setdefault(key, []).append(trace)
        qubit_rows = []
        for qubit_id in sorted(groups):
            future = executor.submit(
                _qubit_group, qubit_id, groups[qubit_id], calibration
            )
            qubit_rows.append((qubit_id, groups[qubit_id], future))

        qubit_results = []
        for qubit_id, traces, future in qubit_rows:
            try:
                result, t1_trace, extras = future.result()
                qubit_results.append(_row(result, t1_trace, wafer_id, extras))
            except JjlabError as exc:
                errors.append(_error_row(traces[0].path, "qubit", exc))

    def sorted_rows(pairs):
        rows = [_row(result, trace, wafer_id) for result, trace in pairs]
        return tuple(sorted(rows, key=lambda r: (r.wafer_id, r.digest)))

    created = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    return AnalysisReport(
        wafer_id=wafer_id,
        toolkit_version=TOOLKIT_VERSION,
        created_at=created,
        film=sorted_rows(film_rows),
        calibrations=sorted_rows(calibration_rows),
        resonators=sorted_rows(resonator_rows),
        qubits=tuple(
            sorted(qubit_results, key=lambda r: (r.wafer_id, r.digest))
        ),
        auxiliary=sorted_rows(auxiliary_rows),
        errors=tuple(
            sorted(errors, key=lambda e: (e["source"], e["stage"], e["message"]))
        ),
        status="partial" if errors else "ok",
    )
