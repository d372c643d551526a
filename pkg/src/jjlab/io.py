"""Trace-file ingestion, SI unit normalization, and report persistence.

Trace files are plain text: `#`-prefixed key-value header lines, a
`# columns:` declaration, then whitespace-delimited numeric rows.  Reports
are canonical JSON (sorted keys, two-space indent) so identical analyses
produce identical bytes.
"""

import hashlib
import json
import os
import re
import tempfile
from dataclasses import dataclass, field, fields as dataclass_fields
from pathlib import Path

import numpy as np

from .errors import DomainError, SchemaError
from .film import FilmGeometry, FilmReport, RtTrace
from .fitkit import Trace
from .junction import IvTrace, WaferCalibration
from .qubit import CoherenceRecord, TransmonParams
from .resonator import ResonatorFit, S21Trace

TOOLKIT_VERSION = "0.1.0"
SCHEMA_VERSION = 1

# required columns per trace kind; extra columns are allowed and preserved
KIND_COLUMNS = {
    "rt": ("temperature_k", "resistance_ohm"),
    "iv": ("current_a", "voltage_v"),
    "s21": ("frequency_hz", "re_s21", "im_s21"),
    "decay": ("delay_s", "population"),
    "ramsey": ("delay_s", "population"),
    "areas": ("width_m", "height_m", "resistance_ohm"),
    "qi_power": ("photon_number", "qi"),
    "qi_temp": ("temperature_k", "qi"),
    "anneal": ("time_s", "resistance_ratio"),
    "exposure": ("exposure_pa_s", "jc_a_m2"),
}

# header keys that stay strings even when they look numeric
_STRING_KEYS = frozenset(
    {"kind", "wafer_id", "label", "sweep", "process", "qubit_id", "role"}
)

_PREFIXES = {
    "a": 1e-18,
    "f": 1e-15,
    "p": 1e-12,
    "n": 1e-9,
    "u": 1e-6,
    "m": 1e-3,
    "k": 1e3,
    "M": 1e6,
    "G": 1e9,
    "T": 1e12,
}
_BASES = ("hz", "ohm", "a", "v", "s", "k", "m", "w", "pa_s")


def _unit_factor(text: str) -> float | str:
    """Scale factor for a unit string, or the sentinel 'dbm'."""
    token = text.strip()
    if token.lower() == "dbm":
        return "dbm"
    if token.lower() in _BASES:
        return 1.0
    if len(token) >= 2 and token[0] in _PREFIXES and token[1:].lower() in _BASES:
        return _PREFIXES[token[0]]
    raise SchemaError(f"unit string {text!r} not recognized")


def _apply_unit(values, factor):
    if factor == "dbm":
        return 10.0 ** ((np.asarray(values, dtype=float) - 30.0) / 10.0)
    return np.asarray(values, dtype=float) * factor


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass(frozen=True)
class TraceFile:
    """One ingested measurement file: validated header plus column arrays."""

    kind: str
    header: dict
    columns: dict
    path: str = ""
    digest: str = ""

    def __len__(self) -> int:
        first = next(iter(self.columns.values()))
        return first.size

    def column(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise SchemaError(
                f"{self.path or 'trace'}: no column {name!r}; "
                f"have {sorted(self.columns)}"
            ) from None

    def points(self, *names) -> np.ndarray:
        return np.column_stack([self.column(n) for n in names])


def ingest(path, expected_kind: str | None = None) -> TraceFile:
    """Parse and validate a trace file, normalizing declared units to SI.

    A header entry ``x_unit: uA`` rescales every column whose name starts
    with ``x`` (and a scalar header value ``x``); the unit keys are dropped
    after application so a re-serialized file never double-converts.
    """
    path = Path(path)
    raw = path.read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    header: dict = {}
    names: list | None = None
    rows: list = []
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        text = line.strip()
        if not text:
            continue
        if text.startswith("#"):
            body = text[1:].strip()
            if not body:
                continue
            key, sep, value = body.partition(":")
            if not sep:
                raise SchemaError(
                    f"{path}:{lineno}: header line needs 'key: value', got {body!r}"
                )
            key = key.strip().lower()
            value = value.strip()
            if key == "columns":
                names = [c.lower() for c in re.split(r"[,\s]+", value) if c]
            else:
                header[key] = value
            continue
        if names is None:
            raise SchemaError(
                f"{path}:{lineno}: data rows before a '# columns:' declaration"
            )
        tokens = text.split()
        if len(tokens) != len(names):
            raise SchemaError(
                f"{path}:{lineno}: expected {len(names)} values, got {len(tokens)}"
            )
        row = []
        for name, token in zip(names, tokens):
            try:
                row.append(float(token))
            except ValueError:
                raise SchemaError(
                    f"{path}:{lineno}: non-numeric value {token!r} "
                    f"in column {name}"
                ) from None
        rows.append(row)

    kind = header.pop("kind", None)
    if kind is None:
        raise SchemaError(f"{path}: header is missing 'kind'")
    if kind not in KIND_COLUMNS:
        raise SchemaError(
            f"{path}: unknown kind {kind!r}; expected one of "
            f"{sorted(KIND_COLUMNS)}"
        )
    if expected_kind is not None and kind != expected_kind:
        raise SchemaError(
            f"{path}: expected a {expected_kind!r} trace, found {kind!r}"
        )
    if names is None or not rows:
        raise SchemaError(f"{path}: no data rows")
    for required in KIND_COLUMNS[kind]:
        if required not in names:
            raise SchemaError(
                f"{path}: {kind} trace is missing required column {required}"
            )
    data = np.asarray(rows, dtype=float)
    columns = {name: data[:, j].copy() for j, name in enumerate(names)}

    # numeric header values, except identifiers
    for key, value in header.items():
        if key in _STRING_KEYS or key.endswith("_unit"):
            continue
        try:
            header[key] = float(value)
        except ValueError:
            pass

    unit_keys = [k for k in header if k.endswith("_unit")]
    for key in unit_keys:
        factor = _unit_factor(header[key])
        base = key[: -len("_unit")]
        for name in columns:
            if name == base or name.startswith(base + "_"):
                columns[name] = _apply_unit(columns[name], factor)
        if base in header and isinstance(header[base], float):
            header[base] = float(_apply_unit(header[base], factor))
    for key in unit_keys:
        del header[key]

    return TraceFile(
        kind=kind, header=header, columns=columns, path=str(path), digest=digest
    )


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_trace(trace: TraceFile, path) -> None:
    """Serialize with full-precision floats; ingest(save(x)) == x numerically."""
    lines = [f"# kind: {trace.kind}"]
    for key in sorted(trace.header):
        lines.append(f"# {key}: {trace.header[key]}")
    names = list(trace.columns)
    lines.append(f"# columns: {' '.join(names)}")
    stacked = np.column_stack([trace.columns[n] for n in names])
    for row in stacked:
        lines.append(" ".join(repr(float(v)) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _expect_kind(trace: TraceFile, *kinds) -> None:
    if trace.kind not in kinds:
        raise SchemaError(
            f"{trace.path or 'trace'}: need a {' or '.join(kinds)} trace, "
            f"got {trace.kind}"
        )


def as_rt_trace(trace: TraceFile) -> RtTrace:
    _expect_kind(trace, "rt")
    geometry = None
    keys = ("length", "width", "thickness")
    if all(isinstance(trace.header.get(k), float) for k in keys):
        geometry = FilmGeometry(*(trace.header[k] for k in keys))
    return RtTrace(
        temperature=trace.column("temperature_k"),
        resistance=trace.column("resistance_ohm"),
        geometry=geometry,
        label=str(trace.header.get("wafer_id", "")),
    )


def as_iv_trace(trace: TraceFile) -> IvTrace:
    _expect_kind(trace, "iv")
    return IvTrace(
        current=trace.column("current_a"),
        voltage=trace.column("voltage_v"),
        sweep_direction=str(trace.header.get("sweep", "up")),
    )


def as_s21_trace(trace: TraceFile) -> S21Trace:
    _expect_kind(trace, "s21")
    s21 = trace.column("re_s21") + 1j * trace.column("im_s21")
    power = trace.header.get("power")
    temperature = trace.header.get("temperature")
    return S21Trace(
        frequency=trace.column("frequency_hz"),
        s21=s21,
        stimulus_power=power if isinstance(power, float) else None,
        temperature=temperature if isinstance(temperature, float) else None,
    )


def as_decay_trace(trace: TraceFile) -> Trace:
    _expect_kind(trace, "decay", "ramsey")
    return Trace(
        x=trace.column("delay_s"),
        y=trace.column("population"),
        x_unit="s",
        label=str(trace.header.get("qubit_id", "")),
    )


@dataclass(frozen=True)
class QubitResult:
    """Coherence summary and, when design data is available, the transmon."""

    coherence: CoherenceRecord | None = None
    transmon: TransmonParams | None = None

    def __post_init__(self):
        if self.coherence is None and self.transmon is None:
            raise DomainError("qubit result needs coherence or transmon data")


@dataclass(frozen=True)
class AuxiliaryResult:
    """A secondary fit (TLS, annealing, exposure) kept with its inputs."""

    analysis: str
    param_names: tuple
    params: tuple
    covariance: tuple
    flags: tuple = ()
    points: tuple = ()
    context: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ReportRow:
    """One analysis result tied to the file (and digest) it came from.

    ``inputs`` lists further (source, digest) pairs for results built from
    several traces, e.g. a qubit combining t1, ramsey and echo scans.
    """

    result: object
    source: str = ""
    digest: str = ""
    wafer_id: str = ""
    inputs: tuple = ()


@dataclass(frozen=True)
class AnalysisReport:
    wafer_id: str
    toolkit_version: str = TOOLKIT_VERSION
    created_at: str = ""
    film: tuple = ()
    calibrations: tuple = ()
    resonators: tuple = ()
    qubits: tuple = ()
    auxiliary: tuple = ()
    errors: tuple = ()
    status: str = "ok"

    @property
    def provenance(self) -> dict:
        out = {}
        for section in (
            self.film,
            self.calibrations,
            self.resonators,
            self.qubits,
            self.auxiliary,
        ):
            for row in section:
                if row.source:
                    out[row.source] = row.digest
                for source, digest in row.inputs:
                    out[source] = digest
        return out


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (tuple, list)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def _encode_dataclass(obj) -> dict:
    return {
        f.name: _jsonable(getattr(obj, f.name)) for f in dataclass_fields(obj)
    }


def _decode_dataclass(cls, payload: dict):
    values = dict(payload)
    if "flags" in values and values["flags"] is not None:
        values["flags"] = tuple(values["flags"])
    return cls(**values)


def _encode_row(row: ReportRow, encode_result) -> dict:
    return {
        "source": row.source,
        "digest": row.digest,
        "wafer_id": row.wafer_id,
        "inputs": [list(pair) for pair in row.inputs],
        "result": encode_result(row.result),
    }


def _encode_qubit(result: QubitResult) -> dict:
    return {
        "coherence": None
        if result.coherence is None
        else _encode_dataclass(result.coherence),
        "transmon": None
        if result.transmon is None
        else _encode_dataclass(result.transmon),
    }


def _decode_qubit(payload: dict) -> QubitResult:
    coherence = payload.get("coherence")
    transmon = payload.get("transmon")
    return QubitResult(
        coherence=None
        if coherence is None
        else _decode_dataclass(CoherenceRecord, coherence),
        transmon=None
        if transmon is None
        else _decode_dataclass(TransmonParams, transmon),
    )


def _decode_auxiliary(payload: dict) -> AuxiliaryResult:
    return AuxiliaryResult(
        analysis=payload["analysis"],
        param_names=tuple(payload["param_names"]),
        params=tuple(payload["params"]),
        covariance=tuple(tuple(r) for r in payload["covariance"]),
        flags=tuple(payload.get("flags", ())),
        points=tuple(tuple(p) for p in payload.get("points", ())),
        context=dict(payload.get("context", {})),
    )


_SECTIONS = {
    "film": (_encode_dataclass, lambda p: _decode_dataclass(FilmReport, p)),
    "calibrations": (
        _encode_dataclass,
        lambda p: _decode_dataclass(WaferCalibration, p),
    ),
    "resonators": (
        _encode_dataclass,
        lambda p: _decode_dataclass(ResonatorFit, p),
    ),
    "qubits": (_encode_qubit, _decode_qubit),
    "auxiliary": (_encode_dataclass, _decode_auxiliary),
}


def report_to_dict(report: AnalysisReport) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "toolkit_version": report.toolkit_version,
        "created_at": report.created_at,
        "wafer_id": report.wafer_id,
        "status": report.status,
        "errors": [dict(e) for e in report.errors],
    }
    for section, (encode, _) in _SECTIONS.items():
        rows = getattr(report, section)
        doc[section] = [_encode_row(row, encode) for row in rows]
    return doc


def report_from_dict(doc: dict) -> AnalysisReport:
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaError(
            f"unsupported report schema_version {version!r}; "
            f"this toolkit reads {SCHEMA_VERSION}"
        )
    sections = {}
    for section, (_, decode) in _SECTIONS.items():
        rows = []
        for entry in doc.get(section, ()):
            rows.append(
                ReportRow(
                    result=decode(entry["result"]),
                    source=entry.get("source", ""),
                    digest=entry.get("digest", ""),
                    wafer_id=entry.get("wafer_id", ""),
                    inputs=tuple(
                        tuple(pair) for pair in entry.get("inputs", ())
                    ),
                )
            )
        sections[section] = tuple(rows)
    return AnalysisReport(
        wafer_id=doc.get("wafer_id", ""),
        toolkit_version=doc.get("toolkit_version", ""),
        created_at=doc.get("created_at", ""),
        errors=tuple(dict(e) for e in doc.get("errors", ())),
        status=doc.get("status", "ok"),
        **sections,
    )


def save_report(report: AnalysisReport, path) -> None:
    """Canonical JSON: load -> save -> load is byte-stable."""
    text = json.dumps(report_to_dict(report), indent=2, sort_keys=True)
    _atomic_write(path, text + "\n")


def load_report(path) -> AnalysisReport:
    with open(path) as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not a report file ({exc})") from None
    return report_from_dict(doc)
