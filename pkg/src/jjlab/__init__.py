"""Superconducting junction, film, resonator and qubit analysis toolkit."""

from jjlab.errors import (
    AnalysisError,
    DomainError,
    FitEvaluationError,
    GeometryError,
    JjlabError,
    NoResonanceError,
    RankDeficiencyError,
    SchemaError,
    UnmetDependencyError,
    UnsupportedRegimeError,
)
from jjlab.film import FilmGeometry, FilmReport, RtTrace, analyze_film
from jjlab.fitkit import FitResult, Trace
from jjlab.io import (
    AnalysisReport,
    TraceFile,
    ingest,
    load_report,
    save_report,
    save_trace,
)
from jjlab.junction import (
    PHI0,
    IvTrace,
    JunctionGeometry,
    RcsjRamp,
    WaferCalibration,
    ab_icrn,
    extract_iv_parameters,
    fit_annealing,
    fit_area_scaling,
    fit_exposure_law,
    ic_from_rn,
    jc_from_calibration,
    josephson_inductance,
    simulate_rcsj_iv,
)
from jjlab.physics import (
    BCS_RATIO,
    complex_conductivity,
    delta0_from_tc,
    gap_vs_temperature,
    quasiparticle_density,
    tc_from_delta0,
)
from jjlab.pipeline import load_config, run_pipeline
from jjlab.plots import FIGURES, emit_plot_data
from jjlab.qubit import (
    CoherenceRecord,
    TransmonParams,
    fit_echo,
    fit_ramsey,
    fit_t1,
    loss_budget_fit,
    loss_budget_model,
    quasiparticle_q,
    transmon_from_design,
    transmon_spectrum,
)
from jjlab.resonator import (
    ResonatorFit,
    S21Trace,
    TlsParams,
    fit_qi_vs_power,
    fit_qi_vs_temperature,
    fit_s21,
    tls_loss,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisError",
    "AnalysisReport",
    "BCS_RATIO",
    "CoherenceRecord",
    "DomainError",
    "FIGURES",
    "FilmGeometry",
    "FilmReport",
    "FitEvaluationError",
    "FitResult",
    "GeometryError",
    "IvTrace",
    "JjlabError",
    "JunctionGeometry",
    "NoResonanceError",
    "PHI0",
    "RankDeficiencyError",
    "RcsjRamp",
    "ResonatorFit",
    "RtTrace",
    "S21Trace",
    "SchemaError",
    "TlsParams",
    "Trace",
    "TraceFile",
    "TransmonParams",
    "UnmetDependencyError",
    "UnsupportedRegimeError",
    "WaferCalibration",
    "ab_icrn",
    "analyze_film",
    "complex_conductivity",
    "delta0_from_tc",
    "emit_plot_data",
    "extract_iv_parameters",
    "fit_annealing",
    "fit_area_scaling",
    "fit_echo",
    "fit_exposure_law",
    "fit_qi_vs_power",
    "fit_qi_vs_temperature",
    "fit_ramsey",
    "fit_s21",
    "fit_t1",
    "gap_vs_temperature",
    "ic_from_rn",
    "ingest",
    "jc_from_calibration",
    "josephson_inductance",
    "load_config",
    "load_report",
    "loss_budget_fit",
    "loss_budget_model",
    "quasiparticle_density",
    "quasiparticle_q",
    "run_pipeline",
    "save_report",
    "save_trace",
    "simulate_rcsj_iv",
    "tc_from_delta0",
    "tls_loss",
    "transmon_from_design",
    "transmon_spectrum",
]
