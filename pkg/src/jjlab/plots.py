"""Plot-data emission: column files any external plotter can consume.

Each figure writes one file per series with axis metadata in the header;
no rendering happens here.
"""

import re
from pathlib import Path

import numpy as np

from .errors import DomainError, JjlabError, UnmetDependencyError
from .io import AnalysisReport, _atomic_write
from .qubit import loss_budget_fit, loss_budget_model
from .resonator import TlsParams, tls_loss

__all__ = ["FIGURES", "emit_plot_data"]


def _slug(text: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", str(text).lower()).strip("-")
    return slug or "series"


def _write_series(out_dir, figure_id, series, axes, columns, table) -> str:
    path = out_dir / f"{figure_id}__{_slug(series)}.dat"
    lines = [
        f"# figure: {figure_id}",
        f"# series: {series}",
        f"# xlabel: {axes[0]}",
        f"# ylabel: {axes[1]}",
        f"# columns: {' '.join(columns)}",
    ]
    for row in np.atleast_2d(table):
        lines.append(" ".join(repr(float(v)) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")
    return str(path)


def _jc_vs_exposure(report, out_dir):
    rows = [r for r in report.auxiliary if r.result.analysis == "exposure"]
    if not rows:
        raise UnmetDependencyError(
            "report has no exposure fits; run the exposure analysis first"
        )
    axes = ("oxygen exposure (Pa s)", "critical current density (A/m^2)")
    written = []
    for i, row in enumerate(rows):
        fit = row.result
        series = fit.context.get("process") or f"wafer-set-{i + 1}"
        points = np.asarray(fit.points, dtype=float)
        order = np.argsort(points[:, 0])
        exposure, jc = points[order, 0], points[order, 1]
        params = dict(zip(fit.param_names, fit.params))
        model = params["prefactor"] * exposure ** params["exponent"]
        # reference inverse-square-root trend through the first point
        guide = model[0] * (exposure / exposure[0]) ** -0.5
        table = np.column_stack([exposure, jc, model, guide])
        written.append(
            _write_series(
                out_dir,
                "jc_vs_exposure",
                series,
                axes,
                ("exposure_pa_s", "jc_a_m2", "jc_fit", "jc_guide"),
                table,
            )
        )
    return written


def _q1_vs_frequency(report, out_dir):
    records = [
        r.result.coherence
        for r in report.qubits
        if r.result.coherence is not None
    ]
    if not records:
        raise UnmetDependencyError("report has no qubit coherence records")
    order = np.argsort([rec.f_q for rec in records])
    table = np.column_stack(
        [
            [records[i].f_q for i in order],
            [records[i].q1 for i in order],
        ]
    )
    return [
        _write_series(
            out_dir,
            "q1_vs_frequency",
            "population",
            ("qubit frequency (Hz)", "Q1"),
            ("f_q_hz", "q1"),
            table,
        )
    ]


def _q1_vs_pj(report, out_dir):
    pairs = [
        (row.result.transmon.participation_pj, row.result.coherence.q1)
        for row in report.qubits
        if row.result.transmon is not None and row.result.coherence is not None
    ]
    if not pairs:
        raise UnmetDependencyError(
            "report has no qubits carrying both participation and Q1"
        )
    points = np.asarray(sorted(pairs), dtype=float)
    axes = ("junction participation p_j", "Q1")
    written = [
        _write_series(
            out_dir,
            "q1_vs_pj",
            "measured",
            axes,
            ("participation", "q1"),
            points,
        )
    ]
    try:
        budget = loss_budget_fit(points)
    except JjlabError:
        # too few distinct participations for a model curve: scatter only
        return written
    q_j, q_0 = budget.params
    grid = np.linspace(points[:, 0].min(), points[:, 0].max(), 200)
    model = loss_budget_model(grid, q_j, q_0)
    # 1-sigma parameter-covariance band, labeled as exactly that
    jac = np.column_stack(
        [model**2 * grid / q_j**2, model**2 * (1.0 - grid) / q_0**2]
    )
    variance = np.einsum("ij,jk,ik->i", jac, budget.covariance, jac)
    sigma = np.sqrt(np.maximum(variance, 0.0))
    table = np.column_stack([grid, model, model - sigma, model + sigma])
    written.append(
        _write_series(
            out_dir,
            "q1_vs_pj",
            "budget-model (parameter-covariance band)",
            axes,
            ("participation", "q1_model", "band_low", "band_high"),
            table,
        )
    )
    return written


def _qi_vs_power(report, out_dir):
    rows = [r for r in report.auxiliary if r.result.analysis == "qi_power"]
    if not rows:
        raise UnmetDependencyError("report has no qi-vs-power fits")
    axes = ("mean photon number", "internal quality factor")
    written = []
    for i, row in enumerate(rows):
        fit = row.result
        series = fit.context.get("label") or f"resonator-{i + 1}"
        points = np.asarray(fit.points, dtype=float)
        order = np.argsort(points[:, 0])
        data = points[order]
        params = dict(zip(fit.param_names, fit.params))
        grid = np.logspace(
            np.log10(data[0, 0]), np.log10(data[-1, 0]), 200
        )
        temperature = fit.context.get("temperature", 0.0)
        frequency = fit.context.get("frequency", 0.0)
        if params["f_delta0"] > 0:
            tls = TlsParams(
                f_delta0=params["f_delta0"],
                n_c=params["n_c"],
                beta=params["beta"],
            )
            loss = np.array(
                [tls_loss(n, temperature, frequency, tls) for n in grid]
            )
        else:
            loss = np.zeros_like(grid)
        model = 1.0 / (loss + 1.0 / params["q_other"])
        written.append(
            _write_series(
                out_dir,
                "qi_vs_power",
                f"{series}-data",
                axes,
                ("photon_number", "qi"),
                data,
            )
        )
        written.append(
            _write_series(
                out_dir,
                "qi_vs_power",
                f"{series}-model",
                axes,
                ("photon_number", "qi_model"),
                np.column_stack([grid, model]),
            )
        )
    return written


FIGURES = {
    "jc_vs_exposure": _jc_vs_exposure,
    "q1_vs_frequency": _q1_vs_frequency,
    "q1_vs_pj": _q1_vs_pj,
    "qi_vs_power": _qi_vs_power,
}


def emit_plot_data(report: AnalysisReport, figure_id: str, out_dir) -> list:
    """Write the series files for one figure; returns the paths written."""
    if figure_id not in FIGURES:
        raise DomainError(
            f"unknown figure {figure_id!r}; choose from {sorted(FIGURES)}"
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return sorted(FIGURES[figure_id](report, out))
