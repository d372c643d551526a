"""Command-line surface over the analysis library.

Every verb prints a JSON payload to stdout (or writes it with --out).
Exit codes: 0 success, 2 partial pipeline, 1 anything the user must fix.
"""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import JjlabError
from .film import analyze_film
from .io import (
    TraceFile,
    _atomic_write,
    as_decay_trace,
    as_iv_trace,
    as_rt_trace,
    as_s21_trace,
    ingest,
    load_report,
    save_report,
    save_trace,
)
from .junction import (
    PHI0,
    JunctionGeometry,
    RcsjRamp,
    WaferCalibration,
    extract_iv_parameters,
    fit_area_scaling,
    jc_from_calibration,
    simulate_rcsj_iv,
)
from .physics import delta0_from_tc
from .pipeline import _auxiliary_task, run_pipeline
from .plots import FIGURES, emit_plot_data
from .qubit import (
    fit_echo,
    fit_ramsey,
    fit_t1,
    loss_budget_fit,
    q_vs_temperature_model,
    transmon_from_design,
    transmon_spectrum,
)
from .resonator import fit_s21

__all__ = ["build_parser", "main"]


class _Parser(argparse.ArgumentParser):
    # usage problems are configuration errors: exit 1, not argparse's 2
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _emit(payload, out_path) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out_path:
        _atomic_write(out_path, text)
    else:
        sys.stdout.write(text)


def _load_json(path):
    with open(path) as handle:
        return json.load(handle)


def _require(args, attr, flag):
    value = getattr(args, attr)
    if value is None:
        raise JjlabError(f"this command needs {flag}")
    return value


def _fit_payload(result) -> dict:
    names = result.param_names or tuple(
        f"p{i}" for i in range(len(result.params))
    )
    sigma = result.param_uncertainties
    return {
        "params": {n: float(v) for n, v in zip(names, result.params)},
        "uncertainties": {n: float(s) for n, s in zip(names, sigma)},
        "covariance": [[float(v) for v in row] for row in result.covariance],
        "residual_norm": float(result.residual_norm),
        "iterations": int(result.iterations),
        "converged": bool(result.converged),
        "flags": list(result.flags),
    }


# ------------------------------------------------------------ handlers


def _cmd_film(args):
    trace = ingest(_require(args, "in_path", "--in"), expected_kind="rt")
    report = analyze_film(as_rt_trace(trace))
    _emit(asdict(report), args.out)
    return 0


def _cmd_fit_area(args):
    trace = ingest(_require(args, "in_path", "--in"), expected_kind="areas")
    result = fit_area_scaling(
        trace.points("width_m", "height_m", "resistance_ohm")
    )
    _emit(_fit_payload(result), args.out)
    return 0


def _cmd_jc(args):
    config = _load_json(_require(args, "config", "--config"))
    payload = {}
    icrn = config.get("icrn_product")
    if args.in_path:
        parsed = extract_iv_parameters(
            as_iv_trace(ingest(args.in_path, expected_kind="iv"))
        )
        payload.update(parsed)
        icrn = parsed["icrn_product"]
    if icrn is None:
        raise JjlabError(
            "jc needs icrn_product in the config or an iv trace via --in"
        )
    rho_s = config.get("specific_resistance")
    if rho_s is None:
        raise JjlabError("jc needs specific_resistance in the config")
    payload["icrn_product"] = float(icrn)
    payload["specific_resistance"] = float(rho_s)
    payload["jc"] = jc_from_calibration(float(rho_s), float(icrn))
    _emit(payload, args.out)
    return 0


def _cmd_aux_fit(kind):
    def handler(args):
        trace = ingest(_require(args, "in_path", "--in"), expected_kind=kind)
        _emit(asdict(_auxiliary_task(trace)), args.out)
        return 0

    return handler


def _cmd_iv_sim(args):
    config = _load_json(_require(args, "config", "--config"))
    out = Path(_require(args, "out", "--out"))
    ic = float(config["ic"])
    rn = float(config["rn"])
    if "capacitance" in config:
        capacitance = float(config["capacitance"])
    else:
        beta_c = float(config.get("beta_c", 1.0))
        capacitance = beta_c * PHI0 / (2.0 * np.pi * ic * rn**2)
    ramp = RcsjRamp(
        i_max=float(config.get("i_max_over_ic", 2.0)) * ic,
        n_steps=int(config.get("n_steps", 200)),
        both_directions=bool(config.get("both_directions", True)),
    )
    up, down = simulate_rcsj_iv(
        ic,
        rn,
        capacitance,
        ramp,
        subgap_resistance=float(config.get("subgap_resistance", 8e3)),
        gap_voltage=config.get("gap_voltage"),
    )
    noise = float(config.get("noise", 0.0))
    rng = np.random.default_rng(args.seed)
    written = []
    for trace in (up, down):
        if trace is None:
            continue
        voltage = trace.voltage
        if noise:
            voltage = voltage + noise * ic * rn * rng.standard_normal(
                voltage.size
            )
        path = (
            out
            if trace.sweep_direction == "up"
            else out.with_name(f"{out.stem}_down{out.suffix}")
        )
        save_trace(
            TraceFile(
                kind="iv",
                header={"sweep": trace.sweep_direction, "ic": ic, "rn": rn},
                columns={"current_a": trace.current, "voltage_v": voltage},
            ),
            path,
        )
        written.append(str(path))
    _emit({"written": written, "flags": list(up.flags)}, None)
    return 0


def _cmd_resonator_fit(args):
    trace = ingest(_require(args, "in_path", "--in"), expected_kind="s21")
    result = fit_s21(as_s21_trace(trace))
    _emit(asdict(result), args.out)
    return 0


def _cmd_qubit_params(args):
    config = _load_json(_require(args, "config", "--config"))
    if "c_sigma" in config:
        # design route: geometry plus wafer calibration
        cal_doc = config.get("calibration")
        if cal_doc is None:
            raise JjlabError("design-based params need a 'calibration' object")
        cal_doc = dict(cal_doc)
        cal_doc.setdefault(
            "jc", cal_doc["icrn_product"] / cal_doc["specific_resistance"]
        )
        calibration = WaferCalibration(**cal_doc)
        geometry = JunctionGeometry(
            design_width=float(config["design_width"]),
            design_height=float(config["design_height"]),
        )
        params = transmon_from_design(
            float(config["c_sigma"]), geometry, calibration
        )
        _emit(asdict(params), args.out)
        return 0
    spectrum = transmon_spectrum(
        float(config["ej_over_h"]),
        float(config["ec_over_h"]),
        mode=config.get("mode", "exact"),
        n_g=float(config.get("n_g", 0.5)),
        cutoff=int(config.get("cutoff", 20)),
    )
    _emit(spectrum, args.out)
    return 0


def _cmd_coherence_fit(fitter, kind):
    def handler(args):
        trace = ingest(_require(args, "in_path", "--in"), expected_kind=kind)
        _emit(_fit_payload(fitter(as_decay_trace(trace))), args.out)
        return 0

    return handler


def _cmd_budget(args):
    report = load_report(_require(args, "in_path", "--in"))
    pairs = [
        (row.result.transmon.participation_pj, row.result.coherence.q1)
        for row in report.qubits
        if row.result.transmon is not None and row.result.coherence is not None
    ]
    if not pairs:
        raise JjlabError(
            "report carries no qubits with both participation and Q1"
        )
    _emit(_fit_payload(loss_budget_fit(pairs)), args.out)
    return 0


def _cmd_qp_curve(args):
    config = _load_json(_require(args, "config", "--config"))
    delta = config.get("delta")
    if delta is None:
        delta = delta0_from_tc(float(config["tc"]))
    t = np.linspace(
        float(config.get("t_min", 0.01)),
        float(config["t_max"]),
        int(config.get("points", 200)),
    )
    q1 = q_vs_temperature_model(
        t,
        f_q=float(config["f_q"]),
        delta=float(delta),
        q1_zero=float(config["q1_zero"]),
        t_ref=config.get("t_ref"),
    )
    _emit(
        {
            "f_q": float(config["f_q"]),
            "delta": float(delta),
            "temperature_k": [float(v) for v in t],
            "q1": [float(v) for v in q1],
        },
        args.out,
    )
    return 0


def _cmd_pipeline_run(args):
    # hand the path through so input paths resolve against the config file
    config = _require(args, "config", "--config")
    report = run_pipeline(config, workers=args.workers)
    if args.out:
        save_report(report, args.out)
    else:
        from .io import report_to_dict

        _emit(report_to_dict(report), None)
    for error in report.errors:
        print(
            f"error: {error['source']} [{error['stage']}]: {error['message']}",
            file=sys.stderr,
        )
    return 2 if report.status == "partial" else 0


def _cmd_plot_emit(args):
    report = load_report(_require(args, "in_path", "--in"))
    paths = emit_plot_data(report, args.figure, args.out or ".")
    _emit({"written": paths}, None)
    return 0


# -------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--in", dest="in_path", help="input trace or report")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument(
        "--seed", type=int, default=0, help="RNG seed for randomized modes"
    )
    common.add_argument(
        "--workers", type=int, default=None, help="worker pool size"
    )

    parser = _Parser(
        prog="jjlab",
        description="Josephson junction, resonator and qubit analysis",
    )
    top = parser.add_subparsers(dest="command", required=True)

    def verb(sub, name, handler, **kwargs):
        p = sub.add_parser(name, parents=[common], **kwargs)
        p.set_defaults(handler=handler)
        return p

    verb(top, "film", _cmd_film, help="R(T) film characterization")

    junction = top.add_parser("junction", help="junction-level analyses")
    jsub = junction.add_subparsers(dest="subcommand", required=True)
    verb(jsub, "fit-area", _cmd_fit_area, help="resistance-area calibration")
    verb(jsub, "jc", _cmd_jc, help="critical current density")
    verb(jsub, "anneal-fit", _cmd_aux_fit("anneal"), help="annealing decay fit")
    verb(
        jsub,
        "exposure-fit",
        _cmd_aux_fit("exposure"),
        help="jc vs oxygen exposure power law",
    )
    verb(jsub, "iv-sim", _cmd_iv_sim, help="RCSJ IV curve simulation")

    resonator = top.add_parser("resonator", help="resonator analyses")
    rsub = resonator.add_subparsers(dest="subcommand", required=True)
    verb(rsub, "fit", _cmd_resonator_fit, help="notch S21 fit")
    verb(rsub, "qi-power", _cmd_aux_fit("qi_power"), help="TLS saturation fit")
    verb(rsub, "qi-temp", _cmd_aux_fit("qi_temp"), help="Qi(T) loss split")

    qubit = top.add_parser("qubit", help="qubit analyses")
    qsub = qubit.add_subparsers(dest="subcommand", required=True)
    verb(qsub, "params", _cmd_qubit_params, help="transmon parameters")
    verb(qsub, "fit-t1", _cmd_coherence_fit(fit_t1, "decay"), help="T1 fit")
    verb(
        qsub,
        "fit-ramsey",
        _cmd_coherence_fit(fit_ramsey, "ramsey"),
        help="Ramsey fringe fit",
    )
    verb(
        qsub, "fit-echo", _cmd_coherence_fit(fit_echo, "decay"), help="echo fit"
    )
    verb(qsub, "budget", _cmd_budget, help="participation loss budget")
    verb(qsub, "qp-curve", _cmd_qp_curve, help="quasiparticle Q1(T) curve")

    pipeline = top.add_parser("pipeline", help="batch analysis")
    psub = pipeline.add_subparsers(dest="subcommand", required=True)
    verb(psub, "run", _cmd_pipeline_run, help="run a config end to end")

    plot = top.add_parser("plot", help="plot-data emission")
    plsub = plot.add_subparsers(dest="subcommand", required=True)
    emit = verb(plsub, "emit", _cmd_plot_emit, help="write figure series files")
    emit.add_argument(
        "--figure", required=True, choices=sorted(FIGURES), help="figure id"
    )

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except KeyError as exc:
        print(f"jjlab: error: missing config key {exc.args[0]!r}", file=sys.stderr)
        return 1
    except (JjlabError, OSError, ValueError) as exc:
        print(f"jjlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
