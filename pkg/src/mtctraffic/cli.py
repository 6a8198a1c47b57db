"""Command-line driver: ``mtctraffic {generate,ingest,fit,gof,report,pipeline}``.

Exit codes: 0 success, 1 internal or numeric failure, 2 input/config error.
"""

from __future__ import annotations

import argparse
import io
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from . import config as cfgmod
from .distributions import ALL_FAMILIES, DistSpec, fit_mle
from .generators import (
    EventDrivenConfig,
    QuasiPeriodicConfig,
    ThreeGppConfig,
    gen_3gpp,
    gen_event_driven,
    gen_quasi_periodic,
)
from .gof import (
    ad_statistic,
    chi_squared_test,
    density_rmse,
    format_table,
    ks_statistic,
    rank_models,
    tail_error,
)
from .ingest import (
    DEFAULT_SLOT_MS,
    ClassificationError,
    CsvFormatError,
    classify_stream,
    group_streams,
    parse_csv,
    readings_to_trace,
    traces_to_dict,
    write_traces_tsv,
)
from .report import (
    EXIT_INPUT,
    EXIT_INTERNAL,
    EXIT_OK,
    PipelineError,
    load_pipeline_config,
    report_json,
    report_tsv,
    run_pipeline,
    to_json,
    write_artifacts,
)
from .spatial import InfluenceFunction, PoissonField, write_points_tsv
from .traffic import MarkovParams, simulate_chain, stream

log = logging.getLogger("mtctraffic")


class UsageError(Exception):
    """Bad input or configuration: exit status 2."""


GENERATE_SCHEMA = {
    "model": (str, "chain"),
    "seed": (int, 0),
    "horizon": (int, 1000),
    "device_count": (int, 5),
    "p_activate": (float, 0.05),
    "q": (float, 0.0),
    "rate_active": (float, 0.0),
    # event-driven
    "mode": (str, "spatio_temporal"),
    "lambda_t": (float, 0.1),
    "device_density": (float, 1e-3),
    "epicenter_density": (float, 1e-4),
    "region_radius": (float, 100.0),
    "influence": (str, "exponential"),
    "influence_scale": (float, 20.0),
    "area_element": (str, "linear"),
    # quasi-periodic
    "nominal_period": (int, 15),
    "period_spread": (int, 0),
    "jitter": (int, 0),
    "start_window": (int, 15),
    "start_offset": (int, None),
    # 3gpp
    "access_model": (str, "beta"),
    "alpha": (float, 3.0),
    "beta": (float, 4.0),
    "window": (float, 10_000.0),
}

SAMPLE_SCHEMA = {
    "input": (str, None),
    "candidates": (cfgmod.as_list, ALL_FAMILIES),
    "family": (str, None),
    "spec": (str, None),
    "tail_fraction": (float, 0.05),
    "seed": (int, 0),
}

INGEST_SCHEMA = {
    "input": (str, None),
    "slot_ms": (int, DEFAULT_SLOT_MS),
    "seed": (int, 0),
}


def _emit(text: str, out: Optional[str], name: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        write_artifacts({name: text}, out)


def _load(args, schema, prefixes=()):
    try:
        conf = cfgmod.load(args.config, schema, prefixes)
    except cfgmod.ConfigError as exc:
        raise UsageError(f"config: {exc}") from None
    if getattr(args, "seed", None) is not None:
        conf["seed"] = args.seed
    return conf


def read_sample(path: str) -> np.ndarray:
    """Numbers from the first column of a text file; ``#`` lines and blanks skipped."""
    values = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                try:
                    values.append(float(line.split()[0]))
                except ValueError:
                    raise UsageError(f"{path}:{lineno}: not a number: {line!r}") from None
    except OSError as exc:
        raise UsageError(f"cannot read sample {path}: {exc.strerror}") from None
    if not values:
        raise UsageError(f"{path}: sample is empty")
    return np.asarray(values)


def raster(traces, width: int = 80) -> str:
    """Text rendering of activity: one row per device, '#' where active."""
    lines = []
    for t in traces:
        row = np.full(min(width, t.horizon), ".", dtype="<U1")
        for s, d in zip(t.starts.tolist(), t.durations.tolist()):
            if s >= width:
                break
            row[s:min(s + d, width)] = "#"
        lines.append(f"{str(t.device_id):>8} {''.join(row)}")
    return "\n".join(lines) + "\n"


def cmd_generate(args) -> int:
    c = _load(args, GENERATE_SCHEMA)
    model = c["model"]
    files = {}
    try:
        if model == "chain":
            params = MarkovParams(c["p_activate"], c["q"], c["rate_active"])
            traces = [simulate_chain(params, c["horizon"], stream(c["seed"], 0, j), device_id=j)
                      for j in range(c["device_count"])]
        elif model == "event_driven":
            region = c["region_radius"]
            ecfg = EventDrivenConfig(
                lambda_t=c["lambda_t"],
                device_field=PoissonField(c["device_density"], region),
                epicenter_field=PoissonField(c["epicenter_density"], region),
                influence=InfluenceFunction(c["influence"], c["influence_scale"]),
                q=c["q"], horizon=c["horizon"], mode=c["mode"],
                area_element=c["area_element"], rate_active=c["rate_active"],
            )
            traces = gen_event_driven(ecfg, c["seed"])
            buf = io.StringIO()
            write_points_tsv(traces.positions, buf)
            files["devices.tsv"] = buf.getvalue()
        elif model == "quasi_periodic":
            qcfg = QuasiPeriodicConfig(
                nominal_period=c["nominal_period"], device_count=c["device_count"], horizon=c["horizon"],
                period_spread=c["period_spread"], jitter=c["jitter"], start_window=c["start_window"],
                p_activate=c["p_activate"], burst_q=c["q"], start_offset=c["start_offset"],
                rate_active=c["rate_active"],
            )
            traces = gen_quasi_periodic(qcfg, c["seed"])
            log.info("quasi-periodic: %d opportunities dropped", traces.dropped)
        elif model == "3gpp":
            tcfg = ThreeGppConfig(c["access_model"], c["window"], c["device_count"], c["alpha"], c["beta"])
            arrivals = gen_3gpp(tcfg, c["seed"])
            if args.format == "json":
                files["arrivals.json"] = to_json({"model": tcfg.model.value, "window": tcfg.window,
                                                  "arrivals": arrivals.tolist()})
            else:
                files["arrivals.tsv"] = "".join(f"{v!r}\n" for v in arrivals.tolist())
            return _write_files(files, args.out)
        else:
            raise UsageError(f"config: unknown model {model!r} (chain, event_driven, quasi_periodic, 3gpp)")
    except ValueError as exc:
        raise UsageError(f"config: {exc}") from None

    if args.format == "json":
        files["traces.json"] = to_json(traces_to_dict(traces))
    elif args.format == "tsv":
        buf = io.StringIO()
        write_traces_tsv(traces, buf)
        files["traces.tsv"] = buf.getvalue()
    else:
        files["traces.txt"] = raster(traces)
    return _write_files(files, args.out)


def _write_files(files, out) -> int:
    if out is None:
        for name in sorted(files):
            if len(files) > 1:
                sys.stdout.write(f"# {name}\n")
            sys.stdout.write(files[name])
    else:
        write_artifacts(files, out)
    return EXIT_OK


def cmd_ingest(args) -> int:
    c = _load(args, INGEST_SCHEMA)
    path = args.input or c["input"]
    if not path:
        raise UsageError("ingest: no input CSV given (positional argument or 'input' key)")
    slot_ms = args.slot_ms or c["slot_ms"]
    try:
        parsed = parse_csv(path)
    except OSError as exc:
        raise UsageError(f"ingest: cannot read {path}: {exc.strerror}") from None
    except CsvFormatError as exc:
        raise UsageError(f"ingest: {exc}") from None
    traces, gaps = [], {}
    for (device, measurement), readings in group_streams(parsed.readings).items():
        try:
            cls = classify_stream(measurement)
        except ClassificationError as exc:
            raise UsageError(f"classify: {exc}") from None
        trace = readings_to_trace(readings, slot_ms, device_id=f"{device}/{measurement}")
        traces.append(trace)
        gaps.setdefault(cls.value, []).extend(np.diff(trace.starts).tolist())
    files = {"row_errors.tsv": "line\tmessage\n" + "".join(f"{e.line}\t{e.message}\n" for e in parsed.errors)}
    if args.format == "tsv":
        buf = io.StringIO()
        write_traces_tsv(traces, buf)
        files["traces.tsv"] = buf.getvalue()
    else:
        files["traces.json"] = to_json(traces_to_dict(traces))
    for cls, values in sorted(gaps.items()):
        files[f"interarrivals_{cls}.tsv"] = "".join(f"{v}\n" for v in values)
    return _write_files(files, args.out)


def _sample_args(args):
    c = _load(args, SAMPLE_SCHEMA)
    path = args.input or c["input"]
    if not path:
        raise UsageError("no sample file given (--input or 'input' key)")
    return c, read_sample(path)


def cmd_fit(args) -> int:
    c, x = _sample_args(args)
    families = args.family or ([c["family"]] if c["family"] else list(c["candidates"]))
    try:
        fits = {f: fit_mle(f, x) for f in families}
    except ValueError as exc:
        raise UsageError(f"fit: {exc}") from None
    if args.format == "json":
        text = to_json({f: r.to_dict() for f, r in fits.items()})
    else:
        sep = "\t" if args.format == "tsv" else "  "
        rows = [sep.join(("family", "params", "log_likelihood", "converged", "iterations"))]
        for f, r in fits.items():
            params = ",".join(f"{k}={v:.6g}" for k, v in r.spec.param_dict.items())
            rows.append(sep.join((f, params, f"{r.log_likelihood:.6f}", str(r.converged).lower(), str(r.iterations))))
        text = "\n".join(rows) + "\n"
    _emit(text, args.out, f"fit.{'json' if args.format == 'json' else 'tsv'}")
    return EXIT_OK


def cmd_gof(args) -> int:
    c, x = _sample_args(args)
    spec_text = args.spec or c["spec"]
    try:
        if spec_text:
            if os.path.exists(spec_text):
                with open(spec_text, encoding="utf-8") as fh:
                    spec_text = fh.read()
            spec = DistSpec.from_json(spec_text)
            fitted = 0
        else:
            family = (args.family or [c["family"] or "GeneralizedPareto"])[0]
            spec = fit_mle(family, x).spec
            fitted = len(spec.params) - (1 if spec.family == "Beta" else 0)
        chi = chi_squared_test(x, spec, fitted)
        low, high = tail_error(x, spec.cdf, c["tail_fraction"])
    except (ValueError, KeyError) as exc:
        raise UsageError(f"gof: {exc}") from None
    result = {
        "spec": spec.to_dict(),
        "sample_size": int(x.size),
        "ks_stat": ks_statistic(x, spec.cdf),
        "ad_stat": ad_statistic(x, spec.cdf),
        "chi2_stat": chi.statistic,
        "chi2_dof": chi.dof,
        "chi2_pass": chi.passed,
        "chi2_inconclusive": chi.inconclusive,
        "rmse": density_rmse(x, spec),
        "tail_low_err": low,
        "tail_high_err": high,
    }
    if args.format == "json":
        text = to_json(result)
    else:
        sep = "\t" if args.format == "tsv" else " = "
        text = "".join(f"{k}{sep}{v}\n" for k, v in result.items() if k != "spec")
        text = f"spec{sep}{spec}\n" + text
    _emit(text, args.out, f"gof.{'json' if args.format == 'json' else 'tsv'}")
    return EXIT_OK


def cmd_report(args) -> int:
    c, x = _sample_args(args)
    candidates = args.family or list(c["candidates"])
    try:
        report = rank_models(x, candidates, c["tail_fraction"], threads=args.threads)
    except ValueError as exc:
        raise UsageError(f"report: {exc}") from None
    if args.format == "json":
        _emit(report_json(report), args.out, "report.json")
    elif args.format == "tsv":
        _emit(report_tsv(report), args.out, "report.tsv")
    else:
        _emit(format_table(report), args.out, "table.txt")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    conf = load_pipeline_config(args.config)
    result = run_pipeline(conf, seed=args.seed, threads=args.threads)
    out = args.out or "pipeline_out"
    written = write_artifacts(result.artifacts, out)
    for path in written:
        log.info("wrote %s", path)
    for cls, report in result.reports.items():
        sys.stdout.write(f"[{cls}] n = {report.sample_size}\n")
        sys.stdout.write(format_table(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtctraffic", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, formats=("json", "tsv", "table"), default="json"):
        p.add_argument("--config", metavar="PATH", help="key = value configuration file")
        p.add_argument("--seed", type=int, metavar="U64", help="master seed (overrides the config)")
        p.add_argument("--out", metavar="DIR", help="output directory (default: stdout)")
        p.add_argument("--format", choices=formats, default=default)
        return p

    p = common(sub.add_parser("generate", help="synthesize traffic traces"))
    p.set_defaults(func=cmd_generate)

    p = common(sub.add_parser("ingest", help="turn a readings CSV into traces and inter-arrival samples"))
    p.add_argument("input", nargs="?", help="readings CSV")
    p.add_argument("--slot-ms", type=int, help=f"slot length in ms (default {DEFAULT_SLOT_MS})")
    p.set_defaults(func=cmd_ingest)

    for name, func, helptext, default in (
        ("fit", cmd_fit, "maximum-likelihood fit of candidate families", "json"),
        ("gof", cmd_gof, "goodness-of-fit statistics of one model", "json"),
        ("report", cmd_report, "ranked goodness-of-fit report", "table"),
    ):
        p = common(sub.add_parser(name, help=helptext), default=default)
        p.add_argument("--input", metavar="PATH", help="sample file, one value per line")
        p.add_argument("--family", action="append", choices=ALL_FAMILIES, help="candidate family (repeatable)")
        p.add_argument("--threads", type=int, default=1)
        if name == "gof":
            p.add_argument("--spec", help='model as JSON text or file: {"family": ..., "params": {...}}')
        p.set_defaults(func=func)

    p = common(sub.add_parser("pipeline", help="ingest, classify, fit and report in one go"))
    p.add_argument("--threads", type=int, help="parallel candidate fits (results do not depend on it)")
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"error: internal failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
