"""Report artifacts and the ingest -> classify -> fit -> rank pipeline."""

from __future__ import annotations

import io
import json
import logging
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from . import config as cfgmod
from .distributions import ALL_FAMILIES, get_family
from .generators import augment_trace
from .gof import GofReport, format_table, rank_models
from .ingest import (
    DEFAULT_SLOT_MS,
    ClassificationError,
    CsvFormatError,
    TrafficClass,
    build_histogram,
    classify_stream,
    group_streams,
    histogram_tsv_header,
    parse_csv,
    readings_to_trace,
    write_histogram_tsv,
)
from .traffic import inter_arrival_times, stream

log = logging.getLogger(__name__)

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2
MIN_RANK_SAMPLE = 25
PACKAGE_DATA = os.path.join(os.path.dirname(__file__), "data")
BUNDLED_CONFIG = os.path.join(PACKAGE_DATA, "pipeline.cfg")


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str, exit_code: int = EXIT_INPUT):
        super().__init__(f"{stage}: {message}")
        self.stage = stage
        self.exit_code = exit_code


def _finite(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _finite(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite(v) for v in value]
    return value


def to_json(obj) -> str:
    """Stable JSON text: non-finite floats become null, trailing newline."""
    return json.dumps(_finite(obj), indent=2) + "\n"


def report_json(report: GofReport) -> str:
    return to_json(report.to_dict())


def tail_errors_json(report: GofReport) -> str:
    return to_json({"sample_size": report.sample_size, **report.to_dict()["tail_errors"]})


def report_tsv(report: GofReport) -> str:
    cols = ("rank", "model_name", "ks_stat", "ad_stat", "chi2_stat", "chi2_dof", "chi2_pass",
            "rmse", "tail_low_err", "tail_high_err", "converged")
    lines = ["\t".join(cols)]
    for i, e in enumerate(report.entries, start=1):
        d = e.to_dict()
        d["rank"] = i
        lines.append("\t".join(str(d[c]).lower() if isinstance(d[c], bool) else str(d[c]) for c in cols))
    return "\n".join(lines) + "\n"


def histogram_tsv(values, report: Optional[GofReport] = None) -> str:
    """Data histogram with one model-density column per fitted family."""
    hist = build_histogram(values)
    models: Dict[str, np.ndarray] = {}
    if report is not None:
        edges = hist.bin_edges
        for family, fit in sorted(report.fits.items()):
            spec = fit.spec
            models[get_family(family).label] = (spec.cdf(edges[1:]) - spec.cdf(edges[:-1])) / np.diff(edges)
    buf = io.StringIO()
    buf.write(histogram_tsv_header(models))
    write_histogram_tsv(hist, buf, models)
    return buf.getvalue()


PIPELINE_SCHEMA = {
    "input": (str, None),
    "slot_ms": (int, DEFAULT_SLOT_MS),
    "measurements": (cfgmod.as_list, ()),
    "candidates": (cfgmod.as_list, ALL_FAMILIES),
    "tail_fraction": (float, 0.05),
    "seed": (int, 0),
    "threads": (int, 1),
    "augment_jitter": (int, 0),
    "augment_fraction": (float, 0.0),
}


@dataclass
class PipelineResult:
    artifacts: Dict[str, str]
    reports: Dict[str, GofReport]


def load_pipeline_config(path: Optional[str]) -> dict:
    path = path or BUNDLED_CONFIG
    try:
        conf = cfgmod.load(path, PIPELINE_SCHEMA, prefixes=("class.",))
    except cfgmod.ConfigError as exc:
        raise PipelineError("config", str(exc)) from None
    if conf["input"] is None:
        raise PipelineError("config", "missing required key 'input'")
    if not os.path.isabs(conf["input"]):
        conf["input"] = os.path.join(os.path.dirname(os.path.abspath(path)), conf["input"])
    return conf


def run_pipeline(conf: dict, seed: Optional[int] = None, threads: Optional[int] = None) -> PipelineResult:
    """Compute every artifact in memory; nothing touches the disk here."""
    seed = conf["seed"] if seed is None else seed
    threads = conf["threads"] if threads is None else threads
    for fam in conf["candidates"]:
        try:
            get_family(fam)
        except ValueError as exc:
            raise PipelineError("config", str(exc)) from None
    if conf["slot_ms"] <= 0:
        raise PipelineError("config", "slot_ms must be positive")

    try:
        parsed = parse_csv(conf["input"])
    except OSError as exc:
        raise PipelineError("ingest", f"cannot read {conf['input']}: {exc.strerror}") from None
    except CsvFormatError as exc:
        raise PipelineError("ingest", str(exc)) from None
    for err in parsed.errors:
        log.warning("ingest: line %d skipped: %s", err.line, err.message)

    overrides = {}
    for key, value in conf.items():
        if key.startswith("class."):
            name = key[len("class."):]
            try:
                classify_stream(name)
                overrides[name] = TrafficClass(value)
            except (ClassificationError, ValueError) as exc:
                raise PipelineError("classify", f"{key}: {exc}") from None
    wanted = set(conf["measurements"])
    for name in sorted(wanted):
        try:
            classify_stream(name, overrides)
        except ClassificationError as exc:
            raise PipelineError("classify", str(exc)) from None

    samples: Dict[TrafficClass, List[int]] = {c: [] for c in TrafficClass}
    stream_counts: Dict[str, int] = {c.value: 0 for c in TrafficClass}
    for index, ((device, measurement), readings) in enumerate(group_streams(parsed.readings).items()):
        if wanted and measurement not in wanted:
            continue
        cls = classify_stream(measurement, overrides)
        trace = readings_to_trace(readings, conf["slot_ms"], device_id=f"{device}/{measurement}")
        if conf["augment_jitter"] or conf["augment_fraction"]:
            trace = augment_trace(trace, conf["augment_jitter"], conf["augment_fraction"], stream(seed, 4, index))
        samples[cls].extend(inter_arrival_times(trace))
        stream_counts[cls.value] += 1

    artifacts: Dict[str, str] = {}
    reports: Dict[str, GofReport] = {}
    skipped = {}
    for cls in TrafficClass:
        values = np.asarray(samples[cls], dtype=float)
        if values.size < MIN_RANK_SAMPLE:
            skipped[cls.value] = f"{values.size} inter-arrival times (< {MIN_RANK_SAMPLE})"
            continue
        try:
            report = rank_models(values, conf["candidates"], conf["tail_fraction"], threads=threads)
        except (ValueError, ArithmeticError) as exc:
            raise PipelineError("rank", f"{cls.value}: {exc}", EXIT_INTERNAL) from None
        reports[cls.value] = report
        artifacts[f"{cls.value}_report.json"] = report_json(report)
        artifacts[f"{cls.value}_table.txt"] = format_table(report)
        artifacts[f"{cls.value}_histogram.tsv"] = histogram_tsv(values, report)
        artifacts[f"{cls.value}_tail_errors.json"] = tail_errors_json(report)
    if not reports:
        raise PipelineError("rank", "no traffic class has enough inter-arrival times to rank models")

    artifacts["summary.json"] = to_json({
        "input": os.path.basename(conf["input"]),
        "seed": seed,
        "slot_ms": conf["slot_ms"],
        "readings": len(parsed.readings),
        "row_errors": [{"line": e.line, "message": e.message} for e in parsed.errors],
        "streams": stream_counts,
        "sample_sizes": {c.value: len(samples[c]) for c in TrafficClass},
        "skipped_classes": skipped,
        "candidates": list(conf["candidates"]),
    })
    return PipelineResult(artifacts, reports)


def write_artifacts(artifacts: Dict[str, str], out_dir: str) -> List[str]:
    """Write all artifacts; on failure remove whatever was already written."""
    written: List[str] = []
    try:
        os.makedirs(out_dir, exist_ok=True)
        for name in sorted(artifacts):
            path = os.path.join(out_dir, name)
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                written.append(path)
                fh.write(artifacts[name])
    except OSError as exc:
        for path in written:
            try:
                os.remove(path)
            except OSError:
                pass
        raise PipelineError("write", f"cannot write artifacts to {out_dir}: {exc.strerror}", EXIT_INTERNAL) from None
    return written
