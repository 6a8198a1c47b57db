"""Sensor-reading CSV ingestion, traffic classification, histograms and trace files.

Input CSV (UTF-8, LF)::

    device_id,sensor_type,measurement,timestamp_ms
    dev1,A,co2,1700000000000
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .traffic import Trace

HEADER = ("device_id", "sensor_type", "measurement", "timestamp_ms")
DEFAULT_SLOT_MS = 900_000

COMMON_MEASUREMENTS = frozenset({"temperature", "humidity", "battery"})
CAPABILITIES = {
    "A": frozenset({"co2", "motion", "light"}) | COMMON_MEASUREMENTS,
    "B": frozenset({"sound_avg", "sound_peak", "motion", "light"}) | COMMON_MEASUREMENTS,
    "C": frozenset({"pressure", "moisture"}) | COMMON_MEASUREMENTS,
}
MEASUREMENTS = tuple(sorted(set().union(*CAPABILITIES.values())))


class CsvFormatError(ValueError):
    """The input is not a readings CSV at all (bad header, bad encoding)."""


class ClassificationError(ValueError):
    pass


class TrafficClass(enum.Enum):
    EVENT_DRIVEN = "event_driven"
    QUASI_PERIODIC = "quasi_periodic"


DEFAULT_CLASSES: Dict[str, TrafficClass] = {
    "co2": TrafficClass.EVENT_DRIVEN,
    "sound_avg": TrafficClass.EVENT_DRIVEN,
    "sound_peak": TrafficClass.EVENT_DRIVEN,
    "motion": TrafficClass.EVENT_DRIVEN,
    "temperature": TrafficClass.QUASI_PERIODIC,
    "humidity": TrafficClass.QUASI_PERIODIC,
    "pressure": TrafficClass.QUASI_PERIODIC,
    "moisture": TrafficClass.QUASI_PERIODIC,
    "light": TrafficClass.QUASI_PERIODIC,
    "battery": TrafficClass.QUASI_PERIODIC,
}


@dataclass(frozen=True)
class RawReading:
    device_id: str
    sensor_type: str
    measurement: str
    timestamp_ms: int

    def __post_init__(self):
        caps = CAPABILITIES.get(self.sensor_type)
        if caps is None:
            raise ValueError(f"unknown sensor type {self.sensor_type!r}")
        if self.measurement not in caps:
            raise ValueError(f"type {self.sensor_type} sensors do not measure {self.measurement!r}")
        if self.timestamp_ms < 0:
            raise ValueError("timestamp_ms must be non-negative")


class RowError(NamedTuple):
    line: int
    message: str


class ParsedCsv(NamedTuple):
    readings: List[RawReading]
    errors: List[RowError]


def _parse_row(row: Sequence[str]) -> RawReading:
    if len(row) != len(HEADER):
        raise ValueError(f"expected {len(HEADER)} fields, got {len(row)}")
    device_id, sensor_type, measurement, ts = (c.strip() for c in row)
    if not device_id:
        raise ValueError("empty device_id")
    if not ts.isdigit():
        raise ValueError(f"timestamp_ms must be a non-negative integer, got {ts!r}")
    return RawReading(device_id, sensor_type, measurement, int(ts))


def parse_csv(source: Union[str, os.PathLike, bytes, io.IOBase]) -> ParsedCsv:
    """Read readings; malformed rows are reported with their line number and skipped."""
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, bytes):
        data = source
    else:
        data = source.read()
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CsvFormatError(f"input is not UTF-8: {exc}") from None
    reader = csv.reader(io.StringIO(data, newline=""))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != HEADER:
        raise CsvFormatError(f"header must be exactly {','.join(HEADER)!r}, got {header!r}")
    readings: List[RawReading] = []
    errors: List[RowError] = []
    for row in reader:
        if not row:
            continue
        try:
            readings.append(_parse_row(row))
        except ValueError as exc:
            errors.append(RowError(reader.line_num, str(exc)))
    return ParsedCsv(readings, errors)


def write_csv(readings: Iterable[RawReading], stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(HEADER)
    for r in readings:
        writer.writerow((r.device_id, r.sensor_type, r.measurement, r.timestamp_ms))


def classify_stream(measurement: str, overrides: Optional[Mapping[str, TrafficClass]] = None) -> TrafficClass:
    """Traffic class of a measurement stream.

    Sound and CO2 streams are event-driven, temperature-like streams
    quasi-periodic. ``motion`` (event-driven) and ``light`` (quasi-periodic)
    follow the defaults in :data:`DEFAULT_CLASSES` unless overridden.
    """
    table = dict(DEFAULT_CLASSES)
    if overrides:
        table.update({k: TrafficClass(v) for k, v in overrides.items()})
    try:
        return table[measurement]
    except KeyError:
        raise ClassificationError(
            f"unknown measurement {measurement!r}; valid names: {', '.join(sorted(table))}"
        ) from None


def group_streams(readings: Iterable[RawReading]) -> Dict[Tuple[str, str], List[RawReading]]:
    """Readings keyed by ``(device_id, measurement)``, in sorted key order."""
    groups: Dict[Tuple[str, str], List[RawReading]] = defaultdict(list)
    for r in readings:
        groups[(r.device_id, r.measurement)].append(r)
    return {k: groups[k] for k in sorted(groups)}


def readings_to_trace(readings: Sequence[RawReading], slot_ms: int = DEFAULT_SLOT_MS,
                      device_id=None) -> Trace:
    """Map readings of one stream onto slots of ``slot_ms`` milliseconds.

    Several readings in one slot collapse to a single one-slot transmission.
    """
    if slot_ms <= 0:
        raise ValueError("slot_ms must be positive")
    if device_id is None:
        device_id = readings[0].device_id if readings else ""
    slots = np.unique(np.fromiter((r.timestamp_ms // slot_ms for r in readings), dtype=np.int64,
                                  count=len(readings)))
    horizon = int(slots[-1]) + 1 if slots.size else 0
    return Trace.from_arrays(device_id, slots, np.ones_like(slots), horizon)


# Histograms ---------------------------------------------------------------

class FixedWidth(NamedTuple):
    width: float


class FixedCount(NamedTuple):
    count: int


class Auto(NamedTuple):
    pass


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)


def _edges(values: np.ndarray, rule) -> np.ndarray:
    lo, hi = float(values.min()), float(values.max())
    if isinstance(rule, FixedWidth):
        w = float(rule.width)
        if not w > 0:
            raise ValueError("bin width must be positive")
        n_bins = max(1, math.ceil((hi - lo) / w))
        return lo + w * np.arange(n_bins + 1)
    if isinstance(rule, FixedCount):
        k = int(rule.count)
    elif isinstance(rule, Auto):
        k = math.ceil(math.sqrt(values.size))
    else:
        raise TypeError(f"unknown bin rule {rule!r}")
    if k < 1:
        raise ValueError("bin count must be >= 1")
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return np.linspace(lo, hi, k + 1)


def build_histogram(values, bin_rule=Auto(), edges=None) -> Histogram:
    """Counts and unit-area density; the last bin is closed on the right."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("cannot build a histogram of no values")
    e = np.asarray(edges, dtype=float) if edges is not None else _edges(v, bin_rule)
    counts, e = np.histogram(v, bins=e)
    total = counts.sum()
    density = counts / (total * np.diff(e)) if total else np.zeros(counts.shape)
    return Histogram(e, counts, density)


def write_histogram_tsv(hist: Histogram, stream, model_density=None) -> None:
    """``bin_left<TAB>bin_right<TAB>count<TAB>density`` per bin, plus model columns if given."""
    models = dict(model_density or {})
    for i, (left, right) in enumerate(zip(hist.bin_edges[:-1], hist.bin_edges[1:])):
        cells = [repr(float(left)), repr(float(right)), str(int(hist.counts[i])), repr(float(hist.density[i]))]
        cells += [repr(float(m[i])) for m in models.values()]
        stream.write("\t".join(cells) + "\n")


def histogram_tsv_header(model_names: Iterable[str] = ()) -> str:
    return "\t".join(("bin_left", "bin_right", "count", "density", *model_names)) + "\n"


# Trace files ---------------------------------------------------------------

def traces_to_dict(traces: Sequence[Trace]) -> dict:
    return {
        "traces": [
            {
                "device_id": t.device_id,
                "horizon": t.horizon,
                "rate": t.rate,
                "starts": t.starts.tolist(),
                "durations": t.durations.tolist(),
            }
            for t in traces
        ]
    }


def traces_from_dict(data: dict) -> List[Trace]:
    return [
        Trace.from_arrays(d["device_id"], d["starts"], d["durations"], d["horizon"], d.get("rate"))
        for d in data["traces"]
    ]


def write_traces_tsv(traces: Sequence[Trace], stream) -> None:
    """One ``device_id<TAB>start<TAB>duration`` row per transmission."""
    stream.write("device_id\tstart\tduration\n")
    for t in traces:
        for s, d in zip(t.starts.tolist(), t.durations.tolist()):
            stream.write(f"{t.device_id}\t{s}\t{d}\n")


def dump_json(obj, stream) -> None:
    json.dump(obj, stream, indent=2, sort_keys=False, allow_nan=True)
    stream.write("\n")
