"""Synthetic MTC traffic sources.

* event-driven: slotted Poisson events with spatial epicenters, or the
  reduced per-device chain with a precomputed activation probability;
* quasi-periodic: device-specific period, random phase, per-opportunity
  Bernoulli activation and geometric bursts;
* 3GPP traffic models 1 (uniform) and 2 (beta) for one access per device;
* augmentation of an existing trace by jitter and bootstrap duplication.

Multi-device generators take an integer master seed and give every device
its own stream (see :func:`mtctraffic.traffic.stream`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import DistSpec
from .spatial import (
    AreaElement,
    InfluenceFunction,
    PoissonField,
    activation_probability,
    influence,
    sample_ppp_array,
)
from .traffic import MarkovParams, Trace, _check_q, sample_burst_duration, simulate_chain, stream

# Stream keys under a master seed.
DEVICE_STREAM = 0
FIELD_STREAM = 1
EVENT_STREAM = 2
ACCESS_STREAM = 3


class TraceSet(list):
    """List of traces plus generator diagnostics.

    ``dropped`` counts opportunities discarded because they would overlap
    the previous transmission or fall outside the horizon; ``positions``
    holds device coordinates when devices were placed spatially.
    """

    def __init__(self, traces=(), dropped: int = 0, positions: Optional[np.ndarray] = None):
        super().__init__(traces)
        self.dropped = dropped
        self.positions = positions


class EventMode(enum.Enum):
    SPATIO_TEMPORAL = "spatio_temporal"
    REDUCED = "reduced"


@dataclass(frozen=True)
class EventDrivenConfig:
    lambda_t: float
    device_field: PoissonField
    epicenter_field: PoissonField
    influence: InfluenceFunction
    q: float = 0.0
    horizon: int = 1000
    mode: EventMode = EventMode.SPATIO_TEMPORAL
    p_activate: Optional[float] = None
    area_element: AreaElement = AreaElement.LINEAR_AS_WRITTEN
    rate_active: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", EventMode(self.mode))
        object.__setattr__(self, "area_element", AreaElement(self.area_element))
        if not self.lambda_t > 0:
            raise ValueError("lambda_t must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        _check_q(self.q)
        if self.mode is EventMode.REDUCED and self.p_activate is None:
            p = activation_probability(self.lambda_t, self.influence, self.area_element)
            object.__setattr__(self, "p_activate", p)
        if self.p_activate is not None and not 0.0 <= self.p_activate <= 1.0:
            raise ValueError("p_activate must lie in [0, 1]")


def gen_event_driven(cfg: EventDrivenConfig, seed: int) -> TraceSet:
    devices = sample_ppp_array(cfg.device_field, stream(seed, FIELD_STREAM))
    n = len(devices)
    if n == 0:
        return TraceSet([], positions=devices)

    if cfg.mode is EventMode.REDUCED:
        params = MarkovParams(cfg.p_activate, cfg.q, cfg.rate_active)
        traces = [simulate_chain(params, cfg.horizon, stream(seed, DEVICE_STREAM, j), device_id=j)
                  for j in range(n)]
        return TraceSet(traces, positions=devices)

    event_rng = stream(seed, EVENT_STREAM)
    device_rngs = [stream(seed, DEVICE_STREAM, j) for j in range(n)]
    p_event = min(cfg.lambda_t, 1.0)
    event_slots = np.flatnonzero(event_rng.random(cfg.horizon) < p_event)
    busy_until = np.zeros(n, dtype=np.int64)
    starts = [[] for _ in range(n)]
    durations = [[] for _ in range(n)]
    for t in event_slots.tolist():
        epicenters = sample_ppp_array(cfg.epicenter_field, event_rng)
        if len(epicenters) == 0:
            continue
        d = np.hypot(devices[:, None, 0] - epicenters[None, :, 0], devices[:, None, 1] - epicenters[None, :, 1])
        # Each epicenter triggers a device independently; log1p(-1) = -inf is a certain trigger.
        with np.errstate(divide="ignore"):
            p_trigger = -np.expm1(np.sum(np.log1p(-np.minimum(influence(cfg.influence, d), 1.0)), axis=1))
        for j in np.flatnonzero(busy_until <= t).tolist():
            rng = device_rngs[j]
            if rng.random() < p_trigger[j]:
                dur = min(1 + sample_burst_duration(cfg.q, rng), cfg.horizon - t)
                starts[j].append(t)
                durations[j].append(dur)
                busy_until[j] = t + dur
    traces = [Trace.from_arrays(j, starts[j], durations[j], cfg.horizon, cfg.rate_active) for j in range(n)]
    return TraceSet(traces, positions=devices)


@dataclass(frozen=True)
class QuasiPeriodicConfig:
    nominal_period: int
    device_count: int
    horizon: int
    period_spread: int = 0
    jitter: int = 0
    start_window: int = 1
    p_activate: float = 1.0
    burst_q: float = 0.0
    start_offset: Optional[int] = None
    rate_active: float = 0.0

    def __post_init__(self):
        if self.nominal_period < 1:
            raise ValueError("nominal_period must be >= 1")
        if self.period_spread < 0 or self.period_spread >= self.nominal_period:
            raise ValueError("period_spread must lie in [0, nominal_period)")
        if self.jitter < 0 or self.jitter >= self.nominal_period:
            raise ValueError("jitter must lie in [0, nominal_period)")
        if self.start_window < 1:
            raise ValueError("start_window must be >= 1")
        if self.start_offset is not None and self.start_offset < 0:
            raise ValueError("start_offset must be non-negative")
        if not 0.0 <= self.p_activate <= 1.0:
            raise ValueError("p_activate must lie in [0, 1]")
        _check_q(self.burst_q)
        if self.device_count < 1:
            raise ValueError("device_count must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


def _quasi_periodic_device(cfg: QuasiPeriodicConfig, j: int, rng: np.random.Generator):
    if cfg.start_offset is not None:
        kappa = cfg.start_offset
    else:
        kappa = int(rng.integers(0, cfg.start_window))
    period = int(rng.integers(cfg.nominal_period - cfg.period_spread, cfg.nominal_period + cfg.period_spread + 1))
    n_opp = max(0, -(-(cfg.horizon - kappa) // period))
    base = kappa + period * np.arange(n_opp, dtype=np.int64)
    active = rng.random(n_opp) < cfg.p_activate
    if cfg.jitter:
        shift = rng.integers(-cfg.jitter, cfg.jitter + 1, size=n_opp)
    else:
        shift = np.zeros(n_opp, dtype=np.int64)
    bursts = rng.geometric(1.0 - cfg.burst_q, size=n_opp)
    cand = base[active] + shift[active]
    dur = bursts[active]
    order = np.argsort(cand, kind="stable")
    cand, dur = cand[order], dur[order]

    starts, durations = [], []
    dropped = 0
    prev_end = 0
    for s, d in zip(cand.tolist(), dur.tolist()):
        if s < 0 or s >= cfg.horizon or s < prev_end:
            dropped += 1
            continue
        d = min(d, cfg.horizon - s)
        starts.append(s)
        durations.append(d)
        prev_end = s + d
    return Trace.from_arrays(j, starts, durations, cfg.horizon, cfg.rate_active), dropped


def gen_quasi_periodic(cfg: QuasiPeriodicConfig, seed: int) -> TraceSet:
    """Device j transmits at kappa_j + (m - 1) T_j (+ jitter) whenever its Bernoulli draw succeeds."""
    traces, dropped = [], 0
    for j in range(cfg.device_count):
        trace, n_drop = _quasi_periodic_device(cfg, j, stream(seed, DEVICE_STREAM, j))
        traces.append(trace)
        dropped += n_drop
    return TraceSet(traces, dropped=dropped)


class AccessModel(enum.Enum):
    UNIFORM = "uniform"
    BETA = "beta"


@dataclass(frozen=True)
class ThreeGppConfig:
    model: AccessModel
    window: float
    device_count: int
    alpha: float = 3.0
    beta: float = 4.0

    def __post_init__(self):
        object.__setattr__(self, "model", AccessModel(self.model))
        if not self.window > 0:
            raise ValueError("window must be positive")
        if self.device_count < 1:
            raise ValueError("device_count must be >= 1")
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("alpha and beta must be positive")

    @property
    def spec(self) -> DistSpec:
        if self.model is AccessModel.UNIFORM:
            return DistSpec("Beta", (1.0, 1.0, self.window))
        return DistSpec("Beta", (self.alpha, self.beta, self.window))


def gen_3gpp(cfg: ThreeGppConfig, seed: int) -> np.ndarray:
    """One access time in ``[0, window]`` per device."""
    rng = stream(seed, ACCESS_STREAM)
    if cfg.model is AccessModel.UNIFORM:
        return rng.uniform(0.0, cfg.window, size=cfg.device_count)
    return cfg.spec.sample(cfg.device_count, rng)


def augment_trace(trace: Trace, jitter: int, resample_fraction: float, rng: np.random.Generator) -> Trace:
    """Jitter every start by up to ``jitter`` slots and bootstrap-duplicate a fraction.

    Shifted starts are clamped into the horizon; transmissions that end up
    overlapping are merged into one.
    """
    if jitter < 0:
        raise ValueError("jitter must be non-negative")
    if not 0.0 <= resample_fraction <= 1.0:
        raise ValueError("resample_fraction must lie in [0, 1]")
    n = len(trace)
    if n == 0 or (jitter == 0 and resample_fraction == 0):
        return Trace.from_arrays(trace.device_id, trace.starts, trace.durations, trace.horizon, trace.rate)

    starts = trace.starts.copy()
    durations = trace.durations.copy()
    n_dup = int(round(resample_fraction * n))
    if n_dup:
        pick = rng.integers(0, n, size=n_dup)
        starts = np.concatenate((starts, starts[pick]))
        durations = np.concatenate((durations, durations[pick]))
    if jitter:
        starts = starts + rng.integers(-jitter, jitter + 1, size=starts.size)
    starts = np.clip(starts, 0, trace.horizon - 1)
    ends = np.minimum(starts + durations, trace.horizon)
    order = np.argsort(starts, kind="stable")
    starts, ends = starts[order], ends[order]

    out_s, out_e = [int(starts[0])], [int(ends[0])]
    for s, e in zip(starts[1:].tolist(), ends[1:].tolist()):
        if s < out_e[-1] or s == out_s[-1]:
            out_e[-1] = max(out_e[-1], e)
        else:
            out_s.append(s)
            out_e.append(e)
    out_s = np.array(out_s)
    return Trace.from_arrays(trace.device_id, out_s, np.array(out_e) - out_s, trace.horizon, trace.rate)
