"""Slotted MTC traffic: traces, the idle/active device chain and burst lengths."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``key`` (e.g. a device index) under ``seed``.

    Streams are derived with ``SeedSequence`` spawn keys, so a device's draws
    do not depend on how many other devices exist or in which order they run.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True, order=True)
class Transmission:
    start: int
    duration: int = 1

    def __post_init__(self):
        if self.start < 0:
            raise ValueError(f"start slot must be non-negative, got {self.start}")
        if self.duration < 1:
            raise ValueError(f"duration must be >= 1 slot, got {self.duration}")

    @property
    def end(self) -> int:
        return self.start + self.duration


class Trace:
    """Activity of one device over slots ``[0, horizon)``.

    Transmissions are kept as two read-only integer arrays (``starts`` and
    ``durations``). ``rate`` is the traffic rate while active; it is carried
    along as metadata and never used by the statistics.
    """

    __slots__ = ("device_id", "starts", "durations", "horizon", "rate")

    def __init__(self, device_id, transmissions=(), horizon=0, rate=None):
        txs = list(transmissions)
        starts = np.array([t.start for t in txs], dtype=np.int64)
        durations = np.array([t.duration for t in txs], dtype=np.int64)
        self._init(device_id, starts, durations, horizon, rate)

    def _init(self, device_id, starts, durations, horizon, rate):
        horizon = int(horizon)
        if horizon < 0:
            raise ValueError("horizon must be non-negative")
        if starts.shape != durations.shape or starts.ndim != 1:
            raise ValueError("starts and durations must be 1-d arrays of equal length")
        if starts.size:
            if starts[0] < 0:
                raise ValueError(f"device {device_id}: negative start slot")
            if np.any(durations < 1):
                raise ValueError(f"device {device_id}: durations must be >= 1 slot")
            if np.any(np.diff(starts) <= 0):
                raise ValueError(f"device {device_id}: starts must be strictly increasing")
            if np.any(starts[1:] < starts[:-1] + durations[:-1]):
                raise ValueError(f"device {device_id}: overlapping transmissions")
            if starts[-1] + durations[-1] > horizon:
                raise ValueError(f"device {device_id}: last transmission exceeds horizon {horizon}")
        starts.flags.writeable = False
        durations.flags.writeable = False
        for name, value in zip(self.__slots__, (device_id, starts, durations, horizon, rate)):
            object.__setattr__(self, name, value)

    def __setattr__(self, name, value):
        raise AttributeError("Trace is immutable")

    @classmethod
    def from_arrays(cls, device_id, starts, durations, horizon, rate=None) -> "Trace":
        trace = cls.__new__(cls)
        trace._init(
            device_id,
            np.array(starts, dtype=np.int64).reshape(-1),
            np.array(durations, dtype=np.int64).reshape(-1),
            horizon,
            rate,
        )
        return trace

    @property
    def transmissions(self) -> list:
        return [Transmission(int(s), int(d)) for s, d in zip(self.starts, self.durations)]

    def __len__(self):
        return int(self.starts.size)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (
            self.device_id == other.device_id
            and self.horizon == other.horizon
            and self.rate == other.rate
            and np.array_equal(self.starts, other.starts)
            and np.array_equal(self.durations, other.durations)
        )

    __hash__ = None

    def __repr__(self):
        return f"Trace(device_id={self.device_id!r}, n={len(self)}, horizon={self.horizon})"

    def active_slots(self) -> int:
        return int(self.durations.sum())


@dataclass(frozen=True)
class MarkovParams:
    p_activate: float
    q: float = 0.0
    rate_active: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_activate <= 1.0:
            raise ValueError(f"p_activate must lie in [0, 1], got {self.p_activate}")
        _check_q(self.q)
        if self.rate_active < 0:
            raise ValueError(f"rate_active must be non-negative, got {self.rate_active}")


@dataclass(frozen=True)
class DeviceState:
    """Idle (``remaining == 0``) or active with ``remaining`` slots left."""

    remaining: int = 0

    @property
    def active(self) -> bool:
        return self.remaining > 0

    def step(self, params: MarkovParams, rng: np.random.Generator) -> "DeviceState":
        """State for the next slot, given this slot's state.

        An idle device draws its activation in the slot it would become
        active; the slot-by-slot reference for :func:`simulate_chain`.
        """
        if self.remaining > 1:
            return DeviceState(self.remaining - 1)
        if rng.random() < params.p_activate:
            return DeviceState(1 + sample_burst_duration(params.q, rng))
        return DeviceState(0)


def _check_q(q):
    if not 0.0 <= q < 1.0:
        raise ValueError(f"burstiness q must lie in [0, 1), got {q}")


def geometric_pmf(k: int, q: float) -> float:
    """Probability that an activated device stays ``k`` extra slots: (1-q) q^k."""
    _check_q(q)
    if k < 0:
        return 0.0
    return (1.0 - q) * q**k


def sample_burst_duration(q: float, rng: np.random.Generator, size=None):
    """Extra active slots k after activation, P(k) = (1-q) q^k."""
    _check_q(q)
    # numpy's geometric counts trials up to the first success (>= 1).
    k = rng.geometric(1.0 - q, size=size) - 1
    return int(k) if size is None else k


def simulate_chain(params: MarkovParams, horizon: int, rng: np.random.Generator, device_id=0) -> Trace:
    """Run the idle/active chain of one device for ``horizon`` slots.

    In every idle slot the device activates with probability
    ``params.p_activate``; an activation occupies that slot plus k more,
    with k geometric in ``params.q``. The simulation jumps from one renewal
    to the next instead of stepping slot by slot. A burst running past the
    horizon is cut at the horizon.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    p = params.p_activate
    if p == 0.0:
        return Trace.from_arrays(device_id, [], [], horizon, params.rate_active)

    starts = []
    durations = []
    t = 0
    # Expected cycle length drives the batch size; cap it to bound memory.
    cycle = (1.0 - p) / p + 1.0 / (1.0 - params.q)
    batch = int(min(max(16, 1.2 * horizon / cycle + 16), 1 << 20))
    while t < horizon:
        # A gap past the horizon ends the trace; clipping keeps cumsum in range for tiny p.
        gaps = np.minimum(rng.geometric(p, size=batch) - 1, horizon)
        bursts = rng.geometric(1.0 - params.q, size=batch)
        cycle_starts = t + np.cumsum(gaps) + np.concatenate(([0], np.cumsum(bursts[:-1])))
        keep = cycle_starts < horizon
        n_keep = int(keep.sum())
        s = cycle_starts[:n_keep]
        d = bursts[:n_keep]
        starts.append(s)
        durations.append(d)
        if n_keep < batch:
            break
        t = int(s[-1] + d[-1])
    s = np.concatenate(starts) if starts else np.empty(0, dtype=np.int64)
    d = np.concatenate(durations) if durations else np.empty(0, dtype=np.int64)
    d = np.minimum(d, horizon - s)
    return Trace.from_arrays(device_id, s, d, horizon, params.rate_active)


def inter_arrival_times(trace: Trace) -> list:
    """Gaps between consecutive transmission starts, in slots."""
    return np.diff(trace.starts).tolist()


def active_fraction(traces: Sequence[Trace]) -> float:
    total = sum(t.horizon for t in traces)
    return sum(t.active_slots() for t in traces) / total if total else 0.0
