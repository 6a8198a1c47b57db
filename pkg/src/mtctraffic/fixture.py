"""Synthetic stand-in for the Smart Campus readings, in the ingestion CSV schema.

20 devices (12 type A, 6 type B, 2 type C) observed for 25 hours, i.e.
500 device-hours. Environmental streams report about every 15 minutes via
the quasi-periodic source; CO2, sound and motion streams come from the
bursty idle/active chain at one-minute resolution. Regenerate with::

    python -m mtctraffic.fixture > src/mtctraffic/data/smart_campus_fixture.csv
"""

import sys
import zlib

from .generators import QuasiPeriodicConfig, _quasi_periodic_device
from .ingest import CAPABILITIES, DEFAULT_CLASSES, RawReading, TrafficClass, write_csv
from .traffic import MarkovParams, simulate_chain, stream

FIXTURE_SEED = 20240501
ORIGIN_MS = 1_700_000_000_000
MINUTE_MS = 60_000
HOURS = 25
DEVICE_TYPES = ["A"] * 12 + ["B"] * 6 + ["C"] * 2


def _stream_key(device_id: str, measurement: str) -> int:
    return zlib.crc32(f"{device_id}/{measurement}".encode())


def make_fixture(seed: int = FIXTURE_SEED):
    horizon = HOURS * 60
    readings = []
    for index, sensor_type in enumerate(DEVICE_TYPES):
        device_id = f"dev{index:02d}{sensor_type.lower()}"
        for measurement in sorted(CAPABILITIES[sensor_type]):
            key = _stream_key(device_id, measurement)
            rng = stream(seed, key)
            if DEFAULT_CLASSES[measurement] is TrafficClass.QUASI_PERIODIC:
                cfg = QuasiPeriodicConfig(
                    nominal_period=15, device_count=1, horizon=horizon, period_spread=1,
                    jitter=2, start_window=15, p_activate=0.93,
                )
                trace, _ = _quasi_periodic_device(cfg, 0, rng)
                slots = trace.starts.tolist()
            else:
                p = 0.02 + 0.04 * rng.random()
                trace = simulate_chain(MarkovParams(p, q=0.45), horizon, rng)
                # A burst reports once per active minute.
                slots = [s + k for s, d in zip(trace.starts.tolist(), trace.durations.tolist()) for k in range(d)]
            for s in slots:
                ts = ORIGIN_MS + s * MINUTE_MS + int(rng.integers(0, MINUTE_MS))
                readings.append(RawReading(device_id, sensor_type, measurement, ts))
    readings.sort(key=lambda r: (r.timestamp_ms, r.device_id, r.measurement))
    return readings


if __name__ == "__main__":
    write_csv(make_fixture(), sys.stdout)
