"""Machine-type communication traffic: synthetic sources, distribution fitting and goodness of fit."""

from .distributions import ALL_FAMILIES, DistSpec, FitResult, fit_all, fit_mle
from .generators import (
    AccessModel,
    EventDrivenConfig,
    EventMode,
    QuasiPeriodicConfig,
    ThreeGppConfig,
    augment_trace,
    gen_3gpp,
    gen_event_driven,
    gen_quasi_periodic,
)
from .gof import (
    GofEntry,
    GofReport,
    ad_statistic,
    chi_squared_test,
    format_table,
    ks_statistic,
    ks_two_sample,
    rank_models,
    rmse,
    tail_error,
)
from .ingest import TrafficClass, build_histogram, classify_stream, parse_csv, readings_to_trace
from .spatial import (
    AreaElement,
    InfluenceFunction,
    InfluenceKind,
    Point2D,
    PoissonField,
    activation_probability,
    influence,
    sample_ppp,
)
from .traffic import DeviceState, MarkovParams, Trace, Transmission, inter_arrival_times, simulate_chain, stream

__version__ = "0.1.0"
