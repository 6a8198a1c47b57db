"""Goodness-of-fit statistics and the ranked model report.

Every test here takes a model CDF as a vectorized callable (a
:class:`~mtctraffic.distributions.DistSpec` method such as ``spec.cdf``
works). Only the chi-squared test carries a pass/fail decision; K-S and
A-D are reported as raw statistics and used for ranking.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from . import special
from .distributions import DistSpec, FitResult, fit_mle, get_family
from .ingest import build_histogram

ALPHA = 0.01
AD_CLAMP = 1e-15
MIN_EXPECTED = 5.0


def _sorted_sample(sample) -> np.ndarray:
    x = np.sort(np.asarray(sample, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("sample must be non-empty")
    return x


def _ks_from_u(u: np.ndarray) -> float:
    n = u.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - u), np.max(u - (i - 1) / n), 0.0))


def ks_statistic(sample, model_cdf: Callable) -> float:
    """One-sample Kolmogorov-Smirnov distance D."""
    x = _sorted_sample(sample)
    return _ks_from_u(np.asarray(model_cdf(x), dtype=float))


def ks_two_sample(a, b) -> float:
    """Sup distance between two empirical CDFs."""
    a = _sorted_sample(a)
    b = _sorted_sample(b)
    # Evaluate both ECDFs right after every jump point of the pooled sample.
    pooled = np.concatenate((a, b))
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def _ad_from_u(u: np.ndarray) -> float:
    n = u.size
    u = np.clip(u, AD_CLAMP, 1.0 - AD_CLAMP)
    i = np.arange(1, n + 1)
    s = np.sum((2 * i - 1) * (np.log(u) + np.log1p(-u[::-1])))
    return float(-n - s / n)


def ad_statistic(sample, model_cdf: Callable) -> float:
    """Anderson-Darling A^2, with model CDF values clamped away from 0 and 1."""
    x = _sorted_sample(sample)
    return _ad_from_u(np.asarray(model_cdf(x), dtype=float))


class ChiSquaredResult(NamedTuple):
    statistic: float
    dof: int
    passed: bool
    inconclusive: bool = False


def chi_squared_statistic(observed, expected) -> float:
    o = np.asarray(observed, dtype=float)
    e = np.asarray(expected, dtype=float)
    if o.shape != e.shape:
        raise ValueError("observed and expected must have the same length")
    return float(np.sum((o - e) ** 2 / e))


def merge_bins(observed, expected, min_expected: float = MIN_EXPECTED):
    """Merge adjacent bins left to right until each expected count >= ``min_expected``.

    A short remainder at the right end is folded into the last merged bin.
    """
    obs_out: List[float] = []
    exp_out: List[float] = []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if exp_out:
            obs_out[-1] += o_acc
            exp_out[-1] += e_acc
        else:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
    return np.array(obs_out), np.array(exp_out)


def chi_squared_from_counts(observed, expected, fitted_param_count: int = 0,
                            alpha: float = ALPHA) -> ChiSquaredResult:
    obs, exp = merge_bins(observed, expected)
    stat = chi_squared_statistic(obs, exp)
    dof = len(obs) - 1 - fitted_param_count
    if dof < 1:
        return ChiSquaredResult(stat, dof, False, True)
    critical = special.chi2_ppf(1.0 - alpha, dof)
    return ChiSquaredResult(stat, dof, stat < critical)


def chi_squared_bin_count(n: int) -> int:
    """ceil(2 n^0.4), exactly: the least k with k^5 >= 32 n^2."""
    k = math.ceil(2.0 * n**0.4)
    target = 32 * int(n) ** 2
    while (k - 1) ** 5 >= target:
        k -= 1
    while k**5 < target:
        k += 1
    return k


def _chi2_from_u(u: np.ndarray, fitted_param_count: int, alpha: float) -> ChiSquaredResult:
    n = u.size
    k = chi_squared_bin_count(n)
    # Equal-probability bins: bin j holds model probability [j/k, (j+1)/k).
    idx = np.minimum((np.clip(u, 0.0, 1.0) * k).astype(np.int64), k - 1)
    observed = np.bincount(idx, minlength=k)
    expected = np.full(k, n / k)
    return chi_squared_from_counts(observed, expected, fitted_param_count, alpha)


def chi_squared_test(sample, spec: DistSpec, fitted_param_count: int = 0,
                     alpha: float = ALPHA) -> ChiSquaredResult:
    """Pearson test on ceil(2 n^0.4) equal-probability bins under ``spec``."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 25:
        raise ValueError(f"chi-squared test needs at least 25 points, got {x.size}")
    return _chi2_from_u(np.asarray(spec.cdf(x), dtype=float), fitted_param_count, alpha)


def rmse(model_values, data_values) -> float:
    g = np.asarray(model_values, dtype=float).ravel()
    h = np.asarray(data_values, dtype=float).ravel()
    if g.size != h.size:
        raise ValueError(f"length mismatch: {g.size} model values vs {h.size} data values")
    if g.size == 0:
        raise ValueError("rmse needs at least one value")
    return math.sqrt(float(np.mean((g - h) ** 2)))


def _tail_from_u(u: np.ndarray, tail_fraction: float):
    n = u.size
    m = int(math.floor(n * tail_fraction + 1e-9))
    if m < 1:
        raise ValueError(f"no sample points fall in a {tail_fraction} tail of {n} points")
    i = np.arange(1, n + 1)
    dev = np.maximum(np.abs(i / n - u), np.abs(u - (i - 1) / n))
    return float(np.max(dev[:m])), float(np.max(dev[-m:]))


def tail_error(sample, model_cdf: Callable, tail_fraction: float = 0.05):
    """Largest ECDF-vs-model gap among the lowest and highest ``tail_fraction`` of points.

    Returns ``(low, high)``. The gap at a point uses both sides of the ECDF
    step, as the K-S distance does.
    """
    if not 0.0 < tail_fraction < 0.5:
        raise ValueError("tail_fraction must lie in (0, 0.5)")
    x = _sorted_sample(sample)
    if x.size < 20:
        raise ValueError(f"tail error needs at least 20 points, got {x.size}")
    return _tail_from_u(np.asarray(model_cdf(x), dtype=float), tail_fraction)


def density_rmse(sample, spec: DistSpec, edges=None) -> float:
    """RMSE between the sample's histogram density and the model's bin-averaged density."""
    hist = build_histogram(sample) if edges is None else build_histogram(sample, edges=edges)
    edges = np.asarray(hist.bin_edges)
    widths = np.diff(edges)
    model = (np.asarray(spec.cdf(edges[1:])) - np.asarray(spec.cdf(edges[:-1]))) / widths
    return rmse(model, hist.density)


@dataclass(frozen=True)
class GofEntry:
    model_name: str
    ks_stat: float
    ad_stat: float
    chi2_stat: float
    chi2_dof: int
    chi2_pass: bool
    rmse: float
    tail_low_err: float
    tail_high_err: float
    converged: bool = True
    fit: Optional[dict] = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GofReport:
    entries: tuple
    sample_size: int
    alpha: float = ALPHA
    tail_fraction: float = 0.05
    fits: Dict[str, FitResult] = field(default_factory=dict, compare=False)

    @property
    def tail_errors(self) -> Dict[str, dict]:
        return {e.model_name: {"low": e.tail_low_err, "high": e.tail_high_err} for e in self.entries}

    def by_ad(self) -> list:
        return sorted(self.entries, key=lambda e: (_key(e.ad_stat), _key(e.ks_stat), e.model_name))

    def to_dict(self) -> dict:
        return {
            "sample_size": self.sample_size,
            "alpha": self.alpha,
            "entries": [e.to_dict() for e in self.entries],
            "tail_errors": {"tail_fraction": self.tail_fraction, "models": self.tail_errors},
        }


def _key(value: float) -> float:
    return value if math.isfinite(value) else math.inf


def evaluate_fit(sample, fit: FitResult, tail_fraction: float = 0.05, alpha: float = ALPHA) -> GofEntry:
    """All statistics of one fitted model against ``sample``."""
    x = _sorted_sample(sample)
    spec = fit.spec
    u = np.asarray(spec.cdf(x), dtype=float)
    n_params = len(spec.params)
    if spec.family == "Beta":
        n_params -= 1  # the window is set from the sample maximum, not estimated
    chi = _chi2_from_u(u, n_params, alpha)
    low, high = _tail_from_u(u, tail_fraction)
    ok = fit.converged and fit.support_violations == 0
    return GofEntry(
        model_name=get_family(spec.family).label,
        ks_stat=_ks_from_u(u),
        ad_stat=_ad_from_u(u),
        chi2_stat=chi.statistic,
        chi2_dof=chi.dof,
        chi2_pass=bool(chi.passed and ok),
        rmse=density_rmse(x, spec),
        tail_low_err=low,
        tail_high_err=high,
        converged=ok,
        fit=fit.to_dict(),
    )


def _failed_entry(family: str) -> GofEntry:
    nan = math.nan
    return GofEntry(get_family(family).label, nan, nan, nan, 0, False, nan, nan, nan, False, None)


def rank_models(sample, candidates: Sequence[str], tail_fraction: float = 0.05,
                threads: int = 1, alpha: float = ALPHA) -> GofReport:
    """Fit every candidate family and rank them by K-S distance, A-D breaking ties."""
    x = _sorted_sample(sample)
    if x.size < 25:
        raise ValueError(f"ranking needs at least 25 points, got {x.size}")
    candidates = list(dict.fromkeys(candidates))
    for c in candidates:
        get_family(c)

    def one(family):
        try:
            fit = fit_mle(family, x)
            return family, fit, evaluate_fit(x, fit, tail_fraction, alpha)
        except (ValueError, ArithmeticError):
            return family, None, _failed_entry(family)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, candidates))
    else:
        results = [one(c) for c in candidates]
    entries = sorted((r[2] for r in results), key=lambda e: (_key(e.ks_stat), _key(e.ad_stat), e.model_name))
    fits = {fam: fit for fam, fit, _ in results if fit is not None}
    return GofReport(tuple(entries), int(x.size), alpha, tail_fraction, fits)


def format_table(report: GofReport) -> str:
    """Plain-text ranking table: K-S order on the left, A-D order on the right.

    Models that pass the chi-squared test are starred; the C-S column gives
    the decision for the K-S-ranked model of that row.
    """
    by_ks = list(report.entries)
    by_ad = report.by_ad()

    def name(e):
        return e.model_name + ("*" if e.chi2_pass else "")

    def num(v):
        return f"{v:.3f}" if math.isfinite(v) else "n/a"

    header = ("Rank", "Model", "K-S Statistic", "Model", "A-D Statistic", "C-S")
    rows = [
        (str(i + 1), name(k), num(k.ks_stat), name(a), num(a.ad_stat), "pass" if k.chi2_pass else "fail")
        for i, (k, a) in enumerate(zip(by_ks, by_ad))
    ]
    widths = [max(len(r[c]) for r in [header] + rows) for c in range(len(header))]
    align = ["<", "<", ">", "<", ">", "<"]

    def line(cells):
        return "  ".join(f"{c:{a}{w}}" for c, a, w in zip(cells, align, widths)).rstrip()

    rule = "-" * len(line(header))
    out = [line(header), rule] + [line(r) for r in rows] + [rule]
    out.append(f"* passed chi-squared at alpha = {report.alpha:g} (n = {report.sample_size})")
    return "\n".join(out) + "\n"
