import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from mtctraffic.distributions import (
    ALL_FAMILIES,
    DistSpec,
    cdf,
    fit_mle,
    log_likelihood,
    pdf,
    quantile,
    sample,
)
from mtctraffic.traffic import stream


def random_spec(family, rng):
    if family == "Exponential":
        return DistSpec(family, (rng.uniform(0.1, 10),))
    if family == "Beta":
        return DistSpec(family, (rng.uniform(0.6, 8), rng.uniform(0.6, 8), rng.uniform(0.5, 50)))
    if family == "GeneralizedPareto":
        return DistSpec(family, (rng.uniform(-0.8, 0.45), rng.uniform(0.1, 10)))
    if family == "Weibull":
        return DistSpec(family, (rng.uniform(0.6, 5), rng.uniform(0.1, 10)))
    return DistSpec(family, (rng.uniform(-0.45, 0.45), rng.uniform(-5, 5), rng.uniform(0.1, 5)))


def reference(spec):
    """The same law from scipy.stats, as an independent implementation."""
    p = spec.params
    return {
        "Exponential": lambda: stats.expon(scale=p[0]),
        "Beta": lambda: stats.beta(p[0], p[1], scale=p[2]),
        "GeneralizedPareto": lambda: stats.genpareto(p[0], scale=p[1]),
        "Weibull": lambda: stats.weibull_min(p[0], scale=p[1]),
        "GEV": lambda: stats.genextreme(-p[0], loc=p[1], scale=p[2]),
    }[spec.family]()


SPECS = [random_spec(f, np.random.default_rng(i)) for f in ALL_FAMILIES for i in range(20)]


def spec_id(s):
    return str(s)


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_pdf_integrates_to_one(spec):
    lo, hi = spec.support()
    pieces = [lo, hi]
    if math.isinf(lo) or math.isinf(hi):
        mid = float(spec.quantile(0.5))
        pieces = [lo, mid, hi]
    total = sum(integrate.quad(lambda t: float(spec.pdf(t)), a, b, epsabs=1e-12, epsrel=1e-10, limit=400)[0]
                for a, b in zip(pieces[:-1], pieces[1:]))
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_pdf_and_cdf_match_reference(spec):
    ref = reference(spec)
    x = ref.ppf(np.linspace(0.001, 0.999, 101))
    np.testing.assert_allclose(spec.pdf(x), ref.pdf(x), rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(spec.cdf(x), ref.cdf(x), rtol=1e-9, atol=1e-12)


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_cdf_is_monotone(spec):
    lo, hi = reference(spec).ppf([1e-6, 1 - 1e-6])
    grid = np.linspace(lo - 1, hi + 1, 1000)
    f = spec.cdf(grid)
    assert np.all(np.diff(f) >= 0)
    assert np.all((f >= 0) & (f <= 1))


@pytest.mark.parametrize("spec", SPECS, ids=spec_id)
def test_quantile_round_trip(spec):
    p = np.random.default_rng(1).uniform(0, 1, 1000)
    np.testing.assert_allclose(spec.cdf(spec.quantile(p)), p, rtol=0, atol=1e-10)


def test_pdf_examples():
    assert pdf(DistSpec.of("GeneralizedPareto", shape=0.0, scale=2.0), 0.0) == 0.5
    assert pdf(DistSpec.of("GeneralizedPareto", shape=0.2, scale=1.0), 1.0) == pytest.approx(1.2**-6, rel=1e-14)
    assert pdf(DistSpec.of("Beta", alpha=1, beta=1, window=10), 3.0) == pytest.approx(0.1, rel=1e-14)
    for spec in SPECS:
        lo, hi = spec.support()
        if math.isfinite(lo):
            assert spec.pdf(lo - 1.0) == 0.0


def test_cdf_examples():
    assert cdf(DistSpec.of("Exponential", scale=1.0), math.log(2)) == pytest.approx(0.5, abs=1e-15)
    for spec in SPECS:
        lo, _ = spec.support()
        if math.isfinite(lo):
            assert spec.cdf(lo - 1.0) == 0.0
    assert cdf(DistSpec.of("GeneralizedPareto", shape=0.2, scale=1.0), 1e300) == 1.0


def test_quantile_examples():
    assert quantile(DistSpec.of("Exponential", scale=1.0), 0.5) == pytest.approx(math.log(2), abs=1e-15)
    assert quantile(DistSpec.of("Beta", alpha=1, beta=1, window=1), 0.25) == pytest.approx(0.25, abs=1e-15)
    for p in (0.0, 1.0, -0.5, 2.0, float("nan")):
        with pytest.raises(ValueError):
            quantile(DistSpec.of("Exponential", scale=1.0), p)


def test_gpd_shape_limit_is_exponential():
    x = np.linspace(0, 30, 301)
    near = DistSpec.of("GeneralizedPareto", shape=1e-8, scale=2.0)
    at = DistSpec.of("GeneralizedPareto", shape=0.0, scale=2.0)
    assert np.max(np.abs(near.pdf(x) - at.pdf(x))) < 1e-6
    np.testing.assert_allclose(at.pdf(x), np.exp(-x / 2) / 2, rtol=1e-14)


def test_sampling_properties():
    gpd = DistSpec.of("GeneralizedPareto", shape=0.3, scale=1.0)
    assert np.all(sample(gpd, 10**4, stream(1)) >= 0)
    assert sample(DistSpec.of("Exponential", scale=2.0), 10**6, stream(2)).mean() == pytest.approx(2.0, rel=0.01)
    assert np.array_equal(gpd.sample(100, stream(3)), gpd.sample(100, stream(3)))
    with pytest.raises(ValueError):
        gpd.sample(0, stream(3))


@pytest.mark.parametrize("bad", [
    ("Exponential", (0.0,)),
    ("Beta", (1.0, -1.0, 1.0)),
    ("Beta", (1.0, 1.0, 0.0)),
    ("GeneralizedPareto", (0.1, -1.0)),
    ("Weibull", (0.0, 1.0)),
    ("GEV", (0.1, 0.0, 0.0)),
    ("GEV", (0.1, 0.0)),
    ("Gamma", (1.0,)),
    ("Exponential", (float("inf"),)),
])
def test_spec_validation(bad):
    with pytest.raises(ValueError):
        DistSpec(*bad)


def test_spec_json_round_trip():
    for spec in SPECS:
        text = spec.to_json()
        assert set(json.loads(text)) == {"family", "params"}
        assert DistSpec.from_json(text) == spec
    assert DistSpec.of("Beta", alpha=2, beta=3, window=4).to_dict() == {
        "family": "Beta", "params": {"alpha": 2.0, "beta": 3.0, "window": 4.0}}


def test_exponential_fit_is_sample_mean():
    fit = fit_mle("Exponential", [1.0, 2.0, 3.0])
    assert fit.spec.params == (2.0,) and fit.converged and fit.support_violations == 0


def test_fit_rejects_small_samples():
    for fam in ("Beta", "GeneralizedPareto", "Weibull", "GEV"):
        with pytest.raises(ValueError):
            fit_mle(fam, np.arange(1.0, 10.0))
    with pytest.raises(ValueError):
        fit_mle("Weibull", [1.0] * 9 + [float("nan")] * 3)


@pytest.mark.parametrize("family", ALL_FAMILIES)
def test_degenerate_sample_is_flagged(family):
    fit = fit_mle(family, [4.0] * 20)
    assert not fit.converged


def test_gpd_self_fit():
    x = DistSpec.of("GeneralizedPareto", shape=0.2, scale=1.0).sample(10**5, stream(77))
    theta, lam = fit_mle("GeneralizedPareto", x).spec.params
    assert abs(theta - 0.2) < 0.05 and abs(lam - 1.0) < 0.05


def test_beta_self_fit_with_window_from_sample():
    x = stream(5).uniform(0, 1, 10**5)
    fit = fit_mle("Beta", x)
    a, b, t = fit.spec.params
    assert abs(a - 1) < 0.05 and abs(b - 1) < 0.05
    assert t == pytest.approx(x.max() * (1 + 1e-6), rel=1e-15)
    assert fit.support_violations == 0


def scipy_fit_ll(family, x):
    if family == "Exponential":
        return stats.expon.logpdf(x, scale=x.mean()).sum()
    if family == "Beta":
        t = x.max() * (1 + 1e-6)
        a, b, _, _ = stats.beta.fit(x, floc=0, fscale=t)
        return stats.beta.logpdf(x, a, b, scale=t).sum()
    if family == "GeneralizedPareto":
        c, _, s = stats.genpareto.fit(x, floc=0)
        return stats.genpareto.logpdf(x, c, scale=s).sum()
    if family == "Weibull":
        k, _, s = stats.weibull_min.fit(x, floc=0)
        return stats.weibull_min.logpdf(x, k, scale=s).sum()
    c, loc, s = stats.genextreme.fit(x)
    return stats.genextreme.logpdf(x, c, loc=loc, scale=s).sum()


@pytest.mark.parametrize("family", ALL_FAMILIES)
@pytest.mark.parametrize("seed", range(5))
def test_fit_at_least_as_good_as_reference_and_start(family, seed):
    rng = np.random.default_rng(seed)
    truth = random_spec(family, rng)
    if family == "GEV":
        truth = DistSpec("GEV", (truth.params[0], truth.params[1] + 10, truth.params[2]))
    x = truth.sample(2000, rng)
    fit = fit_mle(family, x)
    start = DistSpec(family, fit.spec.dist.initial(x))
    assert fit.converged
    assert fit.log_likelihood >= log_likelihood(start, x) - 1e-9
    assert fit.log_likelihood == log_likelihood(fit.spec, x)
    assert fit.log_likelihood >= scipy_fit_ll(family, x) - 1e-4 * abs(fit.log_likelihood)
    assert fit.support_violations == 0
