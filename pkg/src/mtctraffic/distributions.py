"""Candidate inter-arrival laws: densities, CDFs, quantiles, sampling and MLE fits.

Families and parameter names (also the JSON field names)::

    Exponential        scale
    Beta               alpha, beta, window      support [0, window]
    GeneralizedPareto  shape, scale             support x >= 0 (bounded if shape < 0)
    Weibull            shape, scale
    GEV                shape, location, scale

The generalized Pareto density is (1/scale) (1 + shape x / scale)^-(1 + 1/shape),
reducing to the exponential density when ``shape == 0``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import optimize

from . import special

EULER_GAMMA = 0.5772156649015329
MIN_FIT_SIZE = 10


def _xlogy(a, x):
    """a * log(x) with 0 * log(0) = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(a == 0, 0.0, a * np.log(x))


def _out(value):
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


class Family:
    name: str = ""
    label: str = ""
    param_names: Tuple[str, ...] = ()

    def check(self, params):
        pass

    def support(self, params) -> Tuple[float, float]:
        return 0.0, math.inf

    def logpdf(self, x, params):
        raise NotImplementedError

    def cdf(self, x, params):
        raise NotImplementedError

    def ppf(self, u, params):
        raise NotImplementedError

    # Fitting hooks: unconstrained coordinates for the simplex search.
    def initial(self, x) -> tuple:
        raise NotImplementedError

    def to_free(self, params, x) -> np.ndarray:
        raise NotImplementedError

    def from_free(self, z, x) -> tuple:
        raise NotImplementedError

    def simplex_steps(self, dim: int) -> np.ndarray:
        return np.full(dim, 0.1)


class Exponential(Family):
    name, label, param_names = "Exponential", "Exponential", ("scale",)

    def check(self, params):
        if not params[0] > 0:
            raise ValueError("Exponential scale must be positive")

    def logpdf(self, x, params):
        (lam,) = params
        with np.errstate(invalid="ignore"):
            return np.where(x >= 0, -math.log(lam) - x / lam, -np.inf)

    def cdf(self, x, params):
        (lam,) = params
        return np.where(x > 0, -np.expm1(-np.maximum(x, 0) / lam), 0.0)

    def ppf(self, u, params):
        return -params[0] * np.log1p(-u)

    def initial(self, x):
        return (max(float(np.mean(x)), 1e-300),)

    def to_free(self, params, x):
        return np.log(params)

    def from_free(self, z, x):
        return (math.exp(z[0]),)


class Beta(Family):
    name, label, param_names = "Beta", "Beta", ("alpha", "beta", "window")

    def check(self, params):
        a, b, t = params
        if not (a > 0 and b > 0):
            raise ValueError("Beta shape parameters must be positive")
        if not t > 0:
            raise ValueError("Beta window must be positive")

    def support(self, params):
        return 0.0, params[2]

    def logpdf(self, x, params):
        a, b, t = params
        y = np.asarray(x, dtype=float) / t
        inside = (y >= 0) & (y <= 1)
        yc = np.clip(y, 0.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = _xlogy(a - 1.0, yc) + _xlogy(b - 1.0, 1.0 - yc) - special.betaln(a, b) - math.log(t)
        return np.where(inside, val, -np.inf)

    def cdf(self, x, params):
        a, b, t = params
        y = np.clip(np.asarray(x, dtype=float) / t, 0.0, 1.0)
        return special.betainc(a, b, y)

    def ppf(self, u, params):
        a, b, t = params
        return t * _beta_ppf(np.asarray(u, dtype=float), a, b)

    def initial(self, x):
        t = _beta_window(x)
        y = np.asarray(x) / t
        m, v = float(np.mean(y)), float(np.var(y))
        common = m * (1.0 - m) / v - 1.0 if v > 0 else -1.0
        if not (common > 0 and 0 < m < 1):
            return 1.0, 1.0, t
        return m * common, (1.0 - m) * common, t

    def to_free(self, params, x):
        return np.log(params[:2])

    def from_free(self, z, x):
        return math.exp(z[0]), math.exp(z[1]), _beta_window(x)


class GeneralizedPareto(Family):
    name, label, param_names = "GeneralizedPareto", "Gen. Pareto", ("shape", "scale")

    def check(self, params):
        if not params[1] > 0:
            raise ValueError("GeneralizedPareto scale must be positive")

    def support(self, params):
        theta, lam = params
        return 0.0, (-lam / theta if theta < 0 else math.inf)

    def logpdf(self, x, params):
        theta, lam = params
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if theta == 0:
                val = -math.log(lam) - x / lam
                ok = x >= 0
            else:
                arg = theta * x / lam
                ok = (x >= 0) & (arg > -1)
                val = -math.log(lam) - (1.0 + 1.0 / theta) * np.log1p(np.where(ok, arg, 0.0))
        return np.where(ok, val, -np.inf)

    def cdf(self, x, params):
        theta, lam = params
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        if theta == 0:
            return -np.expm1(-x / lam)
        arg = theta * x / lam
        with np.errstate(divide="ignore", invalid="ignore"):
            val = -np.expm1(-np.log1p(np.maximum(arg, -1.0)) / theta)
        return np.where(arg <= -1, 1.0, np.clip(val, 0.0, 1.0))

    def ppf(self, u, params):
        theta, lam = params
        if theta == 0:
            return -lam * np.log1p(-u)
        return lam * np.expm1(-theta * np.log1p(-u)) / theta

    def initial(self, x):
        m, v = float(np.mean(x)), float(np.var(x))
        theta = 0.5 * (1.0 - m * m / v) if v > 0 else 0.0
        theta = min(max(theta, -0.45), 0.45)
        lam = max(m * (1.0 - theta), 1e-300)
        top = float(np.max(x))
        if theta < 0 and top >= -lam / theta:
            lam = -theta * top * 1.01
        return theta, lam

    def to_free(self, params, x):
        return np.array([params[0], math.log(params[1])])

    def from_free(self, z, x):
        return float(z[0]), math.exp(z[1])

    def simplex_steps(self, dim):
        return np.array([0.05, 0.1])


class Weibull(Family):
    name, label, param_names = "Weibull", "Weibull", ("shape", "scale")

    def check(self, params):
        if not (params[0] > 0 and params[1] > 0):
            raise ValueError("Weibull shape and scale must be positive")

    def logpdf(self, x, params):
        k, lam = params
        x = np.asarray(x, dtype=float)
        z = np.maximum(x, 0.0) / lam
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            val = math.log(k / lam) + _xlogy(k - 1.0, z) - z**k
        return np.where(x >= 0, val, -np.inf)

    def cdf(self, x, params):
        k, lam = params
        z = np.maximum(np.asarray(x, dtype=float), 0.0) / lam
        with np.errstate(over="ignore"):
            return -np.expm1(-(z**k))

    def ppf(self, u, params):
        k, lam = params
        return lam * (-np.log1p(-u)) ** (1.0 / k)

    def initial(self, x):
        x = np.asarray(x, dtype=float)
        pos = x[x > 0]
        if pos.size < 2 or np.ptp(pos) == 0:
            return 1.0, max(float(np.mean(x)), 1e-300)
        logs = np.log(pos)
        k = math.pi / (float(np.std(logs)) * math.sqrt(6.0))
        lam = math.exp(float(np.mean(logs)) + EULER_GAMMA / k)
        return k, lam

    def to_free(self, params, x):
        return np.log(params)

    def from_free(self, z, x):
        return math.exp(z[0]), math.exp(z[1])


class GEV(Family):
    """F(x) = exp(-(1 + shape (x - location) / scale)^(-1/shape))."""

    name, label, param_names = "GEV", "GEV", ("shape", "location", "scale")

    def check(self, params):
        if not params[2] > 0:
            raise ValueError("GEV scale must be positive")

    def support(self, params):
        xi, mu, sigma = params
        if xi > 0:
            return mu - sigma / xi, math.inf
        if xi < 0:
            return -math.inf, mu - sigma / xi
        return -math.inf, math.inf

    def logpdf(self, x, params):
        xi, mu, sigma = params
        z = (np.asarray(x, dtype=float) - mu) / sigma
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if xi == 0:
                return -math.log(sigma) - z - np.exp(-z)
            arg = xi * z
            ok = arg > -1
            logt = np.log1p(np.where(ok, arg, 0.0))
            val = -math.log(sigma) - (1.0 + 1.0 / xi) * logt - np.exp(-logt / xi)
        return np.where(ok, val, -np.inf)

    def cdf(self, x, params):
        xi, mu, sigma = params
        z = (np.asarray(x, dtype=float) - mu) / sigma
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if xi == 0:
                return np.exp(-np.exp(-z))
            arg = xi * z
            val = np.exp(-np.exp(-np.log1p(np.maximum(arg, -1.0)) / xi))
        return np.where(arg <= -1, 0.0 if xi > 0 else 1.0, val)

    def ppf(self, u, params):
        xi, mu, sigma = params
        w = -np.log(u)
        if xi == 0:
            return mu - sigma * np.log(w)
        return mu + sigma * np.expm1(-xi * np.log(w)) / xi

    def initial(self, x):
        sigma = max(float(np.std(x)) * math.sqrt(6.0) / math.pi, 1e-300)
        mu = float(np.mean(x)) - EULER_GAMMA * sigma
        return 0.0, mu, sigma

    # Location is searched in units of the sample spread.
    def to_free(self, params, x):
        s = _spread(x)
        return np.array([params[0], params[1] / s, math.log(params[2])])

    def from_free(self, z, x):
        return float(z[0]), float(z[1]) * _spread(x), math.exp(z[2])

    def simplex_steps(self, dim):
        return np.array([0.05, 0.1, 0.1])


def _spread(x):
    s = float(np.std(x))
    return s if s > 0 else max(abs(float(np.mean(x))), 1.0)


def _beta_window(x):
    top = float(np.max(x))
    if not top > 0:
        raise ValueError("Beta fit needs a sample with a positive maximum")
    return top * (1.0 + 1e-6)


def _beta_ppf(u, a, b, tol=1e-13, max_iter=200):
    """Inverse regularized incomplete beta by safeguarded Newton steps."""
    u = np.asarray(u, dtype=float)
    scalar = u.ndim == 0
    u = np.atleast_1d(u)
    if a == 1.0 or b == 1.0:
        # Closed-form inverses: I_y(1, b) = 1 - (1-y)^b and I_y(a, 1) = y^a.
        y = -np.expm1(np.log1p(-u) / b) if a == 1.0 else np.exp(np.log(u) / a)
        return float(y[0]) if scalar else y
    log_b = special.betaln(a, b)
    # Starting points from the leading terms of the two tail expansions.
    with np.errstate(divide="ignore", over="ignore"):
        y = np.where(
            u < 0.5,
            np.exp((np.log(u) + math.log(a) + log_b) / a),
            -np.expm1((np.log1p(-u) + math.log(b) + log_b) / b),
        )
    y = np.where((y > 0) & (y < 1), y, u)
    lo = np.zeros_like(u)
    hi = np.ones_like(u)
    todo = np.ones(u.shape, dtype=bool)
    for _ in range(max_iter):
        idx = np.flatnonzero(todo)
        if idx.size == 0:
            break
        yi = y[idx]
        f = special.betainc(a, b, yi) - u[idx]
        below = f < 0
        lo[idx] = np.where(below, yi, lo[idx])
        hi[idx] = np.where(below, hi[idx], yi)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            dens = np.exp(_xlogy(a - 1.0, yi) + _xlogy(b - 1.0, 1.0 - yi) - log_b)
            step = yi - f / dens
        bad = ~np.isfinite(step) | (step <= lo[idx]) | (step >= hi[idx])
        step = np.where(bad, 0.5 * (lo[idx] + hi[idx]), step)
        y[idx] = step
        done = (np.abs(f) <= tol * np.maximum(u[idx], 1e-300)) | (hi[idx] - lo[idx] <= 1e-16)
        # Once within tolerance keep the evaluated point, not the next step.
        y[idx[done]] = yi[done]
        todo[idx[done]] = False
    return float(y[0]) if scalar else y


FAMILIES: Dict[str, Family] = {
    f.name: f for f in (Exponential(), Beta(), GeneralizedPareto(), Weibull(), GEV())
}
ALL_FAMILIES = tuple(FAMILIES)


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; expected one of {', '.join(FAMILIES)}") from None


@dataclass(frozen=True)
class DistSpec:
    family: str
    params: tuple

    def __post_init__(self):
        fam = get_family(self.family)
        params = tuple(float(p) for p in self.params)
        if len(params) != len(fam.param_names):
            raise ValueError(f"{self.family} takes parameters {fam.param_names}, got {params}")
        if not all(math.isfinite(p) for p in params):
            raise ValueError(f"{self.family} parameters must be finite, got {params}")
        fam.check(params)
        object.__setattr__(self, "params", params)

    @classmethod
    def of(cls, family: str, **params) -> "DistSpec":
        fam = get_family(family)
        missing = set(fam.param_names) - set(params)
        extra = set(params) - set(fam.param_names)
        if missing or extra:
            raise ValueError(f"{family} expects parameters {fam.param_names}")
        return cls(family, tuple(params[n] for n in fam.param_names))

    @property
    def dist(self) -> Family:
        return FAMILIES[self.family]

    @property
    def param_dict(self) -> Dict[str, float]:
        return dict(zip(self.dist.param_names, self.params))

    def support(self):
        return self.dist.support(self.params)

    def logpdf(self, x):
        return _out(self.dist.logpdf(np.asarray(x, dtype=float), self.params))

    def pdf(self, x):
        return _out(np.exp(self.dist.logpdf(np.asarray(x, dtype=float), self.params)))

    def cdf(self, x):
        return _out(self.dist.cdf(np.asarray(x, dtype=float), self.params))

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        if np.any(~((p > 0) & (p < 1))):
            raise ValueError("quantile needs probabilities strictly inside (0, 1)")
        return _out(self.dist.ppf(p, self.params))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if n < 1:
            raise ValueError("sample size must be positive")
        # 53-bit uniforms shifted by half a step: never exactly 0 or 1.
        u = (rng.integers(0, 1 << 53, size=n, dtype=np.int64) + 0.5) / float(1 << 53)
        return np.asarray(self.dist.ppf(u, self.params), dtype=float)

    def to_dict(self) -> dict:
        return {"family": self.family, "params": self.param_dict}

    @classmethod
    def from_dict(cls, data: dict) -> "DistSpec":
        return cls.of(data["family"], **data["params"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DistSpec":
        return cls.from_dict(json.loads(text))

    def __str__(self):
        inner = ", ".join(f"{k}={v:.6g}" for k, v in self.param_dict.items())
        return f"{self.family}({inner})"


def pdf(spec: DistSpec, x):
    return spec.pdf(x)


def cdf(spec: DistSpec, x):
    return spec.cdf(x)


def quantile(spec: DistSpec, p):
    return spec.quantile(p)


def sample(spec: DistSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    return spec.sample(n, rng)


@dataclass(frozen=True)
class FitResult:
    spec: DistSpec
    log_likelihood: float
    converged: bool
    iterations: int
    support_violations: int

    def to_dict(self) -> dict:
        return {
            "spec": self.spec.to_dict(),
            "log_likelihood": self.log_likelihood,
            "converged": self.converged,
            "iterations": self.iterations,
            "support_violations": self.support_violations,
        }


def log_likelihood(spec: DistSpec, x) -> float:
    return float(np.sum(spec.dist.logpdf(np.asarray(x, dtype=float), spec.params)))


def support_violations(spec: DistSpec, x) -> int:
    lo, hi = spec.support()
    x = np.asarray(x, dtype=float)
    return int(np.count_nonzero((x < lo) | (x > hi)))


def fit_mle(family: str, sample, xatol: float = 1e-8, max_iter: int = 10_000) -> FitResult:
    """Maximum-likelihood fit of ``family`` to ``sample``.

    Starts from a method-of-moments guess and runs a Nelder-Mead simplex on
    unconstrained coordinates (log of positive parameters, shape as is).
    Parameter sets that leave sample points outside the support score -inf
    and are simply rejected by the simplex. The Exponential MLE is the
    sample mean and needs no search.
    """
    fam = get_family(family)
    x = np.asarray(sample, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("sample contains non-finite values")
    min_size = 1 if fam.name == "Exponential" else MIN_FIT_SIZE
    if x.size < min_size:
        raise ValueError(f"{family} fit needs at least {min_size} points, got {x.size}")

    start = DistSpec(fam.name, fam.initial(x))
    if fam.name == "Exponential" or np.ptp(x) == 0:
        ll = log_likelihood(start, x)
        converged = fam.name == "Exponential" and np.ptp(x) > 0 and math.isfinite(ll)
        return FitResult(start, ll, bool(converged), 0, support_violations(start, x))

    def objective(z):
        try:
            params = fam.from_free(z, x)
            fam.check(params)
        except (ValueError, OverflowError):
            return math.inf
        ll = float(np.sum(fam.logpdf(x, params)))
        return -ll if math.isfinite(ll) else math.inf

    z0 = np.asarray(fam.to_free(start.params, x), dtype=float)
    f0 = objective(z0)
    simplex = np.vstack([z0, z0 + np.diag(fam.simplex_steps(z0.size))])
    # Rejected vertices score inf; inf - inf in the stopping test is harmless.
    with np.errstate(invalid="ignore"):
        res = optimize.minimize(
            objective,
            z0,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": xatol,
                "fatol": 1e-10 * max(1.0, abs(f0)) if math.isfinite(f0) else 1e-8,
                "maxiter": max_iter,
                "maxfev": 4 * max_iter,
            },
        )
    z = res.x if res.fun <= f0 else z0
    spec = DistSpec(fam.name, fam.from_free(z, x))
    ll = log_likelihood(spec, x)
    return FitResult(
        spec=spec,
        log_likelihood=ll,
        converged=bool(res.success and math.isfinite(ll)),
        iterations=int(res.nit),
        support_violations=support_violations(spec, x),
    )


def fit_all(families: Sequence[str], sample) -> Dict[str, FitResult]:
    return {f: fit_mle(f, sample) for f in families}
