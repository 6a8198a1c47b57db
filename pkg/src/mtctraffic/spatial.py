"""Poisson point fields, distance-decaying event influence and activation probability."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, List, NamedTuple

import numpy as np
from scipy import integrate


class Point2D(NamedTuple):
    x: float
    y: float


def distance(a: Point2D, b: Point2D) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


@dataclass(frozen=True)
class PoissonField:
    """Homogeneous PPP on a disk of ``region_radius`` meters centred at the BS."""

    density: float
    region_radius: float

    def __post_init__(self):
        if not self.density > 0:
            raise ValueError(f"density must be positive, got {self.density}")
        if not self.region_radius > 0:
            raise ValueError(f"region_radius must be positive, got {self.region_radius}")

    @property
    def mean_count(self) -> float:
        return self.density * math.pi * self.region_radius**2


def sample_ppp_array(field: PoissonField, rng: np.random.Generator) -> np.ndarray:
    """Points of one PPP realization as an ``(n, 2)`` array."""
    n = rng.poisson(field.mean_count)
    r = field.region_radius * np.sqrt(rng.random(n))
    phi = 2.0 * np.pi * rng.random(n)
    return np.column_stack((r * np.cos(phi), r * np.sin(phi)))


def sample_ppp(field: PoissonField, rng: np.random.Generator) -> List[Point2D]:
    return [Point2D(float(x), float(y)) for x, y in sample_ppp_array(field, rng)]


class InfluenceKind(enum.Enum):
    HARD_DISK = "hard_disk"
    EXPONENTIAL = "exponential"
    GAUSSIAN = "gaussian"


class AreaElement(enum.Enum):
    """How the activation exponent integrates the influence over distance.

    ``LINEAR_AS_WRITTEN`` uses 2*pi*int p(d) dd, ``RADIAL_CORRECTED`` uses
    int 2*pi*d*p(d) dd (the planar void-probability form).
    """

    LINEAR_AS_WRITTEN = "linear"
    RADIAL_CORRECTED = "radial"


@dataclass(frozen=True)
class InfluenceFunction:
    """Non-increasing map from distance (m) to trigger probability.

    * hard disk: 1 within ``scale`` meters, 0 beyond;
    * exponential: exp(-d / scale);
    * gaussian: exp(-d^2 / (2 scale^2)).
    """

    kind: InfluenceKind
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "kind", InfluenceKind(self.kind))
        if not self.scale > 0:
            raise ValueError(f"influence scale must be positive, got {self.scale}")

    def __call__(self, d):
        return influence(self, d)


def influence(f: InfluenceFunction, d):
    """Trigger probability at distance ``d`` (scalar or array)."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise ValueError("distance must be non-negative")
    if f.kind is InfluenceKind.HARD_DISK:
        out = (d <= f.scale).astype(float)
    elif f.kind is InfluenceKind.EXPONENTIAL:
        out = np.exp(-d / f.scale)
    else:
        out = np.exp(-0.5 * (d / f.scale) ** 2)
    return float(out) if out.ndim == 0 else out


def _closed_form_integral(f: InfluenceFunction, elem: AreaElement) -> float:
    rho = f.scale
    if elem is AreaElement.LINEAR_AS_WRITTEN:
        return {
            InfluenceKind.HARD_DISK: rho,
            InfluenceKind.EXPONENTIAL: rho,
            InfluenceKind.GAUSSIAN: rho * math.sqrt(math.pi / 2.0),
        }[f.kind]
    return {
        InfluenceKind.HARD_DISK: math.pi * rho**2,
        InfluenceKind.EXPONENTIAL: 2.0 * math.pi * rho**2,
        InfluenceKind.GAUSSIAN: 2.0 * math.pi * rho**2,
    }[f.kind]


def _quadrature_integral(f: InfluenceFunction, elem: AreaElement, rtol: float = 1e-9) -> float:
    if elem is AreaElement.LINEAR_AS_WRITTEN:
        integrand = lambda d: influence(f, d)  # noqa: E731
    else:
        integrand = lambda d: 2.0 * math.pi * d * influence(f, d)  # noqa: E731
    # Split at the scale so the hard-disk edge is an interval endpoint.
    head, head_err = integrate.quad(integrand, 0.0, f.scale, epsabs=0.0, epsrel=rtol, limit=200)
    tail, tail_err = integrate.quad(integrand, f.scale, np.inf, epsabs=0.0, epsrel=rtol, limit=200)
    total = head + tail
    if not math.isfinite(total) or head_err + tail_err > max(rtol * abs(total), 1e-300):
        raise ArithmeticError(f"influence integral did not converge for {f}")
    return total


def influence_integral(f: InfluenceFunction, elem: AreaElement = AreaElement.LINEAR_AS_WRITTEN,
                       method: str = "auto") -> float:
    """Integral in the activation exponent; ``method`` is "auto" or "quad"."""
    elem = AreaElement(elem)
    if method == "auto":
        return _closed_form_integral(f, elem)
    if method == "quad":
        return _quadrature_integral(f, elem)
    raise ValueError(f"unknown integration method {method!r}")


def activation_probability(lambda_t: float, f: InfluenceFunction,
                           elem: AreaElement = AreaElement.LINEAR_AS_WRITTEN,
                           method: str = "auto") -> float:
    """Per-slot activation probability of a device under event density ``lambda_t``."""
    if not lambda_t > 0:
        raise ValueError(f"lambda_t must be positive, got {lambda_t}")
    elem = AreaElement(elem)
    integral = influence_integral(f, elem, method)
    if elem is AreaElement.LINEAR_AS_WRITTEN:
        exponent = 2.0 * math.pi * lambda_t * integral
    else:
        exponent = lambda_t * integral
    return -math.expm1(-exponent)


def write_points_tsv(points: Iterable, stream) -> None:
    """One ``x<TAB>y`` line per point."""
    for x, y in points:
        stream.write(f"{float(x)!r}\t{float(y)!r}\n")


def read_points_tsv(stream) -> List[Point2D]:
    points = []
    for line in stream:
        line = line.strip()
        if line:
            x, y = line.split("\t")
            points.append(Point2D(float(x), float(y)))
    return points
