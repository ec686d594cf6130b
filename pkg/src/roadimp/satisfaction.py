"""Driver satisfaction as segment reliability.

A driver tolerates a delay up to a personal threshold. With thresholds
Weibull-distributed, the probability that a driver is still satisfied after a
delay ``xi`` is the Weibull survival function ``Q(xi) = exp(-(xi/lambda)**k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .quadrature import adaptive_simpson

DEFAULT_LAMBDA = 30.0
DEFAULT_K = 2.92


@dataclass(frozen=True)
class WeibullPatience:
    lam: float = DEFAULT_LAMBDA
    k: float = DEFAULT_K

    def __post_init__(self):
        if not (self.lam > 0 and self.k > 0):
            raise ValueError(f"Weibull parameters must be positive, got lambda={self.lam}, k={self.k}")

    def cdf(self, t: float) -> float:
        return 0.0 if t <= 0 else -math.expm1(-((t / self.lam) ** self.k))

    def sf(self, t: float) -> float:
        return 1.0 if t <= 0 else math.exp(-((t / self.lam) ** self.k))

    def pdf(self, t: float) -> float:
        if t <= 0:
            return 0.0
        z = t / self.lam
        return self.k / self.lam * z ** (self.k - 1) * math.exp(-(z**self.k))

    def upper(self, tail: float = 1e-10) -> float:
        """Time beyond which the threshold mass is below ``tail``."""
        return self.lam * (-math.log(tail)) ** (1.0 / self.k)


def satisfaction_probability(model: WeibullPatience, delay: float) -> float:
    """``Q(delay)``: probability a driver's patience outlasts ``delay`` seconds."""
    if delay < 0 or math.isnan(delay):
        raise ValueError(f"delay must be non-negative, got {delay}")
    if math.isinf(delay):
        return 0.0
    return model.sf(delay)


def delays_to_reliability_vector(delays: Sequence[float], model: WeibullPatience, expected: int | None = None) -> list[float]:
    if expected is not None and len(delays) != expected:
        raise ValueError(f"{len(delays)} delays given for {expected} segments")
    return [satisfaction_probability(model, float(d)) for d in delays]


# -- delay laws ----------------------------------------------------------------


@dataclass(frozen=True)
class DelayDistribution:
    """CDF of the realised segment delay together with its atoms (jump points)."""

    cdf: Callable[[float], float]
    atoms: tuple[float, ...] = ()

    def below(self, t: float) -> float:
        """``P(delay < t)``, the left limit of the CDF."""
        if t in self.atoms:
            return self.cdf(math.nextafter(t, -math.inf))
        return self.cdf(t)


def deterministic_delay(tau: float) -> DelayDistribution:
    return DelayDistribution(lambda t: 1.0 if t >= tau else 0.0, (float(tau),))


def empirical_delay(samples: Sequence[float]) -> DelayDistribution:
    xs = np.sort(np.asarray(samples, dtype=float))
    if xs.size == 0:
        raise ValueError("empirical delay law needs at least one sample")
    n = xs.size

    def cdf(t: float) -> float:
        return float(np.searchsorted(xs, t, side="right")) / n

    return DelayDistribution(cdf, tuple(np.unique(xs)))


# -- patience mixtures ---------------------------------------------------------


@dataclass(frozen=True)
class PointPatience:
    threshold: float


@dataclass(frozen=True)
class UniformPatience:
    low: float
    high: float

    def __post_init__(self):
        if not self.high > self.low:
            raise ValueError("uniform patience needs high > low")

    def pdf(self, t: float) -> float:
        return 1.0 / (self.high - self.low) if self.low <= t <= self.high else 0.0


@dataclass(frozen=True)
class DensityPatience:
    """Arbitrary threshold density on ``[0, upper]``."""

    pdf: Callable[[float], float]
    upper: float


@dataclass(frozen=True)
class PatienceMixture:
    components: tuple
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.components) != len(self.weights):
            raise ValueError("one weight per mixture component")
        if any(w < 0 for w in self.weights) or not math.isclose(sum(self.weights), 1.0, abs_tol=1e-12):
            raise ValueError(f"mixture weights must be non-negative and sum to 1, got {self.weights}")

    @classmethod
    def single(cls, component) -> "PatienceMixture":
        return cls((component,), (1.0,))


def _support(component) -> tuple[float, float, Callable[[float], float]]:
    if isinstance(component, WeibullPatience):
        return 0.0, component.upper(), component.pdf
    if isinstance(component, UniformPatience):
        return component.low, component.high, component.pdf
    if isinstance(component, DensityPatience):
        return 0.0, component.upper, component.pdf
    raise TypeError(f"unsupported patience component {component!r}")


def mean_reliability(delay: DelayDistribution, patience: PatienceMixture, rtol: float = 1e-10) -> float:
    """``p = int Q(u) dPi(u)`` with ``Q(u) = P(delay < u)``.

    Continuous components are integrated with adaptive Simpson, panels split
    at the delay law's atoms so the integrand is smooth on each panel.
    """
    total = 0.0
    for comp, w in zip(patience.components, patience.weights):
        if w == 0:
            continue
        if isinstance(comp, PointPatience):
            total += w * delay.below(comp.threshold)
            continue
        lo, hi, pdf = _support(comp)
        mass = 0.0
        value = 0.0
        cuts = sorted({lo, hi, *(a for a in delay.atoms if lo < a < hi)})
        for a, b in zip(cuts[:-1], cuts[1:]):
            inner = 0.5 * (a + b)

            # at panel ends use the open-panel value so jumps at atoms do not leak in
            def integrand(u, a=a, b=b, inner=inner):
                q = delay.below(u if a < u < b else inner)
                f = pdf(u)
                return np.array([f * q, f])

            part = adaptive_simpson(integrand, a, b, rtol=rtol, atol=1e-14)
            value += part[0]
            mass += part[1]
        if not math.isfinite(value) or abs(mass - 1.0) > 1e-6:
            raise ValueError(f"patience component {comp!r} is not normalisable on its support (mass {mass})")
        total += w * value
    return float(min(1.0, max(0.0, total)))
