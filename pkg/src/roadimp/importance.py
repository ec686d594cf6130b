"""Component importance for coherent systems.

Birnbaum (reliability and structural) and Barlow-Proschan measures, plus
ranking. All closed-form quantities are accumulated in rational arithmetic
and converted to ``float`` only when returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .quadrature import adaptive_simpson
from .structure import (
    ENUMERATION_CAP,
    Mode,
    StructureFunction,
    _check_cap,
    _check_vector,
    _fractions,
)

MEASURES = ("birnbaum", "barlow-proschan", "birnbaum-functioning", "birnbaum-failure")

HALF = Fraction(1, 2)


def _check_component(phi: StructureFunction, i: int) -> None:
    if not 0 <= i < phi.n:
        raise IndexError(f"component {i} outside [0, {phi.n})")


# -- Birnbaum ----------------------------------------------------------------


def _birnbaum_exact(phi: StructureFunction, p: Sequence[Fraction], i: int) -> Fraction:
    # h(1_i, p) - h(0_i, p): only terms containing i survive, with p_i removed
    bit = 1 << i
    total = Fraction(0)
    for mask, c in phi.coefficients.items():
        if not mask & bit:
            continue
        term = Fraction(c)
        m, j = mask & ~bit, 0
        while m:
            if m & 1:
                term *= p[j]
            m >>= 1
            j += 1
        total += term
    return total


def _birnbaum_naive(phi: StructureFunction, p: Sequence[Fraction], i: int) -> Fraction:
    # d/dp_i of 1 - prod_k (1 - a_k), every occurrence of p_i differentiated
    products = []
    for path in phi.min_paths:
        prod = Fraction(1)
        for j in path:
            prod *= p[j]
        products.append(prod)
    total = Fraction(0)
    for k, path in enumerate(phi.min_paths):
        if i not in path:
            continue
        da = Fraction(1)
        for j in path:
            if j != i:
                da *= p[j]
        rest = Fraction(1)
        for m, a in enumerate(products):
            if m != k:
                rest *= 1 - a
        total += da * rest
    return total


def birnbaum_fraction(phi: StructureFunction, p: Sequence, i: int, mode: Mode | str = Mode.EXACT) -> Fraction:
    _check_vector(phi, p, "reliability vector")
    _check_component(phi, i)
    pf = _fractions(p)
    if Mode(mode) is Mode.EXACT:
        return _birnbaum_exact(phi, pf, i)
    return _birnbaum_naive(phi, pf, i)


def birnbaum_reliability(phi: StructureFunction, p: Sequence, i: int, mode: Mode | str = Mode.EXACT) -> float:
    """Birnbaum reliability importance ``dh/dp_i`` under ``mode``.

    In exact mode this equals ``h(1_i, p) - h(0_i, p)``. In paper-naive mode
    it is the partial derivative of the un-reduced path-product expression.
    """
    return float(birnbaum_fraction(phi, p, i, mode))


def birnbaum_split(phi: StructureFunction, p: Sequence, i: int, mode: Mode | str = Mode.EXACT) -> tuple[float, float]:
    """Return ``((1 - p_i) B, p_i B)``: importance for functioning and for failure."""
    b = birnbaum_fraction(phi, p, i, mode)
    pi = _fractions(p)[i]
    return float((1 - pi) * b), float(pi * b)


def birnbaum_structural_fraction(phi: StructureFunction, i: int) -> Fraction:
    _check_cap(phi.n)
    _check_component(phi, i)
    derivative = _birnbaum_exact(phi, [HALF] * phi.n, i)
    # delta_i does not depend on x_i, so the 2**n vertex sum is twice the count over the others
    counted = Fraction(2 * int(critical_counts(phi, i).sum()), 1 << phi.n)
    if derivative != counted:
        raise RuntimeError(
            f"structural importance of component {i}: derivative {derivative} "
            f"disagrees with vertex count {counted}"
        )
    return derivative


def birnbaum_structural(phi: StructureFunction, i: int) -> float:
    """Structural importance: ``dh/dp_i`` at ``p = 1/2``, checked against ``2**-n * sum_x delta_i(x)``."""
    return float(birnbaum_structural_fraction(phi, i))


def structural_split(phi: StructureFunction, i: int) -> tuple[float, float]:
    """Structural importance for functioning and for failure, by vertex counting."""
    _check_cap(phi.n)
    _check_component(phi, i)
    table = phi.truth_table
    masks = np.arange(table.size, dtype=np.int64)
    bit = 1 << i
    crit = table[masks | bit] & ~table[masks & ~bit]
    on = (masks & bit) != 0
    scale = 1 << phi.n
    return float(Fraction(int(crit[~on].sum()), scale)), float(Fraction(int(crit[on].sum()), scale))


# -- Barlow-Proschan -----------------------------------------------------------


def critical_counts(phi: StructureFunction, i: int) -> np.ndarray:
    """``n_r(i)`` for ``r = 1..n``: critical path vectors of component ``i`` by size.

    Entry ``r - 1`` counts states of the other ``n - 1`` components with
    ``r - 1`` of them working in which ``i`` alone decides the system state.
    """
    _check_cap(phi.n)
    _check_component(phi, i)
    table = phi.truth_table
    bit = 1 << i
    masks = np.arange(table.size, dtype=np.int64)
    others = masks[(masks & bit) == 0]
    crit = table[others | bit] & ~table[others]
    sizes = np.zeros(others.shape, dtype=np.int64)
    m = others.copy()
    while np.any(m):
        sizes += m & 1
        m >>= 1
    return np.bincount(sizes[crit], minlength=phi.n).astype(np.int64)


def barlow_proschan_fraction(phi: StructureFunction, i: int) -> Fraction:
    _check_cap(phi.n)
    _check_component(phi, i)
    # integral over [0, 1] of sum_{S ∋ i} c_S p^{|S|-1}
    bit = 1 << i
    total = Fraction(0)
    for mask, c in phi.coefficients.items():
        if mask & bit:
            total += Fraction(c, bin(mask).count("1"))
    return total


def barlow_proschan(phi: StructureFunction, i: int) -> float:
    """Barlow-Proschan importance ``int_0^1 [h(1_i, p) - h(0_i, p)] dp`` with a common scalar ``p``.

    The integrand is a polynomial in ``p`` read off the multilinear expansion,
    so the integral is taken term by term without quadrature error.
    """
    return float(barlow_proschan_fraction(phi, i))


def barlow_proschan_combinatorial_fraction(phi: StructureFunction, i: int) -> Fraction:
    n = phi.n
    counts = critical_counts(phi, i)
    nfact = math.factorial(n)
    total = Fraction(0)
    for r in range(1, n + 1):
        nr = int(counts[r - 1])
        if nr:
            total += Fraction(nr * math.factorial(r - 1) * math.factorial(n - r), nfact)
    return total


def barlow_proschan_combinatorial(phi: StructureFunction, i: int) -> float:
    """Barlow-Proschan importance as ``sum_r n_r(i) (r-1)! (n-r)! / n!``."""
    return float(barlow_proschan_combinatorial_fraction(phi, i))


def birnbaum_common_p(phi: StructureFunction, i: int, p: np.ndarray | float) -> np.ndarray:
    """``h(1_i, p) - h(0_i, p)`` in double precision with every other component at scalar ``p``."""
    p = np.asarray(p, dtype=float)
    bit = 1 << i
    out = np.zeros_like(p)
    for mask, c in phi.coefficients.items():
        if mask & bit:
            out = out + c * p ** (bin(mask).count("1") - 1)
    return out


def barlow_proschan_quadrature(phi: StructureFunction, i: int, points: int = 64) -> float:
    """Gauss-Legendre cross-check of :func:`barlow_proschan`."""
    x, w = np.polynomial.legendre.leggauss(points)
    p = 0.5 * (x + 1.0)
    return float(0.5 * np.sum(w * birnbaum_common_p(phi, i, p)))


# -- lifetime form -------------------------------------------------------------


@dataclass(frozen=True)
class LifetimeSpec:
    """Per-component lifetime laws: CDFs ``F_i`` and densities ``f_i`` on ``[0, t_max]``."""

    cdfs: tuple[Callable[[float], float], ...]
    pdfs: tuple[Callable[[float], float], ...]
    t_max: float

    def __post_init__(self):
        object.__setattr__(self, "cdfs", tuple(self.cdfs))
        object.__setattr__(self, "pdfs", tuple(self.pdfs))
        if len(self.cdfs) != len(self.pdfs):
            raise ValueError("need one density per distribution function")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")

    @classmethod
    def iid(cls, n: int, cdf, pdf, t_max: float) -> "LifetimeSpec":
        return cls((cdf,) * n, (pdf,) * n, t_max)


@dataclass(frozen=True)
class LifetimeImportance:
    numerators: np.ndarray
    ratios: np.ndarray


class _BirnbaumVector:
    """Vectorised ``h(1_i, q) - h(0_i, q)`` for all ``i`` at a float vector ``q``."""

    def __init__(self, phi: StructureFunction):
        items = [(m, c) for m, c in phi.coefficients.items() if m]
        self.n = phi.n
        self.coef = np.array([c for _, c in items], dtype=float)
        self.member = np.array([[(m >> j) & 1 for j in range(phi.n)] for m, _ in items], dtype=bool)

    def __call__(self, q: np.ndarray) -> np.ndarray:
        out = np.empty(self.n)
        base = np.where(self.member, q, 1.0)
        for i in range(self.n):
            col = self.member[:, i]
            factors = base[col].copy()
            factors[:, i] = 1.0
            out[i] = float(np.dot(self.coef[col], factors.prod(axis=1)))
        return out


def barlow_proschan_lifetime(
    phi: StructureFunction,
    lifetimes: LifetimeSpec,
    t: float,
    rtol: float = 1e-8,
) -> LifetimeImportance:
    """Probability that component ``i`` caused a system failure occurring in ``[0, t]``.

    Returns the per-component numerators
    ``int_0^t [h(1_i, Fbar(u)) - h(0_i, Fbar(u))] f_i(u) du`` and their
    normalised ratios.
    """
    if len(lifetimes.cdfs) != phi.n:
        raise ValueError(f"{len(lifetimes.cdfs)} lifetimes for {phi.n} components")
    if not 0 < t <= lifetimes.t_max:
        raise ValueError(f"t={t} outside (0, {lifetimes.t_max}]")
    _check_cap(phi.n, ENUMERATION_CAP)
    birnbaum = _BirnbaumVector(phi)

    def integrand(u: float) -> np.ndarray:
        survival = np.array([1.0 - F(u) for F in lifetimes.cdfs])
        dens = np.array([f(u) for f in lifetimes.pdfs])
        return birnbaum(survival) * dens

    numerators = np.asarray(adaptive_simpson(integrand, 0.0, float(t), rtol=rtol, atol=1e-13))
    total = float(numerators.sum())
    if not total > 0:
        raise ValueError("lifetimes give zero probability of system failure on [0, t]; ratios undefined")
    return LifetimeImportance(numerators, numerators / total)


# -- reports and ranking ---------------------------------------------------------


@dataclass(frozen=True)
class ComponentImportance:
    component: int
    label: object
    birnbaum: float
    birnbaum_functioning: float
    birnbaum_failure: float
    barlow_proschan: float

    def value(self, measure: str) -> float:
        return getattr(self, _measure_attr(measure))


@dataclass(frozen=True)
class ImportanceReport:
    records: tuple[ComponentImportance, ...]
    evaluation_mode: Mode
    measure: str
    ranking: tuple


def _measure_attr(measure: str) -> str:
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}; choose from {MEASURES}")
    return measure.replace("-", "_")


def rank(report: ImportanceReport | Sequence[ComponentImportance], measure: str = "birnbaum") -> list:
    """Component labels in descending order of ``measure``; ties go to the smaller id."""
    records = report.records if isinstance(report, ImportanceReport) else report
    attr = _measure_attr(measure)
    ordered = sorted(records, key=lambda r: (-round(getattr(r, attr), 12), r.component))
    return [r.label for r in ordered]


def importance_report(
    phi: StructureFunction,
    p: Sequence | None = None,
    mode: Mode | str = Mode.EXACT,
    measure: str = "birnbaum",
) -> ImportanceReport:
    """Importance of every component.

    With ``p=None`` the Birnbaum columns are structural (all ``p_i = 1/2``).
    Barlow-Proschan values are always the exact-mode integral; the
    un-reduced path product has no Barlow-Proschan counterpart that sums to one.
    """
    mode = Mode(mode)
    _measure_attr(measure)
    pf = [HALF] * phi.n if p is None else _fractions(p)
    _check_vector(phi, pf, "reliability vector")
    records = []
    for i in range(phi.n):
        b = _birnbaum_exact(phi, pf, i) if mode is Mode.EXACT else _birnbaum_naive(phi, pf, i)
        bp = barlow_proschan_fraction(phi, i)
        records.append(
            ComponentImportance(
                component=i,
                label=phi.label(i),
                birnbaum=float(b),
                birnbaum_functioning=float((1 - pf[i]) * b),
                birnbaum_failure=float(pf[i] * b),
                barlow_proschan=float(bp),
            )
        )
    records = tuple(records)
    return ImportanceReport(records, mode, measure, tuple(rank(records, measure)))
