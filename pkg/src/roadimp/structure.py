"""Binary coherent systems described by their minimal path sets.

Components are indexed ``0 .. n-1``. A structure stores only its minimal
paths; minimal cuts are derived on demand.

Two reliability evaluations are offered:

* ``exact`` -- the multilinear reliability polynomial of independent
  components (shared components are reduced idempotently, ``p_i**2 -> p_i``);
* ``paper-naive`` -- ``1 - prod_k (1 - prod_{i in P_k} p_i)`` taken literally,
  which treats overlapping paths as if they were independent.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

ENUMERATION_CAP = 20


class Mode(str, enum.Enum):
    EXACT = "exact"
    PAPER_NAIVE = "paper-naive"


class EnumerationCapError(ValueError):
    """Raised when an exhaustive computation would exceed the component cap."""


def _as_mask(components: Iterable[int]) -> int:
    mask = 0
    for c in components:
        mask |= 1 << c
    return mask


def _mask_members(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class StructureFunction:
    """Monotone binary structure over ``n`` components.

    ``min_paths`` may be given as any iterable of component collections;
    dominated (non-minimal) and duplicate paths are dropped with a warning.
    ``labels`` optionally names the components (e.g. segment ids).
    """

    n: int
    min_paths: tuple[frozenset[int], ...]
    labels: tuple = field(default=(), compare=False)

    def __init__(self, n: int, min_paths: Iterable[Iterable[int]], labels: Sequence = ()):
        if n < 1:
            raise ValueError(f"structure needs at least one component, got n={n}")
        paths = []
        for raw in min_paths:
            path = frozenset(int(c) for c in raw)
            if not path:
                raise ValueError("empty path: the structure would work with every component failed")
            bad = [c for c in path if not 0 <= c < n]
            if bad:
                raise ValueError(f"path {sorted(path)} references components {bad} outside [0, {n})")
            paths.append(path)
        if not paths:
            raise ValueError("structure needs at least one minimal path")

        unique = sorted(set(paths), key=lambda s: (len(s), sorted(s)))
        minimal = [p for p in unique if not any(q < p for q in unique)]
        if len(unique) != len(paths):
            warnings.warn("duplicate paths dropped", stacklevel=2)
        if len(minimal) != len(unique):
            dropped = [sorted(p) for p in unique if p not in minimal]
            warnings.warn(f"non-minimal paths dropped: {dropped}", stacklevel=2)

        labels = tuple(labels)
        if labels and len(labels) != n:
            raise ValueError(f"{len(labels)} labels for {n} components")

        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "min_paths", tuple(minimal))
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_labeled_paths(cls, paths: Sequence[Sequence], labels: Sequence | None = None) -> "StructureFunction":
        """Build from paths written with arbitrary component labels (e.g. street ids)."""
        if labels is None:
            labels = sorted({c for path in paths for c in path})
        index = {label: i for i, label in enumerate(labels)}
        missing = sorted({c for path in paths for c in path if c not in index}, key=str)
        if missing:
            raise ValueError(f"paths reference undeclared components {missing}")
        return cls(len(labels), [[index[c] for c in path] for path in paths], labels)

    def label(self, i: int):
        return self.labels[i] if self.labels else i

    @cached_property
    def path_masks(self) -> tuple[int, ...]:
        return tuple(_as_mask(p) for p in self.min_paths)

    @cached_property
    def relevant(self) -> frozenset[int]:
        return frozenset().union(*self.min_paths)

    @cached_property
    def truth_table(self) -> np.ndarray:
        """``phi`` at every vertex, indexed by the bitmask of working components."""
        _check_cap(self.n)
        masks = np.arange(1 << self.n, dtype=np.int64)
        out = np.zeros(masks.shape, dtype=bool)
        for pm in self.path_masks:
            out |= (masks & pm) == pm
        return out

    @cached_property
    def coefficients(self) -> dict[int, int]:
        """Multilinear expansion of the reliability function by inclusion-exclusion.

        Maps a component bitmask ``S`` to the integer coefficient of
        ``prod_{i in S} p_i``. Unions of paths are formed with bitwise OR, so
        repeated components never raise a power.
        """
        # coefficients of prod_k (1 - a_k)
        survivors: dict[int, int] = {0: 1}
        for pm in self.path_masks:
            nxt = dict(survivors)
            for mask, c in survivors.items():
                u = mask | pm
                nxt[u] = nxt.get(u, 0) - c
            survivors = {m: c for m, c in nxt.items() if c}
        coeffs = {m: -c for m, c in survivors.items() if m}
        rest = 1 - survivors.get(0, 0)
        if rest:
            coeffs[0] = rest
        return coeffs

    def coefficients_by_enumeration(self) -> dict[int, int]:
        """Same expansion as :attr:`coefficients`, via a Moebius transform of the truth table."""
        a = self.truth_table.astype(np.int64)
        for bit in range(self.n):
            step = 1 << bit
            view = a.reshape(-1, 2 * step)
            view[:, step:] -= view[:, :step]
        nz = np.flatnonzero(a)
        return {int(m): int(a[m]) for m in nz}


def _check_cap(n: int, cap: int = ENUMERATION_CAP) -> None:
    if n > cap:
        raise EnumerationCapError(
            f"{n} components exceed the enumeration cap of {cap}; "
            "use reliability_monte_carlo for an estimate"
        )


def _check_vector(phi: StructureFunction, values: Sequence, what: str) -> None:
    if len(values) != phi.n:
        raise ValueError(f"{what} has length {len(values)}, structure has {phi.n} components")


def _state_mask(phi: StructureFunction, x: Sequence[int]) -> int:
    _check_vector(phi, x, "state vector")
    mask = 0
    for i, xi in enumerate(x):
        if xi not in (0, 1):
            raise ValueError(f"state x[{i}]={xi!r} is not binary")
        if xi:
            mask |= 1 << i
    return mask


def _phi_mask(phi: StructureFunction, mask: int) -> int:
    return int(any(mask & pm == pm for pm in phi.path_masks))


def evaluate(phi: StructureFunction, x: Sequence[int]) -> int:
    """Return 1 if some minimal path has every component working."""
    return _phi_mask(phi, _state_mask(phi, x))


def delta(phi: StructureFunction, i: int, x: Sequence[int]) -> int:
    """``phi(1_i, x) - phi(0_i, x)``; 1 when component ``i`` is critical at ``x``."""
    mask = _state_mask(phi, x)
    if not 0 <= i < phi.n:
        raise IndexError(f"component {i} outside [0, {phi.n})")
    bit = 1 << i
    return _phi_mask(phi, mask | bit) - _phi_mask(phi, mask & ~bit)


def minimal_cuts(phi: StructureFunction) -> tuple[frozenset[int], ...]:
    """Minimal cut sets, i.e. the minimal transversals of the path family.

    Computed with Berge's incremental algorithm: cuts for the first ``k``
    paths are extended by one element of path ``k+1`` when they miss it, and
    the family is re-minimised after each path.
    """
    cuts: set[int] = {0}
    for pm in phi.path_masks:
        grown = set()
        for c in cuts:
            if c & pm:
                grown.add(c)
            else:
                m = pm
                while m:
                    low = m & -m
                    grown.add(c | low)
                    m ^= low
        ordered = sorted(grown, key=lambda m: bin(m).count("1"))
        kept: list[int] = []
        for m in ordered:
            if not any(k & m == k for k in kept):
                kept.append(m)
        cuts = set(kept)
    out = [frozenset(_mask_members(m)) for m in cuts]
    return tuple(sorted(out, key=lambda s: (len(s), sorted(s))))


def evaluate_by_cuts(phi: StructureFunction, x: Sequence[int], cuts=None) -> int:
    """``prod_j kappa_j(x)``: series arrangement of parallel minimal cuts."""
    mask = _state_mask(phi, x)
    cuts = minimal_cuts(phi) if cuts is None else cuts
    return int(all(mask & _as_mask(c) for c in cuts))


# -- reliability -------------------------------------------------------------


def _fractions(p: Sequence) -> list[Fraction]:
    out = []
    for i, pi in enumerate(p):
        f = pi if isinstance(pi, Fraction) else Fraction(float(pi))
        if not 0 <= f <= 1:
            raise ValueError(f"reliability p[{i}]={pi!r} outside [0, 1]")
        out.append(f)
    return out


def _poly_value(coeffs: dict[int, int], p: Sequence[Fraction]) -> Fraction:
    total = Fraction(0)
    for mask, c in coeffs.items():
        term = Fraction(c)
        m, i = mask, 0
        while m:
            if m & 1:
                term *= p[i]
            m >>= 1
            i += 1
        total += term
    return total


def h_exact(phi: StructureFunction, p: Sequence) -> Fraction:
    """Exact multilinear reliability in rational arithmetic."""
    _check_vector(phi, p, "reliability vector")
    return _poly_value(phi.coefficients, _fractions(p))


def h_naive(phi: StructureFunction, p: Sequence) -> Fraction:
    """Path-product expression without idempotent reduction, in rational arithmetic."""
    _check_vector(phi, p, "reliability vector")
    pf = _fractions(p)
    fail = Fraction(1)
    for path in phi.min_paths:
        prod = Fraction(1)
        for i in path:
            prod *= pf[i]
        fail *= 1 - prod
    return 1 - fail


def _h_enumeration(phi: StructureFunction, p: Sequence[float]) -> float:
    pv = np.asarray(p, dtype=float)
    masks = np.arange(1 << phi.n, dtype=np.int64)
    weight = np.ones(masks.shape)
    for i in range(phi.n):
        on = (masks >> i) & 1
        weight *= np.where(on == 1, pv[i], 1.0 - pv[i])
    return float(np.sum(weight[phi.truth_table]))


def reliability_exact(
    phi: StructureFunction,
    p: Sequence,
    method: str = "inclusion-exclusion",
    cap: int = ENUMERATION_CAP,
) -> float:
    """System reliability ``E[phi(X)]`` for independent components.

    ``method`` is ``"inclusion-exclusion"`` (rational arithmetic over path
    unions) or ``"enumeration"`` (double-precision sum over all ``2**n``
    vertices). The two agree to 1e-12.
    """
    _check_vector(phi, p, "reliability vector")
    _check_cap(phi.n, cap)
    if method == "inclusion-exclusion":
        return float(h_exact(phi, p))
    if method == "enumeration":
        _fractions(p)
        return _h_enumeration(phi, p)
    raise ValueError(f"unknown method {method!r}")


def reliability_paper_naive(phi: StructureFunction, p: Sequence) -> float:
    return float(h_naive(phi, p))


def reliability(phi: StructureFunction, p: Sequence, mode: Mode | str = Mode.EXACT) -> float:
    mode = Mode(mode)
    if mode is Mode.EXACT:
        return reliability_exact(phi, p)
    return reliability_paper_naive(phi, p)


def reliability_monte_carlo(
    phi: StructureFunction,
    p: Sequence[float],
    samples: int,
    seed: int | None = 0,
    chunk: int = 1 << 16,
) -> float:
    """Unbiased sample-mean estimate of the reliability; deterministic for a fixed seed."""
    _check_vector(phi, p, "reliability vector")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pv = np.asarray(p, dtype=float)
    if np.any((pv < 0) | (pv > 1)):
        raise ValueError("reliabilities must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    paths = [np.fromiter(sorted(path), dtype=np.intp) for path in phi.min_paths]
    hits = 0
    left = samples
    while left:
        m = min(chunk, left)
        up = rng.random((m, phi.n)) < pv
        works = np.zeros(m, dtype=bool)
        for idx in paths:
            works |= up[:, idx].all(axis=1)
        hits += int(works.sum())
        left -= m
    return hits / samples
