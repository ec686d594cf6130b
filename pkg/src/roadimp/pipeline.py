"""Intensity sweep: simulate every segment, turn delays into reliabilities, score the network."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .importance import birnbaum_reliability
from .satisfaction import satisfaction_probability
from .scenario import Scenario, Segment
from .sim.kernel import FATAL, run_segment
from .structure import Mode, reliability

P_METHODS = ("q-of-mean", "mean-of-q")
WORKERS_ENV = "ROADIMP_WORKERS"
STAT_KEYS = (
    "vehicle_steps", "overlaps", "bad_speed_changes", "emergency_brakes", "blocked_overruns",
    "spawned", "dropped_spawns", "committed", "forced_passes",
)


def generators(seed: int, segment_id: int, rep: int, intensity_index: int, count: int) -> list[np.random.Generator]:
    """Independent generators for a road (stream 0) and its conflict streams."""
    return [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, segment_id, rep, intensity_index, k])))
        for k in range(count)
    ]


@dataclass
class TravelHistogram:
    """Integer travel-time counts; merging is plain addition, so order never matters."""

    counts: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    stats: dict = field(default_factory=lambda: dict.fromkeys(STAT_KEYS, 0))

    def add(self, travel: np.ndarray) -> None:
        if travel.size == 0:
            return
        b = np.bincount(travel, minlength=self.counts.size)
        if b.size > self.counts.size:
            b[: self.counts.size] += self.counts
            self.counts = b
        else:
            self.counts = self.counts + b

    def merge(self, other: "TravelHistogram") -> "TravelHistogram":
        out = TravelHistogram(self.counts.copy(), dict(self.stats))
        out.add_counts(other.counts)
        for k, v in other.stats.items():
            out.stats[k] = out.stats.get(k, 0) + v
        return out

    def add_counts(self, counts: np.ndarray) -> None:
        n = max(self.counts.size, counts.size)
        a = np.zeros(n, dtype=np.int64)
        a[: self.counts.size] += self.counts
        a[: counts.size] += counts
        self.counts = a

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def minimum(self) -> int | None:
        nz = np.flatnonzero(self.counts)
        return int(nz[0]) if nz.size else None

    def mean(self) -> float:
        n = self.total
        if n == 0:
            return math.inf
        return float(np.dot(np.arange(self.counts.size), self.counts) / n)

    def quantile(self, q: float) -> float:
        n = self.total
        if n == 0:
            return math.inf
        cum = np.cumsum(self.counts)
        return float(np.searchsorted(cum, q * n, side="left"))


def simulate_cell(
    scenario: Scenario,
    seg: Segment,
    intensity_index: int,
    intensity: float,
    replications: int,
    seed: int,
    backend: str | None = None,
) -> TravelHistogram:
    """All replications of one segment at one intensity."""
    plan = scenario.plan(seg)
    n_steps = scenario.warmup_steps + scenario.measure_steps
    hist = TravelHistogram()
    for rep in range(replications):
        gens = generators(seed, seg.id, rep, intensity_index, 1 + len(plan.stream_lengths))
        run = run_segment(plan, scenario.params, intensity, n_steps, scenario.warmup_steps, gens, backend=backend)
        hist.add(run.travel_times)
        for k in STAT_KEYS:
            hist.stats[k] += run.stats[k]
    return hist


def _cell_task(args):
    scenario, seg, idx, lam, reps, seed, backend = args
    return simulate_cell(scenario, seg, idx, lam, reps, seed, backend)


def _workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, workers)


def measure_delays(
    scenario: Scenario,
    intensities=None,
    replications: int | None = None,
    seed: int | None = None,
    workers: int | None = None,
    backend: str | None = None,
) -> dict[tuple[int, int], TravelHistogram]:
    """Travel-time histograms keyed by ``(segment id, intensity index)``."""
    grid = tuple(scenario.intensities if intensities is None else intensities)
    reps = scenario.replications if replications is None else replications
    seed = scenario.seed if seed is None else seed
    tasks = [(scenario, seg, i, lam, reps, seed, backend) for seg in scenario.segments for i, lam in enumerate(grid)]
    n = _workers(workers)
    if n == 1:
        results = [_cell_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_cell_task, tasks, chunksize=1))
    return {(t[1].id, t[2]): h for t, h in zip(tasks, results)}


@dataclass
class SweepResult:
    scenario: str
    segment_ids: tuple[int, ...]
    segment_names: tuple[str, ...]
    route_names: tuple[str, ...]
    intensities: tuple[float, ...]
    min_travel: np.ndarray  # per segment, steps
    completed: np.ndarray  # [intensity, segment]
    mean_delay: np.ndarray
    median_delay: np.ndarray
    p90_delay: np.ndarray
    p: np.ndarray
    system: np.ndarray
    routes: np.ndarray  # [intensity, route]
    birnbaum: np.ndarray
    mode: str
    p_method: str
    seed: int
    replications: int
    warmup_steps: int
    measure_steps: int
    stats: dict

    def saturated(self) -> np.ndarray:
        return self.completed == 0


def _mean_of_q(hist: TravelHistogram, lo: int, scenario: Scenario) -> float:
    if hist.total == 0:
        return 0.0
    t = np.arange(hist.counts.size)
    mask = hist.counts > 0
    q = np.array([satisfaction_probability(scenario.patience, float(d)) for d in t[mask] - lo])
    return float(np.dot(q, hist.counts[mask]) / hist.total)


def run_sweep(
    scenario: Scenario,
    intensities=None,
    replications: int | None = None,
    seed: int | None = None,
    mode: Mode | str = Mode.EXACT,
    p_method: str = "q-of-mean",
    workers: int | None = None,
    backend: str | None = None,
) -> SweepResult:
    """Delays, segment reliabilities, route/system reliability and Birnbaum importance per intensity.

    A vehicle's delay is its travel time minus the shortest travel time seen
    on that segment anywhere in the sweep.
    """
    if p_method not in P_METHODS:
        raise ValueError(f"p_method must be one of {P_METHODS}")
    mode = Mode(mode)
    grid = tuple(scenario.intensities if intensities is None else intensities)
    reps = scenario.replications if replications is None else replications
    seed = scenario.seed if seed is None else seed
    hists = measure_delays(scenario, grid, reps, seed, workers, backend)

    segs = scenario.segments
    n_i, n_s = len(grid), len(segs)
    completed = np.zeros((n_i, n_s), dtype=np.int64)
    mean_delay = np.full((n_i, n_s), np.inf)
    median = np.full((n_i, n_s), np.inf)
    p90 = np.full((n_i, n_s), np.inf)
    p = np.zeros((n_i, n_s))
    min_travel = np.zeros(n_s, dtype=np.int64)
    stats = dict.fromkeys(STAT_KEYS, 0)

    for j, seg in enumerate(segs):
        mins = [hists[(seg.id, i)].minimum for i in range(n_i)]
        mins = [m for m in mins if m is not None]
        lo = min(mins) if mins else 0
        min_travel[j] = lo
        for i in range(n_i):
            h = hists[(seg.id, i)]
            for k in STAT_KEYS:
                stats[k] += h.stats[k]
            completed[i, j] = h.total
            if h.total == 0:
                continue
            mean_delay[i, j] = h.mean() - lo
            median[i, j] = h.quantile(0.5) - lo
            p90[i, j] = h.quantile(0.9) - lo
            if p_method == "q-of-mean":
                p[i, j] = satisfaction_probability(scenario.patience, mean_delay[i, j])
            else:
                p[i, j] = _mean_of_q(h, lo, scenario)

    phi = scenario.structure()
    index = {sid: k for k, sid in enumerate(scenario.segment_ids)}
    system = np.zeros(n_i)
    routes = np.zeros((n_i, len(scenario.routes)))
    birn = np.zeros((n_i, n_s))
    for i in range(n_i):
        pv = [float(x) for x in p[i]]
        system[i] = reliability(phi, pv, mode)
        for r, route in enumerate(scenario.routes):
            prod = 1.0
            for sid in route.segments:
                prod *= pv[index[sid]]
            routes[i, r] = prod
        for j in range(n_s):
            birn[i, j] = birnbaum_reliability(phi, pv, j, mode)

    return SweepResult(
        scenario=scenario.name,
        segment_ids=scenario.segment_ids,
        segment_names=tuple(s.name for s in segs),
        route_names=tuple(r.name for r in scenario.routes),
        intensities=grid,
        min_travel=min_travel,
        completed=completed,
        mean_delay=mean_delay,
        median_delay=median,
        p90_delay=p90,
        p=p,
        system=system,
        routes=routes,
        birnbaum=birn,
        mode=mode.value,
        p_method=p_method,
        seed=seed,
        replications=reps,
        warmup_steps=scenario.warmup_steps,
        measure_steps=scenario.measure_steps,
        stats=stats,
    )


def safety_violations(result: SweepResult) -> dict:
    return {k: result.stats[k] for k in FATAL if result.stats[k]}


def _ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    ranks = np.empty(len(x))
    xs = x[order]
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties; infinities rank last."""
    a = _ranks(np.asarray(x, dtype=float))
    b = _ranks(np.asarray(y, dtype=float))
    a -= a.mean()
    b -= b.mean()
    den = math.sqrt(float(np.dot(a, a) * np.dot(b, b)))
    return float(np.dot(a, b) / den) if den else float("nan")
