"""Segment-run entry point; picks the compiled kernel when it is available.

Set ``ROADIMP_PURE_PYTHON=1`` before import to force the pure-Python
implementation. Decision logs and trajectory dumps always use the Python path.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernel_py
from .intersection import RoadPlan, can_cross, can_merge
from .lai import (
    SimParams,
    SimulationInvariantError,
    acceleration_probability,
    comfortable_stop_distance,
    emergency_stop_distance,
    safe_distances,
)

_ckernel = None
if os.environ.get("ROADIMP_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernel
    except ImportError:
        _ckernel = None

BACKEND = "cython" if _ckernel is not None else "python"
BACKENDS = ("cython", "python") if _ckernel is not None else ("python",)

# safety counters that must stay at zero
FATAL = ("overlaps", "bad_speed_changes", "blocked_overruns")


@dataclass
class SegmentRun:
    entry: np.ndarray
    exit: np.ndarray
    route: np.ndarray
    stats: dict

    @property
    def travel_times(self) -> np.ndarray:
        return self.exit - self.entry


def _threshold(allowed, lo: int = -64, hi: int = 4096) -> int:
    """Largest distance for which ``allowed`` is False, checking monotonicity."""
    values = [allowed(l) for l in range(lo, hi)]
    first = values.index(True)
    if not all(values[first:]):
        raise AssertionError("rule is not monotone in distance")
    return lo + first - 1


@lru_cache(maxsize=None)
def tables(params: SimParams) -> dict:
    """Lookup tables for the compiled kernel, evaluated with the reference functions."""
    w = params.v_max + 1
    speeds = range(w)
    d = np.array([[safe_distances(v, vl, params) for vl in speeds] for v in speeds], dtype=np.intc)
    merge_thr = np.array([_threshold(lambda l, v=v: can_merge(l, v, params)) for v in speeds], dtype=np.intc)
    cross_thr = np.full((w, w), np.iinfo(np.intc).max, dtype=np.intc)
    for v_n in range(min(3, w)):
        for v_x in speeds:
            cross_thr[v_n, v_x] = _threshold(lambda l, a=v_n, b=v_x: can_cross(l, b, a, params))
    return {
        "v_max": params.v_max,
        "delta_v": params.delta_v,
        "emergency": params.emergency,
        "vehicle_cells": params.vehicle_cells,
        "spawn_speed": params.spawn_speed,
        "r_s": float(params.r_s),
        "d_acc": np.ascontiguousarray(d[:, :, 0].ravel()),
        "d_keep": np.ascontiguousarray(d[:, :, 1].ravel()),
        "d_dec": np.ascontiguousarray(d[:, :, 2].ravel()),
        "r_a": np.array([acceleration_probability(v, params) for v in speeds], dtype=np.float64),
        "comfy": np.array([comfortable_stop_distance(v, params.delta_v) for v in speeds], dtype=np.intc),
        "emerg": np.array([emergency_stop_distance(v, params.emergency) for v in speeds], dtype=np.intc),
        "merge_thr": merge_thr,
        "cross_thr": np.ascontiguousarray(cross_thr.ravel()),
    }


def _run_compiled(plan, params, intensity, stream_intensity, n_steps, warmup, gens):
    ints = lambda xs: np.ascontiguousarray(xs, dtype=np.intc)  # noqa: E731
    return _ckernel.run_segment_tables(
        plan.length,
        np.ascontiguousarray(plan.route_cum, dtype=np.float64),
        plan.branching,
        ints(plan.route_slow),
        ints(plan.route_merge),
        ints(plan.route_cross),
        plan.light,
        ints(plan.stream_lengths),
        ints(plan.stream_lights),
        tables(params),
        float(intensity),
        float(stream_intensity),
        int(n_steps),
        int(warmup),
        list(gens),
    )


def run_segment(
    plan: RoadPlan,
    params: SimParams,
    intensity: float,
    n_steps: int,
    warmup: int,
    gens,
    stream_intensity: float | None = None,
    backend: str | None = None,
    log: list | None = None,
    trajectory: list | None = None,
    strict: bool = True,
) -> SegmentRun:
    """Simulate one road with its junction.

    ``gens`` holds one ``numpy.random.Generator`` for the road and one per
    conflict stream; both backends consume them identically. With
    ``strict`` a nonzero safety counter raises
    :class:`SimulationInvariantError`.
    """
    if not 0.0 <= intensity <= 1.0:
        raise ValueError(f"intensity must lie in [0, 1], got {intensity}")
    if n_steps < 0 or not 0 <= warmup <= n_steps:
        raise ValueError("need 0 <= warmup <= n_steps")
    if len(gens) != 1 + len(plan.stream_lengths):
        raise ValueError(f"need {1 + len(plan.stream_lengths)} generators, got {len(gens)}")
    s_int = intensity if stream_intensity is None else stream_intensity
    backend = backend or BACKEND
    if backend not in BACKENDS:
        raise ValueError(f"backend {backend!r} unavailable; have {BACKENDS}")
    if backend == "cython" and log is None and trajectory is None:
        entry, exit_, route, stats = _run_compiled(plan, params, intensity, s_int, n_steps, warmup, gens)
    else:
        entry, exit_, route, stats = _kernel_py.run_segment(
            plan, params, intensity, n_steps, warmup, gens, s_int, log, trajectory
        )
    if strict:
        bad = {k: stats[k] for k in FATAL if stats[k]}
        if bad:
            raise SimulationInvariantError(f"safety counters nonzero: {bad}")
    return SegmentRun(entry, exit_, route, stats)
