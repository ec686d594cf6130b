"""Pure-Python segment run built from the reference LAI and junction functions."""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from .intersection import JunctionStats, RoadPlan, end_of_road_constraint, stream_constraint
from .lai import Road, SimParams, StepStats, entry_is_free, position_update, spawn, speed_update

NO_SLOW = (-1, -1, -1)


def _step_road(road, gen, blocker, route_slow, intensity, t, params, stats, plan):
    n = len(road.vehicles)
    us = gen.random(n) if n else ()
    new = speed_update(road, params, us, blocker, route_slow, stats)
    exited = position_update(road, new, t, params, blocker, stats)
    u = gen.random()
    if u < intensity:
        if entry_is_free(road, params):
            route = 0
            if plan is not None:
                route = plan.draw_route(gen.random() if plan.branching else 0.0)
            spawn(road, intensity, u, t, params, route)
            stats.spawned += 1
        else:
            stats.dropped_spawns += 1
    return exited


def run_segment(
    plan: RoadPlan,
    params: SimParams,
    intensity: float,
    n_steps: int,
    warmup: int,
    gens,
    stream_intensity: float | None = None,
    log: list | None = None,
    trajectory: list | None = None,
):
    """Simulate one road with its junction for ``n_steps`` steps.

    ``gens`` holds one generator for the road followed by one per conflict
    stream. Returns ``(entry, exit, route, stats)`` for vehicles of the road
    that entered at or after ``warmup`` and left before the horizon.
    """
    n_streams = len(plan.stream_lengths)
    if len(gens) != 1 + n_streams:
        raise ValueError(f"need {1 + n_streams} generators, got {len(gens)}")
    s_int = intensity if stream_intensity is None else stream_intensity
    road = Road(plan.length)
    streams = [Road(length) for length in plan.stream_lengths]
    stats = StepStats()
    jstats = JunctionStats()
    entries: list[int] = []
    exits: list[int] = []
    routes: list[int] = []

    for t in range(n_steps):
        blocker = end_of_road_constraint(road, plan, streams, t, params, jstats, log)
        for k, stream in enumerate(streams):
            sb = stream_constraint(stream, plan.stream_lights[k], plan.light, t, params)
            _step_road(stream, gens[1 + k], sb, NO_SLOW, s_int, t, params, stats, None)
        for veh, t_exit in _step_road(road, gens[0], blocker, plan.route_slow, intensity, t, params, stats, plan):
            if veh.entry_time >= warmup:
                entries.append(veh.entry_time)
                exits.append(t_exit)
                routes.append(veh.route)
        if trajectory is not None:
            for veh in road.vehicles:
                trajectory.append((t + 1, veh.id, veh.position, veh.velocity))

    out = asdict(stats)
    out.update(asdict(jstats))
    return (
        np.asarray(entries, dtype=np.int64),
        np.asarray(exits, dtype=np.int64),
        np.asarray(routes, dtype=np.int8),
        out,
    )
