"""Single-lane LAI cellular automaton with open boundaries.

Vehicles are ordered head first (largest position first). A vehicle's
``position`` is the cell of its front bumper; it occupies
``[position - vehicle_cells + 1, position]``.

These functions are the reference implementation. The compiled kernel in
``_ckernel.pyx`` follows them statement by statement and consumes random
numbers in exactly the same order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

INF_GAP = 1 << 30


class SimulationInvariantError(RuntimeError):
    """A state the update rules should never produce (overlap, unlawful speed change)."""


@dataclass(frozen=True)
class SimParams:
    v_max: int = 5
    delta_v: int = 1
    emergency: int = 2
    r_0: float = 0.8
    r_d: float = 1.0
    v_s: int = 3
    r_s: float = 0.1
    vehicle_cells: int = 2
    spawn_speed: int = 2
    cell_m: float = 2.5
    step_s: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta_v <= self.emergency <= self.v_max:
            raise ValueError("need 0 < delta_v <= emergency <= v_max")
        for name in ("r_0", "r_d", "r_s"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be a probability")
        if self.vehicle_cells < 1:
            raise ValueError("vehicle_cells must be >= 1")
        if self.v_s < 1:
            raise ValueError("v_s must be >= 1")
        if not 0 <= self.spawn_speed <= self.v_max:
            raise ValueError("spawn_speed must lie in [0, v_max]")


@dataclass
class Vehicle:
    id: int
    position: int
    velocity: int
    entry_time: int
    route: int = 0
    permitted: bool = False


@dataclass
class Road:
    length: int
    vehicles: list[Vehicle] = field(default_factory=list)
    next_id: int = 0

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("road needs at least one cell")

    @property
    def head(self) -> Vehicle | None:
        return self.vehicles[0] if self.vehicles else None

    def first_waiting(self) -> int:
        """Index of the first vehicle without permission to enter the junction, or -1."""
        for k, veh in enumerate(self.vehicles):
            if not veh.permitted:
                return k
        return -1


@dataclass
class StepStats:
    vehicle_steps: int = 0
    overlaps: int = 0
    bad_speed_changes: int = 0
    emergency_brakes: int = 0
    blocked_overruns: int = 0
    spawned: int = 0
    dropped_spawns: int = 0


# -- kinematics ----------------------------------------------------------------


def gap(follower: Vehicle, leader: Vehicle, vehicle_cells: int) -> int:
    """Free cells between the follower's front bumper and the leader's rear bumper."""
    d = leader.position - follower.position - vehicle_cells
    if d < 0:
        raise SimulationInvariantError(
            f"vehicle {follower.id} at {follower.position} overlaps leader {leader.id} at {leader.position}"
        )
    return d


def stopping_distance(v: int, m: int) -> int:
    """``sum_{i=0}^{floor(v/m)} (v - i m)``; zero for non-positive ``v``."""
    if v <= 0:
        return 0
    total = 0
    while v > 0:
        total += v
        v -= m
    return total


def safe_distances(v_n: int, v_next: int, params: SimParams) -> tuple[int, int, int]:
    """``(d_acc, d_keep, d_dec)`` for a follower at ``v_n`` behind a leader at ``v_next``.

    Follower distance after accelerating / keeping / braking once, then
    stopping with the emergency deceleration, minus the leader's distance
    when it starts emergency braking now. The accelerated speed is clamped to
    ``v_max``.
    """
    m = params.emergency
    leader = stopping_distance(v_next - m, m)
    acc = stopping_distance(min(v_n + params.delta_v, params.v_max), m)
    keep = stopping_distance(v_n, m)
    dec = stopping_distance(v_n - params.delta_v, m)
    return max(0, acc - leader), max(0, keep - leader), max(0, dec - leader)


def acceleration_probability(v_n: int, params: SimParams) -> float:
    return min(params.r_d, params.r_0 + v_n * (params.r_d - params.r_0) / params.v_s)


def comfortable_stop_distance(v: int, delta_v: int = 1) -> int:
    """Cells covered while braking by ``delta_v`` per step until standstill."""
    total = 0
    v -= delta_v
    while v > 0:
        total += v
        v -= delta_v
    return total


def emergency_stop_distance(v: int, m: int) -> int:
    """Cells covered while braking by ``m`` per step until standstill."""
    return stopping_distance(v - m, m)


def approach_cap(distance: int, slow_to: int, params: SimParams) -> int:
    """Largest speed from which ``delta_v`` braking reaches the stop line at ``max(slow_to, 1)``.

    ``distance`` counts the cells between the front bumper and the stop-line
    cell. Respecting the cap at every step keeps each later cap attainable by
    ordinary braking.
    """
    v = max(slow_to, 1)
    used = 0
    while v < params.v_max and used + v + 1 <= distance:
        used += v + 1
        v += 1
    return v


# -- update steps -------------------------------------------------------------


def _regime(v: int, g: int, v_lead: int, u: float, params: SimParams, stats: StepStats | None) -> int:
    d_acc, d_keep, d_dec = safe_distances(v, v_lead, params)
    if g > d_acc:
        return min(v + params.delta_v, params.v_max) if u < acceleration_probability(v, params) else v
    if g >= d_keep:
        return max(v - params.delta_v, 0) if u < params.r_s else v
    if g >= d_dec:
        return max(v - params.delta_v, 0)
    if stats is not None and v > 0:
        stats.emergency_brakes += 1
    return max(v - params.emergency, 0)


def speed_update(
    road: Road,
    params: SimParams,
    uniforms: Sequence[float],
    blocker: int = -1,
    route_slow: Sequence[int] = (-1, -1, -1),
    stats: StepStats | None = None,
) -> list[int]:
    """New speeds for every vehicle, all computed from the current state.

    ``uniforms`` holds one U(0, 1) draw per vehicle (head first). ``blocker``
    is the index of the vehicle that sees a stationary obstacle just past the
    stop line (-1 for none); it obeys the tighter of that obstacle and its
    leader, using the same draw for both. ``route_slow[r] >= 0`` caps the
    approach speed of vehicles on route ``r``.
    """
    vs = road.vehicles
    ls = params.vehicle_cells
    line = road.length - 1
    out = []
    for k, veh in enumerate(vs):
        v = veh.velocity
        u = uniforms[k]
        if k == 0:
            new = _regime(v, INF_GAP, 0, u, params, None) if k != blocker else None
        else:
            lead = vs[k - 1]
            new = _regime(v, lead.position - veh.position - ls, lead.velocity, u, params, stats)
        if k == blocker:
            stop = _regime(v, line - veh.position, 0, u, params, stats)
            new = stop if new is None else min(new, stop)
        s = route_slow[veh.route]
        if s >= 0:
            cap = approach_cap(line - veh.position, s, params)
            new = min(new, max(cap, v - params.emergency))
        out.append(new)
    return out


def position_update(
    road: Road,
    new_speeds: Sequence[int],
    t: int,
    params: SimParams,
    blocker: int = -1,
    stats: StepStats | None = None,
) -> list[tuple[Vehicle, int]]:
    """Advance every vehicle; remove those past the road end.

    Returns ``(vehicle, exit_time)`` for the removed vehicles. Raises
    :class:`SimulationInvariantError` on overlap unless ``stats`` is given,
    in which case violations are counted instead.
    """
    ls = params.vehicle_cells
    for veh, new in zip(road.vehicles, new_speeds):
        change = new - veh.velocity
        if change not in (-params.emergency, -params.delta_v, 0, params.delta_v) or not 0 <= new <= params.v_max:
            if stats is None:
                raise SimulationInvariantError(f"vehicle {veh.id}: speed {veh.velocity} -> {new}")
            stats.bad_speed_changes += 1
        veh.velocity = new
        veh.position += new
    if stats is not None:
        stats.vehicle_steps += len(road.vehicles)
    vs = road.vehicles
    if 0 <= blocker < len(vs) and vs[blocker].position > road.length - 1:
        if stats is None:
            raise SimulationInvariantError(f"vehicle {vs[blocker].id} ran through a closed stop line")
        stats.blocked_overruns += 1
    for k in range(1, len(vs)):
        if vs[k - 1].position - vs[k].position - ls < 0:
            if stats is None:
                raise SimulationInvariantError(f"vehicles {vs[k - 1].id} and {vs[k].id} overlap at step {t + 1}")
            stats.overlaps += 1
    exited = []
    while vs and vs[0].position >= road.length:
        exited.append((vs.pop(0), t + 1))
    return exited


def entry_is_free(road: Road, params: SimParams) -> bool:
    """Room for a new vehicle at the road start, keeping ``d_keep`` behind the last one."""
    if not road.vehicles:
        return True
    tail = road.vehicles[-1]
    g = tail.position - (params.vehicle_cells - 1) - params.vehicle_cells
    return g >= safe_distances(params.spawn_speed, tail.velocity, params)[1]


def spawn(road: Road, intensity: float, u: float, t: int, params: SimParams, route: int = 0) -> Vehicle | None:
    """Insert a vehicle with probability ``intensity`` (``u`` is the deciding draw)."""
    if not u < intensity:
        return None
    if not entry_is_free(road, params):
        return None
    veh = Vehicle(road.next_id, params.vehicle_cells - 1, params.spawn_speed, t + 1, route)
    road.next_id += 1
    road.vehicles.append(veh)
    return veh
