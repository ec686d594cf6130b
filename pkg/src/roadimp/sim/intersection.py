"""Right-of-way at road ends: merging, crossing, mandatory slow-downs, traffic lights.

A road that must wait at its end gets a virtual stationary obstacle just past
its stop line (the last cell), so the ordinary LAI rules brake the head
vehicle. Conflicting traffic comes from independent open roads ("streams")
whose end is the conflict point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .lai import (
    Road,
    SimParams,
    comfortable_stop_distance,
    emergency_stop_distance,
    safe_distances,
)

STRAIGHT, LEFT, RIGHT = 0, 1, 2
ROUTE_NAMES = ("straight", "left", "right")
NO_STREAM = -1

# crossing duration in steps by the crossing vehicle's speed
CROSSING_TIME = {2: 1, 1: 2, 0: 3}


class LightState(enum.IntEnum):
    RED = 0
    RED_YELLOW = 1
    GREEN = 2
    YELLOW = 3


@dataclass(frozen=True)
class TrafficLight:
    offset: int = 0
    red: int = 60
    red_yellow: int = 1
    green: int = 60
    yellow: int = 3

    def __post_init__(self):
        durations = (self.red, self.red_yellow, self.green, self.yellow)
        if any(d < 0 for d in durations) or sum(durations) <= 0:
            raise ValueError(f"light phase durations must be >= 0 with a positive cycle, got {durations}")
        if not 0 <= self.offset < self.cycle:
            raise ValueError(f"light offset {self.offset} outside [0, {self.cycle})")

    @property
    def cycle(self) -> int:
        return self.red + self.red_yellow + self.green + self.yellow

    @classmethod
    def always_green(cls) -> "TrafficLight":
        return cls(0, 0, 0, 1, 0)


def light_state(light: TrafficLight, t: int) -> LightState:
    if t < 0:
        raise ValueError("time must be non-negative")
    phase = (t + light.offset) % light.cycle
    if phase < light.red:
        return LightState.RED
    phase -= light.red
    if phase < light.red_yellow:
        return LightState.RED_YELLOW
    phase -= light.red_yellow
    if phase < light.green:
        return LightState.GREEN
    return LightState.YELLOW


def may_pass_light(state: LightState, distance: int, v: int, params: SimParams) -> bool:
    """Whether a vehicle ``distance`` cells before the stop line may enter.

    Green always admits; yellow admits only a vehicle that cannot stop with
    ordinary ``delta_v`` braking; red and red-yellow never admit.
    """
    if state == LightState.GREEN:
        return True
    if state == LightState.YELLOW:
        return comfortable_stop_distance(v, params.delta_v) > distance
    return False


# -- right-of-way rules ---------------------------------------------------------


def merge_clearance(l_x: int, v_x: int, params: SimParams) -> int:
    """Left side of the merge inequality for a main-road vehicle at distance ``l_x``, speed ``v_x``."""
    occupied = sum(min(params.v_max, v_x + dv - 1) for dv in range(2, params.v_max + 1))
    freed = sum(range(2, params.v_max + 1))
    return l_x - v_x - occupied + freed


def can_merge(l_x: int | None, v_x: int, params: SimParams, merger_speed: int = 1) -> bool:
    """Rule for joining a road with priority.

    The main-road vehicle's ``d_keep`` is taken with the merging vehicle,
    at ``merger_speed``, as its new leader. ``l_x=None`` means no vehicle in
    sight.
    """
    if l_x is None:
        return True
    d_keep = safe_distances(v_x, merger_speed, params)[1]
    return merge_clearance(l_x, v_x, params) > d_keep


def crossing_time(v_n: int) -> int:
    try:
        return CROSSING_TIME[v_n]
    except KeyError:
        raise ValueError(f"crossing speed must be 0, 1 or 2, got {v_n}") from None


def cross_occupancy(v_x: int, tau: int, params: SimParams) -> int:
    """Cells the opposing vehicle may cover while the crossing takes ``tau`` steps."""
    # negative terms (v_x = 0, dv = 0) are clamped to zero
    return sum(max(0, min(params.v_max, v_x + dv - 1)) for dv in range(tau + 1))


def can_cross(l_x: int | None, v_x: int, v_n: int, params: SimParams) -> bool:
    """Rule for crossing the opposite lane; the opposing vehicle must keep its ``d_dec``."""
    tau = crossing_time(v_n)
    if l_x is None:
        return True
    d_dec = safe_distances(v_x, 0, params)[2]
    return l_x - cross_occupancy(v_x, tau, params) > d_dec


# -- maneuvers -------------------------------------------------------------------


class ManeuverKind(str, enum.Enum):
    STRAIGHT_PRIORITY = "straight_priority"
    TURN_WITH_PRIORITY = "turn_with_priority"
    MERGE_RIGHT = "merge_right"
    MERGE_LEFT_CROSS = "merge_left_cross"
    LEFT_CROSS_OR_STRAIGHT = "left_cross_or_straight"
    SIGNALIZED_STRAIGHT = "signalized_straight"
    SIGNALIZED_LEFT_CROSS = "signalized_left_cross"


_DEFAULT_BRANCHES = {
    ManeuverKind.STRAIGHT_PRIORITY: {"straight": 1.0},
    ManeuverKind.TURN_WITH_PRIORITY: {"right": 1.0},
    ManeuverKind.MERGE_RIGHT: {"right": 1.0},
    ManeuverKind.MERGE_LEFT_CROSS: {"right": 0.5, "left": 0.5},
    ManeuverKind.LEFT_CROSS_OR_STRAIGHT: {"left": 1 / 3, "straight": 2 / 3},
    ManeuverKind.SIGNALIZED_STRAIGHT: {"straight": 1.0},
    ManeuverKind.SIGNALIZED_LEFT_CROSS: {"straight": 1 / 3, "left": 1 / 3, "right": 1 / 3},
}

_DEFAULT_SLOW = {
    ManeuverKind.STRAIGHT_PRIORITY: None,
    ManeuverKind.TURN_WITH_PRIORITY: 2,
    ManeuverKind.MERGE_RIGHT: 0,
    ManeuverKind.MERGE_LEFT_CROSS: 0,
    ManeuverKind.LEFT_CROSS_OR_STRAIGHT: 2,
    ManeuverKind.SIGNALIZED_STRAIGHT: None,
    ManeuverKind.SIGNALIZED_LEFT_CROSS: 2,
}

_SIGNALIZED = {ManeuverKind.SIGNALIZED_STRAIGHT, ManeuverKind.SIGNALIZED_LEFT_CROSS}


@dataclass(frozen=True)
class ManeuverSpec:
    kind: ManeuverKind
    slow_to: int | None = None
    branch_probabilities: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        kind = ManeuverKind(self.kind)
        object.__setattr__(self, "kind", kind)
        branches = dict(self.branch_probabilities) or dict(_DEFAULT_BRANCHES[kind])
        unknown = set(branches) - set(ROUTE_NAMES)
        if unknown:
            raise ValueError(f"unknown turn directions {sorted(unknown)}")
        if any(p < 0 for p in branches.values()) or not math.isclose(sum(branches.values()), 1.0, abs_tol=1e-9):
            raise ValueError(f"branch probabilities must be non-negative and sum to 1, got {branches}")
        object.__setattr__(self, "branch_probabilities", branches)
        slow = self.slow_to if self.slow_to is not None else _DEFAULT_SLOW[kind]
        if slow is not None and slow not in (0, 1, 2):
            raise ValueError(f"slow_to must be 0, 1 or 2, got {slow}")
        object.__setattr__(self, "slow_to", slow)

    @property
    def signalized(self) -> bool:
        return self.kind in _SIGNALIZED

    def route_table(self) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
        """Per-route ``(slow_to, merge stream, cross stream)``, -1 meaning none."""
        slow = [-1, -1, -1]
        merge = [NO_STREAM] * 3
        cross = [NO_STREAM] * 3
        s = -1 if self.slow_to is None else self.slow_to
        k = self.kind
        if k is ManeuverKind.TURN_WITH_PRIORITY:
            slow = [s, s, s]
        elif k is ManeuverKind.MERGE_RIGHT:
            slow = [s, s, s]
            merge = [0, 0, 0]
        elif k is ManeuverKind.MERGE_LEFT_CROSS:
            slow = [s, s, s]
            merge = [0, 1, 0]
            cross[LEFT] = 0
        elif k is ManeuverKind.LEFT_CROSS_OR_STRAIGHT:
            slow[LEFT] = s
            cross[LEFT] = 0
        elif k is ManeuverKind.SIGNALIZED_LEFT_CROSS:
            slow[LEFT] = s
            cross[LEFT] = 0
        return tuple(slow), tuple(merge), tuple(cross)

    def stream_count(self) -> int:
        _, merge, cross = self.route_table()
        used = [s for s in (*merge, *cross) if s != NO_STREAM]
        return max(used) + 1 if used else 0


@dataclass(frozen=True)
class RoadPlan:
    """Everything the stepping kernel needs to know about one road and its junction."""

    length: int
    route_cum: tuple[float, float, float]
    route_slow: tuple[int, int, int]
    route_merge: tuple[int, int, int]
    route_cross: tuple[int, int, int]
    light: TrafficLight | None = None
    stream_lengths: tuple[int, ...] = ()
    stream_lights: tuple[bool, ...] = ()

    @classmethod
    def build(
        cls,
        length: int,
        maneuver: ManeuverSpec,
        light: TrafficLight | None = None,
        conflict_length: int = 100,
    ) -> "RoadPlan":
        if maneuver.signalized and light is None:
            light = TrafficLight()
        if not maneuver.signalized and light is not None:
            raise ValueError(f"{maneuver.kind.value} roads have no traffic light")
        probs = [maneuver.branch_probabilities.get(name, 0.0) for name in ROUTE_NAMES]
        cum = []
        acc = 0.0
        for p in probs:
            acc += p
            cum.append(acc)
        last = max(i for i, p in enumerate(probs) if p > 0)
        for i in range(last, 3):
            cum[i] = 1.0
        slow, merge, cross = maneuver.route_table()
        # only streams for routes that are actually taken
        n_streams = 0
        for r in range(3):
            if probs[r] > 0:
                n_streams = max(n_streams, merge[r] + 1, cross[r] + 1)
        # the opposing stream at a signal shares the subject's phase
        stream_lights = tuple(maneuver.signalized for _ in range(n_streams))
        return cls(
            length=int(length),
            route_cum=tuple(cum),
            route_slow=slow,
            route_merge=merge,
            route_cross=cross,
            light=light,
            stream_lengths=(int(conflict_length),) * n_streams,
            stream_lights=stream_lights,
        )

    @property
    def branching(self) -> bool:
        return sum(1 for i, c in enumerate(self.route_cum) if c > (self.route_cum[i - 1] if i else 0.0)) > 1

    def draw_route(self, u: float) -> int:
        for r, c in enumerate(self.route_cum):
            if u < c:
                return r
        return len(self.route_cum) - 1


@dataclass
class JunctionStats:
    committed: int = 0
    forced_passes: int = 0


@dataclass(frozen=True)
class Decision:
    t: int
    vehicle: int
    route: int
    distance: int
    velocity: int
    light: LightState | None
    merge: tuple[int, int] | None
    cross: tuple[int, int] | None
    allowed: bool


def _stream_head(stream: Road) -> tuple[int | None, int]:
    head = stream.head
    if head is None:
        return None, 0
    return stream.length - head.position, head.velocity


def end_of_road_constraint(
    road: Road,
    plan: RoadPlan,
    streams: Sequence[Road],
    t: int,
    params: SimParams,
    stats: JunctionStats | None = None,
    log: list | None = None,
) -> int:
    """Index of the vehicle that must see a virtual obstacle past the stop line, or -1.

    Only the first vehicle without permission is examined. Rule-governed
    routes wait by default; the vehicle decides once it is slow enough (at
    most ``max(slow_to, 1)``) and within one step of the line, and a positive
    decision is kept until it leaves. Signal-only routes are re-checked every
    step, except that a vehicle let through on yellow keeps its permission.
    """
    k = road.first_waiting()
    if k < 0:
        return -1
    veh = road.vehicles[k]
    r = veh.route
    merge_s = plan.route_merge[r]
    cross_s = plan.route_cross[r]
    ruled = merge_s != NO_STREAM or cross_s != NO_STREAM
    if plan.light is None and not ruled:
        return -1

    distance = road.length - 1 - veh.position
    v = veh.velocity
    state = None
    allowed = True
    if plan.light is not None:
        state = light_state(plan.light, t)
        allowed = may_pass_light(state, distance, v, params)
        if allowed and state == LightState.YELLOW and not ruled:
            # too close to stop comfortably: the vehicle goes on even if red follows
            veh.permitted = True
    merge_info = cross_info = None
    if allowed and ruled:
        limit = max(plan.route_slow[r], 1)
        if v > limit or distance > v + params.delta_v:
            allowed = False
        else:
            if merge_s != NO_STREAM:
                l_x, v_x = _stream_head(streams[merge_s])
                merge_info = (l_x, v_x)
                allowed = can_merge(l_x, v_x, params)
            if allowed and cross_s != NO_STREAM:
                l_x, v_x = _stream_head(streams[cross_s])
                cross_info = (l_x, v_x)
                allowed = can_cross(l_x, v_x, v, params)
            if log is not None:
                log.append(Decision(t, veh.id, r, distance, v, state, merge_info, cross_info, allowed))
            if allowed:
                veh.permitted = True
                if stats is not None:
                    stats.committed += 1
    if allowed:
        return -1
    if emergency_stop_distance(v, params.emergency) > distance:
        # cannot stop any more; the vehicle runs the line and is counted
        veh.permitted = True
        if stats is not None:
            stats.forced_passes += 1
        return -1
    return k


def stream_constraint(stream: Road, has_light: bool, light: TrafficLight | None, t: int, params: SimParams) -> int:
    """Signal-only blocker index for a conflict stream that shares the subject's light."""
    if not has_light or light is None:
        return -1
    k = stream.first_waiting()
    if k < 0:
        return -1
    veh = stream.vehicles[k]
    distance = stream.length - 1 - veh.position
    state = light_state(light, t)
    if may_pass_light(state, distance, veh.velocity, params):
        if state == LightState.YELLOW:
            veh.permitted = True
        return -1
    if emergency_stop_distance(veh.velocity, params.emergency) > distance:
        veh.permitted = True
        return -1
    return k
