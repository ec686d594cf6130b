import numpy as np
import pytest

from roadimp.pipeline import generators
from roadimp.sim.intersection import (
    LEFT,
    RIGHT,
    STRAIGHT,
    Decision,
    JunctionStats,
    LightState,
    ManeuverKind,
    ManeuverSpec,
    RoadPlan,
    TrafficLight,
    can_cross,
    can_merge,
    cross_occupancy,
    crossing_time,
    end_of_road_constraint,
    light_state,
    may_pass_light,
    merge_clearance,
)
from roadimp.sim.kernel import run_segment
from roadimp.sim.lai import Road, SimParams, Vehicle, position_update, safe_distances, spawn, speed_update

P = SimParams()


# -- rules ------------------------------------------------------------------------


def test_merge_clearance_top_speed():
    # occupied sum 20, freed sum 14
    for l_x in (0, 11, 30):
        assert merge_clearance(l_x, 5, P) == l_x - 11


def test_can_merge():
    d_keep = safe_distances(5, 1, P)[1]
    assert can_merge(None, 5, P)
    assert not can_merge(11 + d_keep, 5, P)
    assert can_merge(12 + d_keep, 5, P)
    for v_x in range(1, 6):
        assert not can_merge(0, v_x, P)


def test_crossing_time():
    assert [crossing_time(v) for v in (2, 1, 0)] == [1, 2, 3]
    with pytest.raises(ValueError):
        crossing_time(3)


def test_can_cross():
    assert cross_occupancy(5, 1, P) == 9
    d_dec = safe_distances(5, 0, P)[2]
    assert can_cross(None, 5, 2, P)
    assert not can_cross(9 + d_dec, 5, 2, P)
    assert can_cross(10 + d_dec, 5, 2, P)
    with pytest.raises(ValueError):
        can_cross(50, 5, 3, P)


def test_cross_occupancy_clamps_negative_terms():
    assert cross_occupancy(0, 3, P) == 0 + 0 + 1 + 2


# -- lights ---------------------------------------------------------------------------


def test_light_schedule():
    light = TrafficLight()
    assert light.cycle == 124
    got = [light_state(light, t) for t in (0, 59, 60, 61, 120, 121, 123, 124)]
    assert got == [
        LightState.RED, LightState.RED, LightState.RED_YELLOW, LightState.GREEN,
        LightState.GREEN, LightState.YELLOW, LightState.YELLOW, LightState.RED,
    ]
    assert light_state(TrafficLight(offset=62), 0) == LightState.GREEN


def test_light_periodic():
    light = TrafficLight(offset=17)
    for t in range(300):
        assert light_state(light, t) == light_state(light, t + 124)


def test_light_validation():
    with pytest.raises(ValueError):
        TrafficLight(offset=124)
    with pytest.raises(ValueError):
        light_state(TrafficLight(), -1)


def test_may_pass_light():
    for v in range(6):
        assert not may_pass_light(LightState.RED, 1, v, P)
        assert not may_pass_light(LightState.RED_YELLOW, 1, v, P)
        assert may_pass_light(LightState.GREEN, 10, v, P)
    assert may_pass_light(LightState.YELLOW, 1, 3, P)
    assert not may_pass_light(LightState.YELLOW, 10, 3, P)
    assert not may_pass_light(LightState.YELLOW, 0, 0, P)


# -- maneuvers and plans ----------------------------------------------------------------


def test_maneuver_defaults_and_validation():
    m = ManeuverSpec("merge_left_cross")
    assert m.slow_to == 0 and m.branch_probabilities == {"right": 0.5, "left": 0.5}
    assert ManeuverSpec("straight_priority").slow_to is None
    with pytest.raises(ValueError):
        ManeuverSpec("merge_right", slow_to=3)
    with pytest.raises(ValueError):
        ManeuverSpec("merge_right", branch_probabilities={"right": 0.7})
    with pytest.raises(ValueError):
        ManeuverSpec("merge_right", branch_probabilities={"up": 1.0})
    with pytest.raises(ValueError):
        ManeuverSpec("roundabout")


def test_plan_build():
    plan = RoadPlan.build(80, ManeuverSpec("signalized_left_cross"))
    assert plan.light == TrafficLight()
    assert plan.branching
    assert plan.route_cross[LEFT] == 0 and plan.route_cross[STRAIGHT] == -1
    assert plan.stream_lights == (True,)
    assert [plan.draw_route(u) for u in (0.0, 0.34, 0.67, 0.9999)] == [STRAIGHT, LEFT, RIGHT, RIGHT]
    with pytest.raises(ValueError):
        RoadPlan.build(80, ManeuverSpec("merge_right"), light=TrafficLight())
    straight = RoadPlan.build(80, ManeuverSpec("straight_priority"))
    assert not straight.branching and straight.stream_lengths == ()
    # streams only for routes that occur
    only_right = RoadPlan.build(80, ManeuverSpec("merge_left_cross", branch_probabilities={"right": 1.0}))
    assert len(only_right.stream_lengths) == 1


# -- end-of-road constraint ------------------------------------------------------------------


def test_merge_with_empty_main_road_has_no_blocker():
    plan = RoadPlan.build(50, ManeuverSpec("merge_right"))
    road = Road(50, [Vehicle(0, 49, 0, 0)], 1)
    stats = JunctionStats()
    assert end_of_road_constraint(road, plan, [Road(100)], 0, P, stats) == -1
    assert road.vehicles[0].permitted and stats.committed == 1


def test_merge_waits_until_slow():
    plan = RoadPlan.build(50, ManeuverSpec("merge_right"))
    road = Road(50, [Vehicle(0, 30, 2, 0)], 1)
    assert end_of_road_constraint(road, plan, [Road(100)], 0, P) == 0
    assert not road.vehicles[0].permitted


def test_red_light_blocks_head():
    plan = RoadPlan.build(50, ManeuverSpec("signalized_straight"))
    road = Road(50, [Vehicle(0, 30, 3, 0), Vehicle(1, 20, 3, 0)], 2)
    assert end_of_road_constraint(road, plan, [], 0, P) == 0
    assert end_of_road_constraint(road, plan, [], 70, P) == -1


def test_busy_opposing_stream_delays_left_turns():
    plan = RoadPlan.build(100, ManeuverSpec("left_cross_or_straight", branch_probabilities={"left": 1.0}))
    quiet = run_segment(plan, P, 0.05, 6000, 500, generators(3, 2, 0, 0, 2), stream_intensity=0.0)
    busy = run_segment(plan, P, 0.05, 6000, 500, generators(3, 2, 0, 0, 2), stream_intensity=0.6)
    assert busy.travel_times.mean() > 5 * quiet.travel_times.mean()


# -- audits over simulated runs ---------------------------------------------------------------

RULE_KINDS = ["merge_right", "merge_left_cross", "left_cross_or_straight", "signalized_left_cross"]


@pytest.mark.parametrize("kind", RULE_KINDS)
@pytest.mark.parametrize("lam", [0.1, 0.35, 0.6])
def test_logged_decisions_obey_rules(kind, lam):
    plan = RoadPlan.build(120, ManeuverSpec(kind))
    log: list[Decision] = []
    run = run_segment(plan, P, lam, 1500, 0, generators(8, 1, 0, 0, 1 + len(plan.stream_lengths)),
                      backend="python", log=log)
    assert log
    assert run.stats["forced_passes"] == 0
    for d in log:
        expect = True
        if d.merge is not None:
            expect = can_merge(d.merge[0], d.merge[1], P)
        if expect and d.cross is not None:
            expect = can_cross(d.cross[0], d.cross[1], d.velocity, P)
        assert d.allowed == expect
        if d.light is not None and d.allowed:
            assert d.light in (LightState.GREEN, LightState.YELLOW)
        assert d.velocity <= max(plan.route_slow[d.route], 1)


@pytest.mark.parametrize("kind", ["signalized_straight", "signalized_left_cross"])
@pytest.mark.parametrize("lam", [0.1, 0.3, 0.6])
def test_no_entry_on_red(kind, lam):
    plan = RoadPlan.build(200, ManeuverSpec(kind))
    run = run_segment(plan, P, lam, 3000, 0, generators(1, 10, 0, 0, 1 + len(plan.stream_lengths)),
                      backend="python")
    assert run.stats["forced_passes"] == 0
    for e in run.exit:
        t = int(e) - 1
        state = light_state(plan.light, t)
        if state == LightState.RED:
            # only a vehicle let through on yellow may still be crossing one step later
            assert light_state(plan.light, t - 1) == LightState.YELLOW
        else:
            assert state in (LightState.GREEN, LightState.YELLOW)


def test_red_queue_contiguous():
    plan = RoadPlan.build(200, ManeuverSpec("signalized_straight"))
    traj = []
    run_segment(plan, P, 0.4, 200, 0, generators(1, 10, 0, 0, 1), backend="python", trajectory=traj)
    # 59 steps into the second red phase
    at = sorted(((pos, vel) for step, _, pos, vel in traj if step == 124 + 59), reverse=True)
    queue = []
    for pos, vel in at:
        if vel:
            break
        queue.append(pos)
    assert queue[0] == 199 and len(queue) >= 10
    assert all(a - b == P.vehicle_cells for a, b in zip(queue, queue[1:]))


# -- equivalence with the plain automaton ----------------------------------------------------------


def plain_lai(length, lam, steps, warmup, gen):
    road = Road(length)
    travel = []
    for t in range(steps):
        new = speed_update(road, P, gen.random(len(road.vehicles)))
        for veh, t_exit in position_update(road, new, t, P):
            if veh.entry_time >= warmup:
                travel.append(t_exit - veh.entry_time)
        spawn(road, lam, gen.random(), t, P)
    return np.asarray(travel)


@pytest.mark.parametrize("lam", [0.05, 0.2, 0.5])
def test_free_junction_equals_plain_lai(lam):
    seeds = generators(4, 4, 0, 0, 2)
    ref = plain_lai(150, lam, 1200, 100, seeds[0])
    for plan, stream in [
        (RoadPlan.build(150, ManeuverSpec("straight_priority")), 0.0),
        (RoadPlan.build(150, ManeuverSpec("signalized_straight"), light=TrafficLight.always_green()), 0.0),
    ]:
        for backend in ("python", "cython"):
            gens = generators(4, 4, 0, 0, 1 + len(plan.stream_lengths))
            run = run_segment(plan, P, lam, 1200, 100, gens, stream_intensity=stream, backend=backend)
            np.testing.assert_array_equal(run.travel_times, ref)
