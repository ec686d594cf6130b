import numpy as np
import pytest

from roadimp.pipeline import generators
from roadimp.sim import kernel
from roadimp.sim.intersection import ManeuverKind, ManeuverSpec, RoadPlan, can_cross, can_merge
from roadimp.sim.lai import SimParams, SimulationInvariantError

P = SimParams()
needs_cython = pytest.mark.skipif("cython" not in kernel.BACKENDS, reason="compiled kernel not built")


@needs_cython
@pytest.mark.parametrize("kind", [k.value for k in ManeuverKind])
@pytest.mark.parametrize("lam", [0.05, 0.2, 0.6])
def test_backends_identical(kind, lam):
    plan = RoadPlan.build(90, ManeuverSpec(kind))
    runs = []
    for backend in ("python", "cython"):
        gens = generators(17, 3, 1, 2, 1 + len(plan.stream_lengths))
        runs.append(kernel.run_segment(plan, P, lam, 700, 50, gens, backend=backend))
    a, b = runs
    np.testing.assert_array_equal(a.entry, b.entry)
    np.testing.assert_array_equal(a.exit, b.exit)
    np.testing.assert_array_equal(a.route, b.route)
    assert a.stats == b.stats


@needs_cython
def test_backends_identical_other_params():
    params = SimParams(v_max=4, r_s=0.3, r_0=0.5, spawn_speed=1, vehicle_cells=3)
    plan = RoadPlan.build(75, ManeuverSpec("merge_left_cross"))
    out = []
    for backend in ("python", "cython"):
        gens = generators(2, 7, 0, 0, 1 + len(plan.stream_lengths))
        out.append(kernel.run_segment(plan, params, 0.3, 600, 0, gens, stream_intensity=0.2, backend=backend))
    np.testing.assert_array_equal(out[0].exit, out[1].exit)
    assert out[0].stats == out[1].stats


def test_threshold_tables_match_rules():
    t = kernel.tables(P)
    w = P.v_max + 1
    for v_x in range(w):
        thr = int(t["merge_thr"][v_x])
        assert not can_merge(thr, v_x, P) and can_merge(thr + 1, v_x, P)
        for v_n in range(3):
            thr = int(t["cross_thr"][v_n * w + v_x])
            assert not can_cross(thr, v_x, v_n, P) and can_cross(thr + 1, v_x, v_n, P)


def test_input_validation():
    plan = RoadPlan.build(50, ManeuverSpec("straight_priority"))
    gens = generators(0, 0, 0, 0, 1)
    with pytest.raises(ValueError):
        kernel.run_segment(plan, P, 1.5, 10, 0, gens)
    with pytest.raises(ValueError):
        kernel.run_segment(plan, P, 0.1, 10, 20, gens)
    with pytest.raises(ValueError):
        kernel.run_segment(plan, P, 0.1, 10, 0, generators(0, 0, 0, 0, 2))
    with pytest.raises(ValueError):
        kernel.run_segment(plan, P, 0.1, 10, 0, gens, backend="fortran")


def test_strict_mode_raises(monkeypatch):
    plan = RoadPlan.build(50, ManeuverSpec("straight_priority"))

    def broken(*args, **kw):
        stats = dict.fromkeys(["vehicle_steps", "overlaps", "bad_speed_changes", "blocked_overruns"], 0)
        stats["overlaps"] = 1
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty, stats

    monkeypatch.setattr(kernel._kernel_py, "run_segment", broken)
    with pytest.raises(SimulationInvariantError):
        kernel.run_segment(plan, P, 0.1, 10, 0, generators(0, 0, 0, 0, 1), backend="python")
    run = kernel.run_segment(plan, P, 0.1, 10, 0, generators(0, 0, 0, 0, 1), backend="python", strict=False)
    assert run.stats["overlaps"] == 1


def test_backend_env_override():
    import subprocess
    import sys

    code = "from roadimp.sim import kernel; print(kernel.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"ROADIMP_PURE_PYTHON": "1", "PATH": ""},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
