"""Time the compiled and pure-Python segment kernels on the bundled network.

    python3 benchmarks/bench_kernel.py [--steps N] [--intensities 0.05,0.3,0.6] [--repeat R]

Both backends consume identical random streams, so the script also checks
that they produce identical travel times.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from roadimp.pipeline import generators
from roadimp.scenario import load_scenario
from roadimp.sim.kernel import BACKENDS, run_segment


def bench(scenario, backend, intensities, steps, repeat):
    best = float("inf")
    outputs = []
    vsteps = 0
    for _ in range(repeat):
        outputs = []
        vsteps = 0
        t0 = time.perf_counter()
        for seg in scenario.segments:
            plan = scenario.plan(seg)
            for i, lam in enumerate(intensities):
                gens = generators(1, seg.id, 0, i, 1 + len(plan.stream_lengths))
                run = run_segment(plan, scenario.params, lam, steps, 0, gens, backend=backend)
                outputs.append(run.travel_times)
                vsteps += run.stats["vehicle_steps"]
        best = min(best, time.perf_counter() - t0)
    return best, vsteps, outputs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=1000)
    ap.add_argument("--intensities", default="0.05,0.3,0.6")
    ap.add_argument("--repeat", type=int, default=3, help="report the best of this many runs")
    args = ap.parse_args(argv)
    grid = [float(x) for x in args.intensities.split(",")]
    scenario = load_scenario()

    print(f"{len(scenario.segments)} segments x {len(grid)} intensities x {args.steps} steps, best of {args.repeat}")
    print(f"{'backend':<8} {'seconds':>9} {'vehicle-steps/s':>16}")
    results = {}
    for backend in ("cython", "python"):
        if backend not in BACKENDS:
            print(f"{backend:<8} {'unavailable':>9}")
            continue
        seconds, vsteps, out = bench(scenario, backend, grid, args.steps, args.repeat)
        results[backend] = (seconds, out)
        print(f"{backend:<8} {seconds:9.3f} {vsteps / seconds:16,.0f}")
    if len(results) == 2:
        (tc, oc), (tp, op) = results["cython"], results["python"]
        same = all(np.array_equal(a, b) for a, b in zip(oc, op))
        print(f"speedup: {tp / tc:.1f}x; identical travel times: {same}")


if __name__ == "__main__":
    main()
