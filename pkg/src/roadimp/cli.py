"""Command-line interface.

Exit codes: 0 success, 1 invalid input (scenario or arguments), 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .scenario import BUNDLED, ScenarioError, describe, load_scenario

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _grid(text: str) -> tuple[float, ...]:
    """``0.05,0.1`` or ``start:stop:step``."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int((stop - start) / step + 1e-9) + 1
            values = tuple(round(start + i * step, 10) for i in range(n))
        else:
            values = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad intensity list {text!r}") from None
    if not values or any(not 0 <= v <= 1 for v in values):
        raise argparse.ArgumentTypeError("intensities must lie in [0, 1]")
    return values


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="roadimp", description="Segment importance for a road network.")
    p.add_argument("--scenario", default=BUNDLED, help=f"scenario YAML file (default: bundled {BUNDLED})")
    p.add_argument("--out", type=Path, default=None, help="output directory (default: stdout where possible)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("structural", help="structural importance from the network's minimal paths")
    s.add_argument("--mode", choices=("exact", "paper-naive"), default="exact")
    s.add_argument("--measure", choices=("birnbaum", "barlow-proschan"), default="birnbaum")
    s.add_argument("--format", choices=("text", "csv"), default="text")

    m = sub.add_parser("simulate", help="simulate one segment (debugging aid)")
    m.add_argument("--segment", type=int, required=True)
    m.add_argument("--intensity", type=float, required=True)
    m.add_argument("--steps", type=int, default=None, help="total steps (default warm-up + measurement)")
    m.add_argument("--warmup", type=int, default=None)
    m.add_argument("--seed", type=int, default=None)
    m.add_argument("--rep", type=int, default=0, help="replication index for seeding")
    m.add_argument("--trajectory", type=Path, default=None, help="write step,vehicle,position,velocity CSV")
    m.add_argument("--backend", choices=("cython", "python"), default=None)

    w = sub.add_parser("sweep", help="full intensity sweep")
    w.add_argument("--seed", type=int, default=None)
    w.add_argument("--replications", type=int, default=None)
    w.add_argument("--intensities", type=_grid, default=None, help="'a,b,c' or 'start:stop:step'")
    w.add_argument("--mode", choices=("exact", "paper-naive"), default="exact")
    w.add_argument("--p-method", choices=("q-of-mean", "mean-of-q"), default="q-of-mean")
    w.add_argument("--workers", type=int, default=None, help="processes (default ROADIMP_WORKERS or 1)")

    sub.add_parser("validate", help="check a scenario file")
    return p


def _emit(text: str, out: Path | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)
    print(out / name)


def _structural(args, scenario) -> int:
    from .importance import importance_report
    from .report import structural_csv, structural_text

    phi = scenario.structure()
    report = importance_report(phi, None, args.mode, args.measure)
    names = {s.id: s.name for s in scenario.segments}
    if args.format == "csv":
        _emit(structural_csv(report, names), args.out, "structural.csv")
    else:
        _emit(structural_text(report, names), args.out, "structural.txt")
    return EXIT_OK


def _simulate(args, scenario) -> int:
    import numpy as np

    from .pipeline import generators
    from .sim.kernel import run_segment

    try:
        seg = scenario.segment(args.segment)
    except KeyError:
        raise UsageError(f"no segment {args.segment} in scenario {scenario.name}") from None
    if not 0 <= args.intensity <= 1:
        raise UsageError("--intensity must lie in [0, 1]")
    warmup = scenario.warmup_steps if args.warmup is None else args.warmup
    steps = warmup + scenario.measure_steps if args.steps is None else args.steps
    if not 0 <= warmup <= steps:
        raise UsageError("need 0 <= warmup <= steps")
    seed = scenario.seed if args.seed is None else args.seed
    plan = scenario.plan(seg)
    gens = generators(seed, seg.id, args.rep, 0, 1 + len(plan.stream_lengths))
    traj = [] if args.trajectory is not None else None
    run = run_segment(plan, scenario.params, args.intensity, steps, warmup, gens, backend=args.backend, trajectory=traj)
    tt = run.travel_times
    print(f"segment: {seg.id} {seg.name}")
    print(f"cells: {seg.length_cells}")
    print(f"intensity: {args.intensity}")
    print(f"completed: {tt.size}")
    if tt.size:
        print(f"travel_mean_s: {tt.mean():.3f}")
        print(f"travel_min_s: {int(tt.min())}")
        print(f"travel_max_s: {int(tt.max())}")
        print(f"travel_p90_s: {float(np.quantile(tt, 0.9)):.1f}")
    for k, v in run.stats.items():
        print(f"{k}: {v}")
    if traj is not None:
        args.trajectory.parent.mkdir(parents=True, exist_ok=True)
        with open(args.trajectory, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("step", "vehicle", "position", "velocity"))
            w.writerows(traj)
    return EXIT_OK


def _sweep(args, scenario) -> int:
    from .pipeline import run_sweep, safety_violations
    from .report import write_sweep

    if args.replications is not None and args.replications < 1:
        raise UsageError("--replications must be >= 1")
    result = run_sweep(
        scenario,
        intensities=args.intensities,
        replications=args.replications,
        seed=args.seed,
        mode=args.mode,
        p_method=args.p_method,
        workers=args.workers,
    )
    out = args.out or Path("results")
    for path in write_sweep(result, out):
        print(path)
    bad = safety_violations(result)
    if bad:
        print(f"roadimp: safety counters nonzero: {bad}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _validate(args, scenario) -> int:
    for k, v in describe(scenario).items():
        print(f"{k}: {v}")
    print("ok")
    return EXIT_OK


COMMANDS = {"structural": _structural, "simulate": _simulate, "sweep": _sweep, "validate": _validate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        scenario = load_scenario(args.scenario)
        return COMMANDS[args.command](args, scenario)
    except (UsageError, ScenarioError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"roadimp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
