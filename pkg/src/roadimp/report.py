"""CSV and plain-text output for importance reports and sweep results.

CSV files start with ``#``-prefixed metadata lines (seed, replications, mode
and so on) followed by a header row. Numbers are written with a fixed
format, so a rerun with the same seed reproduces the files byte for byte.
"""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .importance import ImportanceReport
from .pipeline import SweepResult

IMPORTANCE_COLUMNS = ("intensity", "segment_id", "name", "p", "birnbaum")
DELAY_COLUMNS = (
    "intensity", "segment_id", "name", "completed", "mean_delay_s", "median_delay_s", "p90_delay_s", "p",
)
RELIABILITY_COLUMNS = ("intensity", "route", "reliability")
STRUCTURAL_COLUMNS = (
    "rank", "segment_id", "name", "birnbaum", "birnbaum_functioning", "birnbaum_failure", "barlow_proschan",
)


def fmt(x: float, digits: int = 10) -> str:
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    s = f"{x:.{digits}f}".rstrip("0")
    return s + "0" if s.endswith(".") else s


def _csv(meta: dict, columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def sweep_metadata(r: SweepResult) -> dict:
    return {
        "roadimp": __version__,
        "scenario": r.scenario,
        "seed": r.seed,
        "replications": r.replications,
        "warmup_steps": r.warmup_steps,
        "measure_steps": r.measure_steps,
        "mode": r.mode,
        "p_method": r.p_method,
    }


def importance_csv(r: SweepResult) -> str:
    rows = (
        (fmt(lam, 3), sid, name, float(r.p[i, j]), float(r.birnbaum[i, j]))
        for i, lam in enumerate(r.intensities)
        for j, (sid, name) in enumerate(zip(r.segment_ids, r.segment_names))
    )
    return _csv(sweep_metadata(r), IMPORTANCE_COLUMNS, rows)


def delays_csv(r: SweepResult) -> str:
    rows = (
        (
            fmt(lam, 3), sid, name, int(r.completed[i, j]),
            float(r.mean_delay[i, j]), float(r.median_delay[i, j]), float(r.p90_delay[i, j]), float(r.p[i, j]),
        )
        for i, lam in enumerate(r.intensities)
        for j, (sid, name) in enumerate(zip(r.segment_ids, r.segment_names))
    )
    meta = sweep_metadata(r)
    meta["min_travel_steps"] = " ".join(str(int(m)) for m in r.min_travel)
    return _csv(meta, DELAY_COLUMNS, rows)


def reliability_csv(r: SweepResult) -> str:
    rows = []
    for i, lam in enumerate(r.intensities):
        rows.append((fmt(lam, 3), "system", float(r.system[i])))
        for k, name in enumerate(r.route_names):
            rows.append((fmt(lam, 3), name, float(r.routes[i, k])))
    return _csv(sweep_metadata(r), RELIABILITY_COLUMNS, rows)


def sweep_summary(r: SweepResult) -> str:
    """Structured text: ``key: value`` metadata, then one block per intensity."""
    lines = ["[run]"]
    lines += [f"{k}: {v}" for k, v in sweep_metadata(r).items()]
    lines.append("[safety]")
    lines += [f"{k}: {v}" for k, v in r.stats.items()]
    width = max(len(n) for n in r.segment_names)
    for i, lam in enumerate(r.intensities):
        lines.append(f"[intensity {fmt(lam, 3)}]")
        lines.append(f"system: {fmt(r.system[i], 4)}")
        for k, name in enumerate(r.route_names):
            lines.append(f"{name}: {fmt(r.routes[i, k], 4)}")
        lines.append(f"{'segment':<{width}}  {'delay_s':>9}  {'p':>6}  {'birnbaum':>8}")
        for j, name in enumerate(r.segment_names):
            lines.append(
                f"{name:<{width}}  {r.mean_delay[i, j]:>9.2f}  {r.p[i, j]:>6.4f}  {r.birnbaum[i, j]:>8.4f}"
            )
    return "\n".join(lines) + "\n"


def write_sweep(r: SweepResult, out: str | Path) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "importance.csv": importance_csv(r),
        "delays.csv": delays_csv(r),
        "reliability.csv": reliability_csv(r),
        "summary.txt": sweep_summary(r),
    }
    paths = []
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        paths.append(path)
    return paths


def _names(labels, names: dict | None):
    return [names.get(l, str(l)) if names else str(l) for l in labels]


def structural_csv(report: ImportanceReport, names: dict | None = None) -> str:
    order = {label: k + 1 for k, label in enumerate(report.ranking)}
    rows = [
        (
            order[rec.label], rec.label, _names([rec.label], names)[0],
            rec.birnbaum, rec.birnbaum_functioning, rec.birnbaum_failure, rec.barlow_proschan,
        )
        for rec in report.records
    ]
    meta = {"roadimp": __version__, "mode": report.evaluation_mode.value, "ranking_measure": report.measure}
    return _csv(meta, STRUCTURAL_COLUMNS, rows)


def structural_text(report: ImportanceReport, names: dict | None = None) -> str:
    labels = _names([r.label for r in report.records], names)
    width = max(7, max(len(n) for n in labels))
    lines = [
        f"mode: {report.evaluation_mode.value}",
        f"ranking ({report.measure}): {' '.join(str(l) for l in report.ranking)}",
        f"{'id':>3}  {'segment':<{width}}  {'birnbaum':>8}  {'barlow-proschan':>15}",
    ]
    for rec, name in zip(report.records, labels):
        lines.append(f"{rec.label!s:>3}  {name:<{width}}  {rec.birnbaum:>8.4f}  {rec.barlow_proschan:>15.4f}")
    return "\n".join(lines) + "\n"
