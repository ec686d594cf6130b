"""Scenario files: segments, junction behaviour, routes and sweep settings.

Scenarios are YAML documents with ``schema: 1``. Validation errors carry the
file name and line of the offending node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .satisfaction import WeibullPatience
from .sim.intersection import ManeuverKind, ManeuverSpec, RoadPlan, TrafficLight
from .sim.lai import SimParams
from .structure import StructureFunction

SCHEMA_VERSION = 1
BUNDLED = "zdunska-wola"

_TOP_KEYS = {"schema", "name", "satisfaction", "simulation", "sweep", "segments", "routes"}
_SIM_KEYS = {
    "v_max", "delta_v", "emergency", "r_0", "r_d", "v_s", "r_s", "vehicle_cells", "spawn_speed",
    "cell_m", "step_s", "warmup_steps", "measure_steps", "conflict_length_cells",
}
_SEGMENT_KEYS = {"id", "name", "length_m", "length_cells", "maneuver", "light"}
_LIGHT_KEYS = {"offset", "red", "red_yellow", "green", "yellow"}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    id: int
    name: str
    length_m: float
    length_cells: int
    maneuver: ManeuverSpec
    light: TrafficLight | None = None


@dataclass(frozen=True)
class Route:
    name: str
    segments: tuple[int, ...]


@dataclass(frozen=True)
class Scenario:
    name: str
    segments: tuple[Segment, ...]
    routes: tuple[Route, ...]
    params: SimParams
    patience: WeibullPatience
    warmup_steps: int
    measure_steps: int
    conflict_length: int
    intensities: tuple[float, ...]
    replications: int
    seed: int
    source: str = "<memory>"

    @property
    def segment_ids(self) -> tuple[int, ...]:
        return tuple(s.id for s in self.segments)

    def segment(self, seg_id: int) -> Segment:
        for s in self.segments:
            if s.id == seg_id:
                return s
        raise KeyError(seg_id)

    def structure(self) -> StructureFunction:
        return StructureFunction.from_labeled_paths([r.segments for r in self.routes], self.segment_ids)

    def plan(self, seg: Segment) -> RoadPlan:
        return RoadPlan.build(seg.length_cells, seg.maneuver, seg.light, self.conflict_length)


# -- node lookup for line numbers -------------------------------------------------


class _Located:
    """Maps key paths of the loaded document to the line where they appear."""

    def __init__(self, root: yaml.Node | None, source: str):
        self.root = root
        self.source = source

    def _node(self, path: tuple) -> yaml.Node | None:
        node = self.root
        for key in path:
            if isinstance(node, yaml.MappingNode):
                nxt = None
                for k, v in node.value:
                    if k.value == str(key):
                        nxt = v
                        break
                node = nxt
            elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
                node = node.value[key]
            else:
                return node
            if node is None:
                return None
        return node

    def error(self, path: tuple, msg: str) -> ScenarioError:
        node = None
        # fall back to the closest located ancestor
        for cut in range(len(path), -1, -1):
            node = self._node(path[:cut])
            if node is not None:
                break
        where = f"{self.source}:{node.start_mark.line + 1}" if node is not None else self.source
        dotted = ".".join(str(p) for p in path) or "<root>"
        return ScenarioError(f"{where}: {dotted}: {msg}")


def _get(doc: dict, key: str, kind, loc: _Located, path: tuple, default=None, required=True):
    if key not in doc:
        if required and default is None:
            raise loc.error(path, f"missing required key '{key}'")
        return default
    value = doc[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        name = kind.__name__ if isinstance(kind, type) else "/".join(k.__name__ for k in kind)
        raise loc.error(path + (key,), f"expected {name}, got {type(value).__name__}")
    return value


def _check_keys(doc: dict, allowed: set, loc: _Located, path: tuple) -> None:
    unknown = sorted(set(doc) - allowed, key=str)
    if unknown:
        raise loc.error(path + (unknown[0],), f"unknown key '{unknown[0]}' (allowed: {', '.join(sorted(allowed))})")


def _grid(spec, loc: _Located, path: tuple) -> tuple[float, ...]:
    if isinstance(spec, list):
        values = []
        for i, v in enumerate(spec):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise loc.error(path + (i,), "intensity must be a number")
            values.append(float(v))
    elif isinstance(spec, dict):
        _check_keys(spec, {"start", "stop", "step"}, loc, path)
        start = _get(spec, "start", float, loc, path)
        stop = _get(spec, "stop", float, loc, path)
        step = _get(spec, "step", float, loc, path)
        if step <= 0 or stop < start:
            raise loc.error(path, "need step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        values = [round(start + i * step, 10) for i in range(count)]
    else:
        raise loc.error(path, "intensities must be a list or {start, stop, step}")
    if not values:
        raise loc.error(path, "empty intensity grid")
    for i, v in enumerate(values):
        if not 0.0 <= v <= 1.0:
            raise loc.error(path, f"intensity {v} outside [0, 1]")
    return tuple(values)


def _segment(doc, i: int, cell_m: float, loc: _Located) -> Segment:
    path = ("segments", i)
    if not isinstance(doc, dict):
        raise loc.error(path, "segment must be a mapping")
    _check_keys(doc, _SEGMENT_KEYS, loc, path)
    seg_id = _get(doc, "id", int, loc, path)
    name = _get(doc, "name", str, loc, path)
    length_m = _get(doc, "length_m", float, loc, path)
    cells = length_m / cell_m
    if length_m <= 0 or abs(cells - round(cells)) > 1e-9:
        raise loc.error(path + ("length_m",), f"{length_m} m is not a whole number of {cell_m} m cells")
    cells = int(round(cells))
    given = _get(doc, "length_cells", int, loc, path, required=False)
    if given is not None and given != cells:
        raise loc.error(path + ("length_cells",), f"length_cells {given} != length_m / cell_m = {cells}")
    man = _get(doc, "maneuver", dict, loc, path)
    _check_keys(man, {"kind", "slow_to", "branches"}, loc, path + ("maneuver",))
    kind = _get(man, "kind", str, loc, path + ("maneuver",))
    try:
        maneuver = ManeuverSpec(
            ManeuverKind(kind),
            man.get("slow_to"),
            dict(man.get("branches") or {}),
        )
    except ValueError as exc:
        if kind not in {k.value for k in ManeuverKind}:
            msg = f"unknown maneuver kind '{kind}' (one of {', '.join(k.value for k in ManeuverKind)})"
            raise loc.error(path + ("maneuver", "kind"), msg) from None
        raise loc.error(path + ("maneuver",), str(exc)) from None
    light = None
    if "light" in doc:
        ldoc = _get(doc, "light", dict, loc, path)
        _check_keys(ldoc, _LIGHT_KEYS, loc, path + ("light",))
        try:
            light = TrafficLight(**{k: int(v) for k, v in ldoc.items()})
        except (TypeError, ValueError) as exc:
            raise loc.error(path + ("light",), str(exc)) from None
    if maneuver.signalized and light is None:
        light = TrafficLight()
    if light is not None and not maneuver.signalized:
        raise loc.error(path + ("light",), f"maneuver '{kind}' has no traffic light")
    return Segment(seg_id, name, length_m, cells, maneuver, light)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        root = yaml.compose(text)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"{source}:{mark.line + 1}" if mark is not None else source
        raise ScenarioError(f"{where}: invalid YAML: {getattr(exc, 'problem', exc)}") from None
    loc = _Located(root, source)
    if not isinstance(doc, dict):
        raise loc.error((), "scenario must be a mapping")
    _check_keys(doc, _TOP_KEYS, loc, ())
    version = _get(doc, "schema", int, loc, ())
    if version != SCHEMA_VERSION:
        raise loc.error(("schema",), f"unsupported schema version {version} (expected {SCHEMA_VERSION})")
    name = _get(doc, "name", str, loc, ())

    sat = _get(doc, "satisfaction", dict, loc, (), default={}, required=False)
    _check_keys(sat, {"lambda", "k"}, loc, ("satisfaction",))
    try:
        patience = WeibullPatience(
            float(sat.get("lambda", WeibullPatience.lam)), float(sat.get("k", WeibullPatience.k))
        )
    except (TypeError, ValueError) as exc:
        raise loc.error(("satisfaction",), str(exc)) from None

    sim = _get(doc, "simulation", dict, loc, (), default={}, required=False)
    _check_keys(sim, _SIM_KEYS, loc, ("simulation",))
    param_fields = {k: v for k, v in sim.items() if k in SimParams.__dataclass_fields__}
    try:
        params = SimParams(**param_fields)
    except (TypeError, ValueError) as exc:
        raise loc.error(("simulation",), str(exc)) from None
    warmup = int(sim.get("warmup_steps", 500))
    measure = int(sim.get("measure_steps", 2000))
    conflict = int(sim.get("conflict_length_cells", 100))
    if warmup < 0 or measure < 1 or conflict < 1:
        raise loc.error(("simulation",), "need warmup_steps >= 0, measure_steps >= 1, conflict_length_cells >= 1")

    sweep = _get(doc, "sweep", dict, loc, (), default={}, required=False)
    _check_keys(sweep, {"intensities", "replications", "seed"}, loc, ("sweep",))
    intensities = _grid(sweep.get("intensities", {"start": 0.05, "stop": 0.6, "step": 0.025}), loc, ("sweep", "intensities"))
    replications = int(sweep.get("replications", 1000))
    seed = int(sweep.get("seed", 0))
    if replications < 1:
        raise loc.error(("sweep", "replications"), "replications must be >= 1")

    raw_segments = _get(doc, "segments", list, loc, ())
    if not raw_segments:
        raise loc.error(("segments",), "at least one segment is required")
    segments = [_segment(s, i, params.cell_m, loc) for i, s in enumerate(raw_segments)]
    seen: dict[int, int] = {}
    for i, s in enumerate(segments):
        if s.id in seen:
            raise loc.error(("segments", i, "id"), f"duplicate segment id {s.id}")
        seen[s.id] = i

    raw_routes = _get(doc, "routes", list, loc, ())
    if not raw_routes:
        raise loc.error(("routes",), "at least one route is required")
    routes = []
    for i, r in enumerate(raw_routes):
        path = ("routes", i)
        if not isinstance(r, dict):
            raise loc.error(path, "route must be a mapping")
        _check_keys(r, {"name", "segments"}, loc, path)
        rname = str(r.get("name", f"Route {i + 1}"))
        members = _get(r, "segments", list, loc, path)
        if not members:
            raise loc.error(path + ("segments",), "route has no segments")
        for j, m in enumerate(members):
            if isinstance(m, bool) or not isinstance(m, int):
                raise loc.error(path + ("segments", j), "segment references must be integer ids")
            if m not in seen:
                raise loc.error(path + ("segments", j), f"route references undeclared segment {m}")
        if len(set(members)) != len(members):
            raise loc.error(path + ("segments",), "route repeats a segment")
        routes.append(Route(rname, tuple(members)))
    sets = [frozenset(r.segments) for r in routes]
    for i, a in enumerate(sets):
        for j, b in enumerate(sets):
            if i != j and (b < a or (a == b and j < i)):
                raise loc.error(("routes", i), f"route is not minimal: contains route {j + 1}")

    return Scenario(
        name=name,
        segments=tuple(segments),
        routes=tuple(routes),
        params=params,
        patience=patience,
        warmup_steps=warmup,
        measure_steps=measure,
        conflict_length=conflict,
        intensities=intensities,
        replications=replications,
        seed=seed,
        source=source,
    )


def load_scenario(path: str | Path | None = None) -> Scenario:
    """Load a scenario file; ``None`` or the bundled name loads the packaged network."""
    if path is None or str(path) == BUNDLED:
        text = resources.files("roadimp").joinpath("data", f"{BUNDLED}.yaml").read_text()
        return parse_scenario(text, f"{BUNDLED}.yaml")
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"{p}: cannot read scenario: {exc.strerror}") from None
    return parse_scenario(text, str(p))


def describe(s: Scenario) -> dict[str, Any]:
    """Plain summary used by the CLI ``validate`` command."""
    phi = s.structure()
    return {
        "name": s.name,
        "segments": len(s.segments),
        "routes": len(s.routes),
        "cells": [seg.length_cells for seg in s.segments],
        "components": phi.n,
        "intensities": len(s.intensities),
        "replications": s.replications,
        "seed": s.seed,
        "unused_segments": sorted(set(s.segment_ids) - {c for r in s.routes for c in r.segments}),
        "grid": np.round(np.asarray(s.intensities), 6).tolist(),
    }
