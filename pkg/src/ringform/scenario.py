"""Scenario files: target angles, initial layout, and run settings.

A scenario is a small YAML document:

    name: square
    n: 4
    target_angles_deg: [90, 90, 90, 90]
    initial:
      scale: 1.0
      magnitude: 0.1
      seed: 0
    sim:
      dt: 2.0e-05
      t_max: 2.0
      deadband: 1.0e-04

The ``initial`` section either gives generator parameters (realize the
target at ``scale``, then displace every vehicle by at most
``magnitude`` using ``seed``) or explicit ``positions``; mixing the two
is rejected. Missing ``sim`` keys fall back to the SimConfig defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ScenarioError
from .formation import FormationState, TargetSpec, perturb, realize_target
from .simulator import SimConfig

_INITIAL_KEYS = {"scale", "magnitude", "seed", "positions"}
_SIM_KEYS = {
    "dt", "t_max", "convergence_tol", "deadband", "collision_floor",
    "settle_window", "record_stride", "seed",
}
_TOP_KEYS = {"name", "n", "target_angles_deg", "initial", "sim"}


@dataclass
class InitialSpec:
    """How to build the starting formation."""

    scale: float = 1.0
    magnitude: float = 0.0
    seed: int = 0
    positions: list | None = None


@dataclass
class Scenario:
    """Parsed scenario file contents."""

    name: str
    target_angles_deg: list
    initial: InitialSpec = field(default_factory=InitialSpec)
    sim: SimConfig = field(default_factory=SimConfig)

    @property
    def n(self) -> int:
        return len(self.target_angles_deg)


def _fail(source: str, fieldname: str, message: str):
    raise ScenarioError(f"{source}: {fieldname}: {message}")


def _check_keys(mapping: dict, allowed: set, source: str, section: str):
    unknown = set(mapping) - allowed
    if unknown:
        names = ", ".join(sorted(str(k) for k in unknown))
        _fail(source, section or "top level", f"unknown keys: {names}")


def _number(mapping, key, source, section, default=None, positive=False,
            nonnegative=False):
    if key not in mapping:
        return default
    v = mapping[key]
    label = f"{section}.{key}" if section else key
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(source, label, f"expected a number, got {v!r}")
    v = float(v)
    if positive and v <= 0:
        _fail(source, label, f"expected a positive number, got {v!r}")
    if nonnegative and v < 0:
        _fail(source, label, f"expected a nonnegative number, got {v!r}")
    return v


def _integer(mapping, key, source, section, default=None):
    if key not in mapping:
        return default
    v = mapping[key]
    label = f"{section}.{key}" if section else key
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(source, label, f"expected an integer, got {v!r}")
    return int(v)


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse and validate scenario YAML, with field-precise errors."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"{source}: invalid YAML{where}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioError(f"{source}: expected a mapping at the top level")
    _check_keys(doc, _TOP_KEYS, source, "")

    angles = doc.get("target_angles_deg")
    if not isinstance(angles, list) or len(angles) < 3:
        _fail(source, "target_angles_deg", "expected a list of at least 3 angles")
    for i, a in enumerate(angles):
        if isinstance(a, bool) or not isinstance(a, (int, float)):
            _fail(source, f"target_angles_deg[{i}]", f"expected a number, got {a!r}")
    angles = [float(a) for a in angles]

    n = _integer(doc, "n", source, "", default=len(angles))
    if n != len(angles):
        _fail(source, "n", f"n={n} but {len(angles)} target angles given")

    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        _fail(source, "name", f"expected a string, got {name!r}")

    init_doc = doc.get("initial", {}) or {}
    if not isinstance(init_doc, dict):
        _fail(source, "initial", "expected a mapping")
    _check_keys(init_doc, _INITIAL_KEYS, source, "initial")
    positions = init_doc.get("positions")
    if positions is not None:
        generator_keys = {"scale", "magnitude", "seed"} & set(init_doc)
        if generator_keys:
            _fail(source, "initial.positions",
                  f"cannot combine with {sorted(generator_keys)}")
        if not isinstance(positions, list) or len(positions) != n:
            _fail(source, "initial.positions", f"expected a list of {n} points")
        for i, p in enumerate(positions):
            ok = (
                isinstance(p, list) and len(p) == 2
                and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in p)
            )
            if not ok:
                _fail(source, f"initial.positions[{i}]", f"expected [x, y], got {p!r}")
        positions = [[float(p[0]), float(p[1])] for p in positions]
    initial = InitialSpec(
        scale=_number(init_doc, "scale", source, "initial", default=1.0, positive=True),
        magnitude=_number(init_doc, "magnitude", source, "initial", default=0.0,
                          nonnegative=True),
        seed=_integer(init_doc, "seed", source, "initial", default=0),
        positions=positions,
    )

    sim_doc = doc.get("sim", {}) or {}
    if not isinstance(sim_doc, dict):
        _fail(source, "sim", "expected a mapping")
    _check_keys(sim_doc, _SIM_KEYS, source, "sim")
    defaults = SimConfig()
    try:
        sim = SimConfig(
            dt=_number(sim_doc, "dt", source, "sim", default=defaults.dt, positive=True),
            t_max=_number(sim_doc, "t_max", source, "sim", default=defaults.t_max,
                          positive=True),
            convergence_tol=_number(sim_doc, "convergence_tol", source, "sim",
                                    default=defaults.convergence_tol, positive=True),
            deadband=_number(sim_doc, "deadband", source, "sim",
                             default=defaults.deadband, nonnegative=True),
            collision_floor=_number(sim_doc, "collision_floor", source, "sim",
                                    default=None, positive=True),
            settle_window=_number(sim_doc, "settle_window", source, "sim",
                                  default=defaults.settle_window, nonnegative=True),
            record_stride=_integer(sim_doc, "record_stride", source, "sim",
                                   default=None),
            seed=_integer(sim_doc, "seed", source, "sim", default=defaults.seed),
        )
    except ValueError as exc:
        raise ScenarioError(f"{source}: sim: {exc}") from exc

    return Scenario(name=name, target_angles_deg=angles, initial=initial, sim=sim)


def load_scenario(path) -> Scenario:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc}") from exc
    return parse_scenario(text, source=str(path))


def serialize_scenario(sc: Scenario) -> str:
    """Render a scenario back to YAML; inverse of parse_scenario."""
    init: dict = {}
    if sc.initial.positions is not None:
        init["positions"] = [[float(x), float(y)] for x, y in sc.initial.positions]
    else:
        init = {
            "scale": sc.initial.scale,
            "magnitude": sc.initial.magnitude,
            "seed": sc.initial.seed,
        }
    defaults = SimConfig()
    sim = {
        "dt": sc.sim.dt,
        "t_max": sc.sim.t_max,
        "convergence_tol": sc.sim.convergence_tol,
        "deadband": sc.sim.deadband,
        "settle_window": sc.sim.settle_window,
        "seed": sc.sim.seed,
    }
    if sc.sim.collision_floor is not None:
        sim["collision_floor"] = sc.sim.collision_floor
    if sc.sim.record_stride is not None:
        sim["record_stride"] = sc.sim.record_stride
    doc = {
        "name": sc.name,
        "n": sc.n,
        "target_angles_deg": sc.target_angles_deg,
        "initial": init,
        "sim": sim,
    }
    return yaml.safe_dump(doc, sort_keys=False)


def save_scenario(sc: Scenario, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_scenario(sc))


def materialize(sc: Scenario) -> tuple[FormationState, TargetSpec]:
    """Build the initial state and target spec a scenario describes."""
    spec = TargetSpec.from_degrees(sc.target_angles_deg)
    if sc.initial.positions is not None:
        state = FormationState(np.asarray(sc.initial.positions, dtype=float))
    else:
        state = realize_target(spec, scale=sc.initial.scale)
        if sc.initial.magnitude > 0:
            state = perturb(state, sc.initial.magnitude, sc.initial.seed)
    return state, spec
