"""Run configuration: YAML with explicit unit strings, converted to SI on parse."""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace

import numpy as np
import yaml

from .errors import ConfigError, DomainError
from .scenarios import CustomScenario, ElementSpec, InsideScenario, OutsideScenario
from .sweeps import AXES, OBSERVABLES, SweepSpec

UNITS = {
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9},
    "power": {"W": 1.0, "mW": 1e-3, "uW": 1e-6, "µW": 1e-6, "nW": 1e-9, "pW": 1e-12, "fW": 1e-15},
    "rate": {"rad/s": 1.0, "1/s": 1.0, "s^-1": 1.0},
    "intensity": {"W/m^2": 1.0, "mW/cm^2": 10.0},
    "mass": {"kg": 1.0, "u": 1.66053906660e-27},
    "area": {"m^2": 1.0, "um^2": 1e-12, "µm^2": 1e-12},
}
# detunings additionally accept "Gamma" and "kappa", resolved against the scenario
DETUNING_UNITS = dict(UNITS["rate"], Gamma=None, kappa=None)
SI_UNIT = {"length": "m", "power": "W", "rate": "rad/s", "intensity": "W/m^2", "mass": "kg", "area": "m^2",
           "detuning": "rad/s"}

# config key -> (scenario field, kind); kinds ending in "?" accept null
_COMMON = {
    "waist": ("waist", "length"),
    "wavelength": ("wavelength", "length"),
    "gamma": ("gamma", "rate"),
    "atom_detuning": ("atom_detuning", "detuning"),
    "saturation_intensity": ("saturation_intensity", "intensity"),
    "mass": ("mass", "mass"),
    "coupling": ("coupling", "number?"),
    "mode_area": ("mode_area", "area?"),
    "power": ("pump_power", "power"),
    "dispersion": ("dispersion", "bool"),
    "s_max": ("s_max", "number?"),
    "saturation_rule": ("saturation_rule", "str"),
}
_CAVITY = dict(_COMMON, cavity_length=("cavity_length", "length"), mirror_zeta=("mirror_zeta", "number"),
               detuning=("pump_detuning", "detuning?"))
KEYS = {
    "inside": dict(_CAVITY, position=("atom_position", "length?")),
    "outside": dict(_CAVITY, distance=("atom_distance", "length?")),
    "custom": dict(_COMMON, mobile=("mobile_index", "int"), pump_side=("pump_side", "str")),
}
ALIASES = {"pump_power": "power", "pump_detuning": "detuning", "atom_position": "position",
           "atom_distance": "distance", "mobile_index": "mobile"}
SCENARIOS = {"inside": InsideScenario, "outside": OutsideScenario, "custom": CustomScenario}
AXIS_KIND = {"position": "length", "detuning": "detuning", "waist": "length", "cavity_length": "length",
             "finesse": "number", "power": "power"}
TOP_KEYS = {"scenario", "sweep", "average", "optimize", "solve", "output"}


@dataclass(frozen=True)
class AverageSpec:
    observable: str = "friction"
    points: int = 128


@dataclass(frozen=True)
class OptimizeSpec:
    axes: tuple[str, ...] = ("detuning", "position")
    objective: str = "-friction"
    sense: str = "max"
    bounds: tuple[tuple[str, float, float], ...] = ()
    grid: tuple[int, ...] | None = None


@dataclass(frozen=True)
class SolveSpec:
    observables: tuple[str, ...] | None = None


@dataclass(frozen=True)
class OutputSpec:
    path: str | None = None
    format: str = "csv"
    precision: int = 17

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise DomainError(f"output format must be 'csv' or 'json', got {self.format!r}")
        if not 9 <= int(self.precision) <= 17:
            raise DomainError(f"output precision must lie in [9, 17] significant digits, got {self.precision!r}")


@dataclass(frozen=True)
class RunConfig:
    scenario: InsideScenario | OutsideScenario | CustomScenario
    sweep: SweepSpec | None = None
    average: AverageSpec | None = None
    optimize: OptimizeSpec | None = None
    solve: SolveSpec | None = None
    output: OutputSpec = OutputSpec()


# ---------------------------------------------------------------------------
# parsing helpers


class _Ctx:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, path, msg):
        line = self.lines.get(tuple(path))
        where = f"line {line}: " if line else ""
        raise ConfigError(f"{where}{'.'.join(map(str, path))}: {msg}")


def _line_map(node, path=(), out=None):
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        seen = set()
        for k, v in node.value:
            key = k.value
            if key in seen:
                raise ConfigError(f"line {k.start_mark.line + 1}: duplicate key {key!r}")
            seen.add(key)
            out[path + (key,)] = k.start_mark.line + 1
            _line_map(v, path + (key,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            out[path + (i,)] = v.start_mark.line + 1
            _line_map(v, path + (i,), out)
    return out


_QTY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf|nan)\s*(\S.*?)?\s*$")


def _quantity(ctx, path, value, kind, scen=None):
    """Convert ``"<number> <unit>"`` to SI; ``scen`` resolves Gamma/kappa."""
    nullable = kind.endswith("?")
    kind = kind.rstrip("?")
    if value is None:
        if nullable:
            return None
        ctx.fail(path, "value required")
    if kind == "bool":
        if not isinstance(value, bool):
            ctx.fail(path, f"expected true/false, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            ctx.fail(path, f"expected a string, got {value!r}")
        return value
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            ctx.fail(path, f"expected an integer, got {value!r}")
        return value
    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            try:
                return float(str(value))
            except ValueError:
                ctx.fail(path, f"expected a plain number, got {value!r}")
        return float(value)
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        ctx.fail(path, f"missing unit for {kind} value {value!r}")
    m = _QTY.match(str(value))
    if not m:
        ctx.fail(path, f"cannot read quantity {value!r}")
    num, unit = float(m.group(1)), m.group(2)
    if unit is None:
        ctx.fail(path, f"missing unit for {kind} value {value!r}")
    table = DETUNING_UNITS if kind == "detuning" else UNITS[kind]
    if unit not in table:
        ctx.fail(path, f"unknown {kind} unit {unit!r}; expected one of {sorted(table)}")
    if unit == "Gamma":
        return num * scen.gamma
    if unit == "kappa":
        try:
            return num * scen.kappa
        except Exception as exc:  # no resonator to define kappa
            ctx.fail(path, f"kappa units need a cavity: {exc}")
    return num * table[unit]


def parse_config(text: str) -> RunConfig:
    """Parse and validate a YAML run configuration."""
    try:
        root = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping")
    ctx = _Ctx(_line_map(root) if root is not None else {})

    # flat form (scenario: inside, power: ...) or nested (scenario: {type: inside, ...})
    scen_block = raw.get("scenario", "inside")
    if isinstance(scen_block, dict):
        params = dict(scen_block)
        kind = params.pop("type", "inside")
        ppath = ("scenario",)
        extra = [k for k in raw if k not in TOP_KEYS]
        if extra:
            ctx.fail((extra[0],), "unknown key (scenario parameters belong in the scenario block)")
    else:
        kind = scen_block
        params = {k: v for k, v in raw.items() if k not in TOP_KEYS}
        ppath = ()
    if kind not in SCENARIOS:
        ctx.fail(("scenario",), f"unknown scenario {kind!r}; expected one of {sorted(SCENARIOS)}")
    scenario = _parse_scenario(ctx, kind, params, ppath)

    sweep = _parse_sweep(ctx, raw["sweep"], scenario) if "sweep" in raw else None
    average = _parse_average(ctx, raw["average"]) if "average" in raw else None
    opt = _parse_optimize(ctx, raw["optimize"], scenario) if "optimize" in raw else None
    solve = _parse_solve(ctx, raw["solve"]) if "solve" in raw else None
    output = _parse_output(ctx, raw.get("output") or {})
    return RunConfig(scenario, sweep, average, opt, solve, output)


def _canonical(ctx, path, key, keys):
    k = ALIASES.get(key, key)
    if k not in keys and k not in ("finesse", "elements"):
        ctx.fail(path + (key,), f"unknown key {key!r}")
    return k


def _parse_scenario(ctx, kind, params, ppath):
    keys = KEYS[kind]
    cls = SCENARIOS[kind]
    seen = {}
    for key in params:
        k = _canonical(ctx, ppath, key, keys)
        if k in seen:
            ctx.fail(ppath + (key,), f"{key!r} given twice (alias of {seen[k]!r})")
        seen[k] = key
    if kind != "custom" and "elements" in seen:
        ctx.fail(ppath + (seen["elements"],), "elements are only valid for a custom stack")
    if kind == "custom" and "finesse" in seen:
        ctx.fail(ppath + (seen["finesse"],), "finesse is only valid for a cavity scenario")
    if "finesse" in seen and "mirror_zeta" in seen:
        ctx.fail(ppath + (seen["finesse"],), "give either finesse or mirror_zeta, not both")

    kw = {}
    late = {}
    for k, key in seen.items():
        path = ppath + (key,)
        if k in ("finesse", "elements"):
            continue
        fld, qkind = keys[k]
        if qkind.startswith("detuning"):
            late[fld] = (path, params[key], qkind)
            continue
        kw[fld] = _quantity(ctx, path, params[key], qkind)
    if "finesse" in seen:
        from .elements import zeta_for_finesse

        path = ppath + (seen["finesse"],)
        f = _quantity(ctx, path, params[seen["finesse"]], "number")
        try:
            kw["mirror_zeta"] = zeta_for_finesse(f)
        except DomainError as exc:
            ctx.fail(path, str(exc))
    if kind == "custom":
        path = ppath + (seen.get("elements", "elements"),)
        kw["elements"] = _parse_elements(ctx, path, params.get(seen.get("elements", "elements")))

    # detunings in Gamma or kappa need the rest of the scenario first
    try:
        base = cls(**kw)
    except (DomainError, TypeError) as exc:
        _fail_field(ctx, ppath, seen, keys, exc)
    for fld, (path, value, qkind) in late.items():
        kw[fld] = _quantity(ctx, path, value, qkind, base)
    try:
        return cls(**kw)
    except (DomainError, TypeError) as exc:
        _fail_field(ctx, ppath, seen, keys, exc)


def _fail_field(ctx, ppath, seen, keys, exc):
    msg = str(exc)
    for k, key in seen.items():
        fld = keys.get(k, (k,))[0]
        if fld in msg or k in msg:
            ctx.fail(ppath + (key,), msg)
    ctx.fail(ppath or ("scenario",), msg)


def _parse_elements(ctx, path, items):
    if not isinstance(items, list) or not items:
        ctx.fail(path, "custom stack needs a non-empty list of elements")
    out = []
    for i, it in enumerate(items):
        p = path + (i,)
        if not isinstance(it, dict):
            ctx.fail(p, "element must be a mapping with kind, position and (for mirrors) zeta")
        bad = set(it) - {"kind", "position", "zeta"}
        if bad:
            ctx.fail(p + (sorted(bad)[0],), "unknown key")
        z = it.get("zeta")
        if z is not None:
            try:
                z = complex(str(z).replace(" ", ""))
            except ValueError:
                ctx.fail(p + ("zeta",), f"cannot read complex zeta {z!r}")
        try:
            out.append(ElementSpec(it.get("kind", "mirror"), _quantity(ctx, p + ("position",), it.get("position"),
                                                                       "length"), z))
        except DomainError as exc:
            ctx.fail(p, str(exc))
    return tuple(out)


def _check_keys(ctx, path, block, allowed):
    if not isinstance(block, dict):
        ctx.fail(path, "expected a mapping")
    for k in block:
        if k not in allowed:
            ctx.fail(path + (k,), f"unknown key {k!r}")


def _parse_sweep(ctx, block, scenario):
    path = ("sweep",)
    _check_keys(ctx, path, block, {"axis", "lo", "hi", "points", "spacing", "observables"})
    axis = block.get("axis")
    if axis not in AXES:
        ctx.fail(path + ("axis",), f"unknown axis {axis!r}; expected one of {AXES}")
    kind = AXIS_KIND[axis]
    lo = _quantity(ctx, path + ("lo",), block.get("lo"), kind, scenario)
    hi = _quantity(ctx, path + ("hi",), block.get("hi"), kind, scenario)
    obs = block.get("observables", ["friction"])
    if isinstance(obs, str):
        obs = [obs]
    try:
        return SweepSpec(axis, lo, hi, block.get("points", 64), block.get("spacing", "linear"), tuple(obs))
    except DomainError as exc:
        ctx.fail(path, str(exc))


def _parse_average(ctx, block):
    path = ("average",)
    block = block or {}
    _check_keys(ctx, path, block, {"observable", "points"})
    obs = block.get("observable", "friction")
    if obs not in OBSERVABLES:
        ctx.fail(path + ("observable",), f"unknown observable {obs!r}")
    pts = block.get("points", 128)
    if not isinstance(pts, int) or pts < 128:
        ctx.fail(path + ("points",), "wavelength averages need an integer number of points >= 128")
    return AverageSpec(obs, pts)


def _parse_optimize(ctx, block, scenario):
    path = ("optimize",)
    block = block or {}
    _check_keys(ctx, path, block, {"axes", "objective", "sense", "bounds", "grid"})
    axes = block.get("axes", ["detuning", "position"])
    if isinstance(axes, str):
        axes = [axes]
    for a in axes:
        if a not in AXES:
            ctx.fail(path + ("axes",), f"unknown axis {a!r}")
    if not 1 <= len(axes) <= 2:
        ctx.fail(path + ("axes",), "one or two axes")
    bounds = []
    bblock = block.get("bounds") or {}
    _check_keys(ctx, path + ("bounds",), bblock, set(axes))
    for a, v in bblock.items():
        if not isinstance(v, list) or len(v) != 2:
            ctx.fail(path + ("bounds", a), "bounds must be a [lo, hi] pair")
        lo = _quantity(ctx, path + ("bounds", a, 0), v[0], AXIS_KIND[a], scenario)
        hi = _quantity(ctx, path + ("bounds", a, 1), v[1], AXIS_KIND[a], scenario)
        if not lo < hi:
            ctx.fail(path + ("bounds", a), "need lo < hi")
        bounds.append((a, lo, hi))
    for a in axes:
        if a != "position" and a not in bblock:
            ctx.fail(path + ("bounds",), f"axis {a!r} needs bounds")
    grid = block.get("grid")
    if grid is not None:
        grid = tuple(grid) if isinstance(grid, list) else (grid,) * len(axes)
        if len(grid) != len(axes) or not all(isinstance(g, int) and g >= 3 for g in grid):
            ctx.fail(path + ("grid",), "grid must give an integer >= 3 per axis")
    sense = block.get("sense", "max")
    if sense not in ("max", "min"):
        ctx.fail(path + ("sense",), "sense must be 'max' or 'min'")
    objective = block.get("objective", "-friction")
    name = str(objective).lstrip("-")
    if name.startswith("averaged_"):
        name = name[len("averaged_"):]
    if name not in OBSERVABLES:
        ctx.fail(path + ("objective",), f"unknown objective {objective!r}")
    return OptimizeSpec(tuple(axes), objective, sense, tuple(bounds), grid)


def _parse_solve(ctx, block):
    path = ("solve",)
    block = block or {}
    _check_keys(ctx, path, block, {"observables"})
    obs = block.get("observables")
    if obs is not None:
        obs = (obs,) if isinstance(obs, str) else tuple(obs)
        for o in obs:
            if o not in OBSERVABLES:
                ctx.fail(path + ("observables",), f"unknown observable {o!r}")
    return SolveSpec(obs)


def _parse_output(ctx, block):
    path = ("output",)
    _check_keys(ctx, path, block, {"path", "format", "precision"})
    try:
        return OutputSpec(block.get("path"), block.get("format", "csv"), block.get("precision", 17))
    except DomainError as exc:
        ctx.fail(path, str(exc))


# ---------------------------------------------------------------------------
# serialization


def _fmt(v, kind):
    kind = kind.rstrip("?")
    if v is None:
        return None
    if kind in ("bool", "str", "int"):
        return v
    if kind == "number":
        return float(v)
    return f"{float(v)!r} {SI_UNIT[kind]}"


def serialize(config: RunConfig) -> str:
    """YAML text that parses back to an identical ``RunConfig``."""
    s = config.scenario
    kind = s.kind
    keys = KEYS[kind]
    block = {"type": kind}
    for k, (fld, qkind) in keys.items():
        block[k] = _fmt(getattr(s, fld), qkind)
    if kind == "custom":
        block["elements"] = [{"kind": e.kind, "position": _fmt(e.position, "length"),
                              **({"zeta": repr(e.zeta)} if e.zeta is not None else {})} for e in s.elements]
    doc = {"scenario": block}
    if config.sweep is not None:
        sw = config.sweep
        k = AXIS_KIND[sw.axis]
        doc["sweep"] = {"axis": sw.axis, "lo": _fmt(sw.lo, k), "hi": _fmt(sw.hi, k), "points": int(sw.points),
                        "spacing": sw.spacing, "observables": list(sw.observables)}
    if config.average is not None:
        doc["average"] = {"observable": config.average.observable, "points": config.average.points}
    if config.optimize is not None:
        o = config.optimize
        d = {"axes": list(o.axes), "objective": o.objective, "sense": o.sense,
             "bounds": {a: [_fmt(lo, AXIS_KIND[a]), _fmt(hi, AXIS_KIND[a])] for a, lo, hi in o.bounds}}
        if o.grid is not None:
            d["grid"] = list(o.grid)
        doc["optimize"] = d
    if config.solve is not None:
        doc["solve"] = {"observables": None if config.solve.observables is None else list(config.solve.observables)}
    out = config.output
    doc["output"] = {"path": out.path, "format": out.format, "precision": out.precision}
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)
