"""Grid scans, wavelength averages, optimum search and scaling fits."""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import optimize
from scipy.constants import k as k_B

from .dynamics import DIFFUSION_MODEL, ModulationProbe, respond_batch
from .errors import DomainError, HeatingError, OptimizationError, SweepError
from .scenarios import CustomScenario, InsideScenario, OutsideScenario, budget_saturation, unchecked_stack

AXES = ("position", "detuning", "waist", "cavity_length", "finesse", "power")
OBSERVABLES = ("force", "friction", "diffusion", "temperature", "saturation", "cooling_time", "spring",
               "intensity", "diffusion_vacuum", "diffusion_recoil")
#: reference distance between the atom and the pumped mirror outside the cavity
OUTSIDE_BASE_DISTANCE = 100e-6
KAPPA_CONVENTION = "kappa = HWHM, angular frequency (s^-1)"


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    lo: float
    hi: float
    points: int = 64
    spacing: str = "linear"
    observables: tuple[str, ...] = ("friction",)

    def __post_init__(self):
        object.__setattr__(self, "observables", tuple(self.observables))
        if self.axis not in AXES:
            raise DomainError(f"unknown sweep axis {self.axis!r}; expected one of {AXES}")
        if not self.lo < self.hi:
            raise DomainError(f"sweep range needs lo < hi, got [{self.lo!r}, {self.hi!r}]")
        if int(self.points) != self.points or self.points < 2:
            raise DomainError(f"sweep needs at least 2 points, got {self.points!r}")
        if self.spacing not in ("linear", "log"):
            raise DomainError(f"spacing must be 'linear' or 'log', got {self.spacing!r}")
        if self.spacing == "log" and self.lo <= 0:
            raise DomainError("log spacing needs a positive range")
        bad = [o for o in self.observables if o not in OBSERVABLES]
        if bad or not self.observables:
            raise DomainError(f"unknown observables {bad}; expected a subset of {OBSERVABLES}")

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, int(self.points))
        return np.linspace(self.lo, self.hi, int(self.points))


@dataclass
class SweepResult:
    axis: str
    values: np.ndarray
    data: dict[str, np.ndarray]
    skipped: np.ndarray
    reasons: list[str]
    metadata: dict = field(default_factory=dict)

    def per_power(self, observable: str = "friction") -> np.ndarray:
        return self.data[observable] / self.data["power"]

    def __len__(self):
        return len(self.values)


def fingerprint(scenario) -> str:
    d = {k: (repr(v) if isinstance(v, float) else v) for k, v in scenario.to_dict().items()}
    d["kind"] = scenario.kind
    return hashlib.sha256(json.dumps(d, sort_keys=True, default=repr).encode()).hexdigest()[:16]


def metadata_for(scenario) -> dict:
    s = scenario.resolved()
    return {
        "scenario": s.kind,
        "fingerprint": fingerprint(s),
        "kappa_convention": KAPPA_CONVENTION,
        "kappa": s.kappa,
        "gamma": s.gamma,
        "pump_detuning_rad_s": s.pump_detuning,
        "pump_detuning_kappa": s.pump_detuning / s.kappa,
        "pump_detuning_gamma": s.pump_detuning / s.gamma,
        "atom_detuning_gamma": s.atom_detuning / s.gamma,
        "diffusion_model": DIFFUSION_MODEL,
    }


# ---------------------------------------------------------------------------
# axis plumbing


def position_field(scenario) -> str:
    return "atom_position" if isinstance(scenario, InsideScenario) else "atom_distance"


def with_axis(scenario, axis: str, value: float):
    if isinstance(scenario, CustomScenario):
        if axis == "position":
            els = list(scenario.elements)
            els[scenario.mobile_index] = replace(els[scenario.mobile_index], position=float(value))
            return replace(scenario, elements=tuple(els))
        if axis in ("waist", "power"):
            return replace(scenario, **{"waist" if axis == "waist" else "pump_power": float(value)})
        raise DomainError(f"axis {axis!r} is not available for a custom stack")
    if axis == "position":
        return replace(scenario, **{position_field(scenario): float(value)})
    if axis == "detuning":
        return replace(scenario, pump_detuning=float(value))
    if axis == "waist":
        return replace(scenario, waist=float(value))
    if axis == "cavity_length":
        return replace(scenario, cavity_length=float(value))
    if axis == "finesse":
        return scenario.with_finesse(float(value))
    if axis == "power":
        return replace(scenario, pump_power=float(value))
    raise DomainError(f"unknown axis {axis!r}")


def pump_wavelength(scenario) -> float:
    s = scenario.resolved()
    return 2 * np.pi / s.pump_k(s.pump_detuning)


def position_window(scenario, span: float = 0.5) -> tuple[float, float]:
    """Default window of ``span`` wavelengths for position optimization."""
    lam = pump_wavelength(scenario)
    if isinstance(scenario, CustomScenario):
        x = scenario.mobile_position
        return x - span * lam / 2, x + span * lam / 2
    if isinstance(scenario, InsideScenario):
        mid = scenario.cavity_length / 2
        return mid - span * lam / 2, mid + span * lam / 2
    return OUTSIDE_BASE_DISTANCE, OUTSIDE_BASE_DISTANCE + span * lam


# ---------------------------------------------------------------------------
# evaluation


def evaluate(scenarios: Sequence, observables=OBSERVABLES, probe: ModulationProbe | None = None,
             enforce_saturation: bool = True, workers: int = 1, chunk: int = 512):
    """Evaluate fully resolved scenarios; returns (data, skipped, reasons)."""
    n = len(scenarios)
    want_f = any(o in ("friction", "temperature", "cooling_time", "spring") for o in observables)
    want_d = any(o in ("diffusion", "temperature", "diffusion_vacuum", "diffusion_recoil") for o in observables)
    keys = set(observables) | {"saturation"}
    data = {o: np.full(n, np.nan) for o in keys}
    data["power"] = np.array([s.pump_power for s in scenarios], float)
    skipped = np.zeros(n, bool)
    reasons = [""] * n

    stacks = []
    for i, s in enumerate(scenarios):
        try:
            stacks.append(unchecked_stack(s))
        except DomainError as exc:
            stacks.append(None)
            skipped[i] = True
            reasons[i] = str(exc)

    live = [i for i in range(n) if stacks[i] is not None]
    groups = [live[j:j + chunk] for j in range(0, len(live), chunk)]

    def run(idx):
        return idx, respond_batch([stacks[i] for i in idx], probe, friction=want_f, diffusion=want_d)

    if workers > 1 and len(groups) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, groups))
    else:
        results = [run(g) for g in groups]

    for idx, r in results:
        idx = np.array(idx)
        for o in keys:
            if o in r:
                data[o][idx] = r[o]
        if want_f:
            bad = ~r["converged"]
            for i, b in zip(idx, bad):
                if b:
                    skipped[i] = True
                    reasons[i] = "friction extrapolation did not converge"
    if enforce_saturation:
        for i, s in enumerate(scenarios):
            if skipped[i] or s.s_max is None:
                continue
            sb = data["saturation"][i] if s.saturation_rule == "local" else budget_saturation(s)
            if sb > s.s_max:
                skipped[i] = True
                reasons[i] = f"saturation {sb:.4g} exceeds {s.s_max:.4g}"
    for o in keys:
        data[o][skipped] = np.nan
    return data, skipped, reasons


def scan(scenario, spec: SweepSpec, probe: ModulationProbe | None = None, enforce_saturation: bool = True,
         workers: int = 1) -> SweepResult:
    """Evaluate ``spec.observables`` at every grid point of ``spec.axis``."""
    base = scenario.resolved()
    vals = spec.values()
    pts = []
    pre_skip = {}
    for i, v in enumerate(vals):
        try:
            pts.append(with_axis(base, spec.axis, v))
        except DomainError as exc:
            pts.append(None)
            pre_skip[i] = str(exc)
    ok = [i for i, p in enumerate(pts) if p is not None]
    data = {o: np.full(len(vals), np.nan) for o in set(spec.observables) | {"saturation"}}
    data["power"] = np.array([p.pump_power if p is not None else np.nan for p in pts])
    skipped = np.ones(len(vals), bool)
    reasons = [pre_skip.get(i, "") for i in range(len(vals))]
    if ok:
        d, sk, rs = evaluate([pts[i] for i in ok], spec.observables, probe, enforce_saturation, workers)
        for o in data:
            data[o][ok] = d[o]
        skipped[ok] = sk
        for j, i in enumerate(ok):
            reasons[i] = rs[j]
    if np.all(skipped):
        raise SweepError(f"all {len(vals)} sweep points failed; first reason: {reasons[0]}")
    meta = metadata_for(base)
    meta.update(axis=spec.axis, points=int(spec.points), saturation_enforced=bool(enforce_saturation))
    return SweepResult(spec.axis, vals, data, skipped, reasons, meta)


# ---------------------------------------------------------------------------
# averaging


def _position_of(s) -> float:
    if isinstance(s, CustomScenario):
        return s.mobile_position
    return s.atom_position if isinstance(s, InsideScenario) else s.atom_distance


def wavelength_samples(scenario, points: int = 128, observables=("friction", "diffusion"),
                       probe: ModulationProbe | None = None):
    base = scenario.resolved()
    lam = pump_wavelength(base)
    x0 = _position_of(base)
    xs = x0 + lam * np.arange(points) / points
    pts = [with_axis(base, "position", x) for x in xs]
    data, skipped, reasons = evaluate(pts, observables, probe, enforce_saturation=False)
    if np.any(skipped):
        raise SweepError(f"wavelength average failed: {next(r for r in reasons if r)}")
    return xs, data


def average_over_wavelength(scenario, observable: str = "friction", points: int = 128,
                            probe: ModulationProbe | None = None) -> float:
    """Uniform average over one wavelength of atom position (periodic trapezoid rule).

    The saturation budget is not applied to the individual samples.  The mean
    is recomputed on a doubled grid and must agree to within 1%.
    """
    if points < 128:
        raise DomainError("wavelength averages use at least 128 points")
    if observable in ("temperature", "cooling_time"):
        need = ("friction", "diffusion")
    else:
        need = (observable,)
    means = []
    for n in (points, 2 * points):
        _, data = wavelength_samples(scenario, n, need, probe)
        means.append({o: float(np.mean(data[o])) for o in need})
        scale = {o: float(np.max(np.abs(data[o]))) for o in need}
    for o in need:
        a, b = means[0][o], means[1][o]
        if abs(a - b) > 0.01 * abs(b) + 1e-9 * scale[o]:
            raise SweepError(f"wavelength average of {o} not converged: {a:.6e} vs {b:.6e}")
    m = means[1]
    if observable == "temperature":
        if not m["friction"] < 0:
            raise HeatingError(f"heating: averaged friction {m['friction']:.4g} >= 0, temperature undefined")
        return m["diffusion"] / (k_B * abs(m["friction"]))
    if observable == "cooling_time":
        if not m["friction"] < 0:
            raise HeatingError("heating: averaged friction is not negative, no cooling time")
        return scenario.mass / abs(m["friction"])
    return m[observable]


# ---------------------------------------------------------------------------
# optimization


@dataclass(frozen=True)
class OptimumResult:
    location: dict
    value: float
    evaluations: int = 0

    def __getitem__(self, i):
        return (self.location, self.value)[i]


def _objective_values(scenario, axes, pts, objective, probe) -> np.ndarray:
    if callable(objective):
        if scenario is None:
            return np.array([objective(dict(zip(axes, p))) for p in pts], float)
        return np.array([objective(_apply(scenario, axes, p)) for p in pts], float)
    name = objective.lstrip("-")
    sign = -1.0 if objective.startswith("-") else 1.0
    if name.startswith("averaged_"):
        obs = name[len("averaged_"):]
        vals = []
        for p in pts:
            try:
                vals.append(average_over_wavelength(_apply(scenario, axes, p), obs, probe=probe))
            except (HeatingError, SweepError):
                vals.append(np.nan)
        return sign * np.array(vals)
    sc = [_apply(scenario, axes, p) for p in pts]
    data, skipped, _ = evaluate(sc, (name,), probe, enforce_saturation=False)
    return sign * data[name]


def _apply(scenario, axes, p):
    s = scenario
    for a, v in zip(axes, p):
        s = with_axis(s, a, v)
    return s


def find_optimum(scenario, axes: Sequence[str], objective: str | Callable = "-friction",
                 bounds: Mapping[str, tuple[float, float]] | None = None, grid: int | Sequence[int] | None = None,
                 sense: str = "max", probe: ModulationProbe | None = None, xatol: float = 1e-9) -> OptimumResult:
    """Maximize (or minimize) an objective over one or two scenario parameters.

    A coarse grid is evaluated first; the best cell is then refined with
    bounded Brent/golden-section line searches, alternating between axes for
    two-parameter problems.  ``objective`` is an observable name (prefix
    ``-`` to negate, ``averaged_`` to average over a wavelength first) or a
    callable taking the modified scenario (or a dict of values when
    ``scenario`` is None).  The saturation budget is not applied.
    """
    axes = tuple(axes)
    if not 1 <= len(axes) <= 2:
        raise DomainError("find_optimum supports one or two axes")
    if sense not in ("max", "min"):
        raise DomainError(f"sense must be 'max' or 'min', got {sense!r}")
    if scenario is not None:
        scenario = scenario.resolved()
    bounds = dict(bounds or {})
    for a in axes:
        if a not in bounds:
            if a == "position" and scenario is not None:
                bounds[a] = position_window(scenario)
            else:
                raise DomainError(f"no bounds given for axis {a!r}")
    if grid is None:
        grid = (41,) if len(axes) == 1 else (25, 25)
    grid = (grid,) * len(axes) if np.isscalar(grid) else tuple(grid)
    sgn = 1.0 if sense == "max" else -1.0

    def f(pts):
        return sgn * _objective_values(scenario, axes, pts, objective, probe)

    axes_vals = [np.linspace(*bounds[a], n) for a, n in zip(axes, grid)]
    mesh = np.meshgrid(*axes_vals, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = f(pts)
    nevals = len(pts)
    finite = np.isfinite(vals)
    if not finite.any():
        raise OptimizationError("objective undefined on the whole grid")
    vmax, vmin = np.nanmax(vals), np.nanmin(vals)
    if vmax - vmin <= 1e-12 * max(abs(vmax), abs(vmin), 1e-300):
        raise OptimizationError(f"objective is flat over the grid (range {vmax - vmin:.3e})")
    best = pts[int(np.nanargmax(vals))].copy()
    steps = [v[1] - v[0] for v in axes_vals]
    best_val = float(np.nanmax(vals))

    rounds = 1 if len(axes) == 1 else 4
    for _ in range(rounds):
        for j, a in enumerate(axes):
            lo = max(bounds[a][0], best[j] - steps[j])
            hi = min(bounds[a][1], best[j] + steps[j])

            def line(u, j=j):
                p = best.copy()
                p[j] = u
                v = f(p[None, :])[0]
                return -v if np.isfinite(v) else np.inf

            scale = hi - lo
            res = optimize.minimize_scalar(lambda t: line(lo + t * scale), bounds=(0.0, 1.0), method="bounded",
                                           options={"xatol": xatol})
            nevals += res.nfev
            if -res.fun >= best_val:
                best[j] = lo + res.x * scale
                best_val = float(-res.fun)
    return OptimumResult(dict(zip(axes, map(float, best))), sgn * best_val, nevals)


def peak_position(scenario, objective: str = "-friction", probe: ModulationProbe | None = None,
                  grid: int = 64) -> OptimumResult:
    """Atom position maximizing ``objective`` within half a wavelength."""
    return find_optimum(scenario, ("position",), objective, {"position": position_window(scenario)}, grid,
                        probe=probe)


def cooling_optimum(scenario: InsideScenario, detuning_bounds_kappa=(-5.0, -0.3), probe=None) -> OptimumResult:
    """Inside optimum: the detuning that maximizes the wavelength-averaged cooling,
    then the position of strongest cooling at that detuning."""
    kap = scenario.kappa
    b = (detuning_bounds_kappa[0] * kap, detuning_bounds_kappa[1] * kap)
    det = find_optimum(scenario, ("detuning",), "-averaged_friction", {"detuning": b}, grid=24, probe=probe,
                       xatol=1e-4)
    s = with_axis(scenario.resolved(), "detuning", det.location["detuning"])
    pos = peak_position(s, probe=probe)
    loc = {"detuning": det.location["detuning"], "position": pos.location["position"]}
    return OptimumResult(loc, pos.value, det.evaluations + pos.evaluations)


def joint_optimum(scenario, detuning_bounds_kappa=(-5.0, 5.0), probe=None, grid=(41, 32)) -> OptimumResult:
    """Strongest cooling over pump detuning and atom position jointly."""
    kap = scenario.kappa
    s = scenario
    if isinstance(s, OutsideScenario) and s.atom_distance is None:
        s = replace(s, atom_distance=OUTSIDE_BASE_DISTANCE)
    if s.pump_detuning is None:
        s = replace(s, pump_detuning=-kap)
    s = s.resolved()
    b = {"detuning": (detuning_bounds_kappa[0] * kap, detuning_bounds_kappa[1] * kap),
         "position": position_window(s)}
    return find_optimum(s, ("detuning", "position"), "-friction", b, grid, probe=probe)


def optimize_outside(scenario: OutsideScenario) -> OutsideScenario:
    """Fill an unset detuning and/or distance with the friction optimum."""
    s = scenario
    kap = s.kappa
    if s.pump_detuning is None and s.atom_distance is None:
        opt = joint_optimum(s)
        return replace(s, pump_detuning=opt.location["detuning"], atom_distance=opt.location["position"])
    if s.pump_detuning is None:
        opt = find_optimum(replace(s, pump_detuning=kap), ("detuning",), "-friction",
                           {"detuning": (-5 * kap, 5 * kap)}, grid=81)
        return replace(s, pump_detuning=opt.location["detuning"])
    s = replace(s, atom_distance=OUTSIDE_BASE_DISTANCE)
    opt = peak_position(s)
    return replace(s, atom_distance=opt.location["position"])


# ---------------------------------------------------------------------------
# scaling and localisation


def loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    ok = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
    if ok.sum() < 2:
        raise DomainError("slope fit needs at least two positive points")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def scaling_scan(scenario, axis: str, values: Sequence[float], observable: str = "friction",
                 reoptimize: str = "position", probe: ModulationProbe | None = None,
                 min_finesse: float = 1e3) -> tuple[SweepResult, float]:
    """Peak response versus ``axis`` with the optimum re-located at every point.

    The pump detuning is held fixed in units of kappa.  ``reoptimize`` is
    ``"position"`` or ``"all"`` (inside: averaged-optimal detuning then
    position; outside: joint detuning and position).  Returns the sweep and
    the least-squares slope of ``log |observable|`` against ``log(axis)``.
    """
    if axis not in ("cavity_length", "finesse", "waist"):
        raise DomainError(f"scaling scans run over cavity_length, finesse or waist, not {axis!r}")
    if reoptimize not in ("position", "all"):
        raise DomainError("reoptimize must be 'position' or 'all'")
    base = scenario.resolved()
    det_kappa = base.pump_detuning / base.kappa
    vals = np.asarray(values, float)
    out = {k: np.full(len(vals), np.nan) for k in ("friction", "diffusion", "temperature", "position",
                                                  "detuning", "kappa", "finesse", "power", "saturation")}
    skipped = np.zeros(len(vals), bool)
    reasons = [""] * len(vals)
    for i, v in enumerate(vals):
        s = with_axis(replace(base, pump_detuning=None, **{position_field(base): None}), axis, v)
        fig = s.figures()
        if fig.finesse < min_finesse:
            skipped[i] = True
            reasons[i] = f"finesse {fig.finesse:.4g} below good-cavity threshold {min_finesse:g}"
        s = replace(s, pump_detuning=det_kappa * fig.kappa)
        if isinstance(s, OutsideScenario):
            s = replace(s, atom_distance=OUTSIDE_BASE_DISTANCE)
        if reoptimize == "all":
            if isinstance(s, InsideScenario):
                opt = cooling_optimum(s, probe=probe)
            else:
                opt = joint_optimum(s, probe=probe)
            s = with_axis(s, "detuning", opt.location["detuning"])
            s = with_axis(s, "position", opt.location["position"])
        else:
            s = s.resolved()
            opt = peak_position(s, probe=probe)
            s = with_axis(s, "position", opt.location["position"])
        d, sk, rs = evaluate([s], ("friction", "diffusion", "temperature", "saturation"), probe,
                             enforce_saturation=False)
        for k in ("friction", "diffusion", "temperature", "saturation"):
            out[k][i] = d[k][0]
        out["position"][i] = _position_of(s)
        out["detuning"][i] = s.pump_detuning
        out["kappa"][i] = fig.kappa
        out["finesse"][i] = fig.finesse
        out["power"][i] = s.pump_power
        if sk[0]:
            skipped[i] = True
            reasons[i] = rs[0]
    x = out["finesse"] if axis == "finesse" else vals
    use = ~skipped
    slope = loglog_slope(x[use], np.abs(out[observable][use]))
    meta = metadata_for(base)
    meta.update(axis=axis, reoptimize=reoptimize, slope=slope, observable=observable)
    return SweepResult(axis, vals, out, skipped, reasons, meta), slope


def zero_crossings(x, y) -> np.ndarray:
    x, y = np.asarray(x, float), np.asarray(y, float)
    i = np.nonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0)[0]
    return x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i])


def feature_width(x, friction) -> float:
    """Distance between the zero crossings that bracket the strongest cooling sample."""
    x, f = np.asarray(x, float), np.asarray(friction, float)
    zc = zero_crossings(x, f)
    xm = x[int(np.nanargmin(f))]
    left = zc[zc < xm]
    right = zc[zc > xm]
    if not len(left) or not len(right):
        raise DomainError("cooling peak is not bracketed by zero crossings within the scan")
    return float(right.min() - left.max())
