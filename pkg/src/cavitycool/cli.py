"""Command-line entry point: ``cavitycool solve|scan|average|optimize|reproduce``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import reproduce
from .config import OutputSpec, RunConfig, parse_config
from .dynamics import DIFFUSION_MODEL
from .errors import CavityCoolError, ConfigError, DomainError, HeatingError
from .scenarios import budget_saturation, build, unchecked_stack
from .sweeps import (KAPPA_CONVENTION, SweepSpec, average_over_wavelength, evaluate, find_optimum,
                     metadata_for, scan)
from .tables import OutputTable

UNITS = {"force": "N", "friction": "N s/m", "diffusion": "kg^2 m^2 s^-3", "temperature": "K",
         "saturation": "", "cooling_time": "s", "spring": "N/m", "intensity": "W/m^2",
         "diffusion_vacuum": "kg^2 m^2 s^-3", "diffusion_recoil": "kg^2 m^2 s^-3",
         "position": "m", "detuning": "rad/s", "waist": "m", "cavity_length": "m", "finesse": "", "power": "W"}
SOLVE_COLUMNS = ("force", "friction", "spring", "diffusion", "diffusion_vacuum", "diffusion_recoil",
                 "temperature", "cooling_time", "saturation", "intensity")


class UsageError(CavityCoolError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cavitycool", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--output", help="write the table here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), help="output format (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    common.add_argument("--seed", type=int, help="accepted for interface stability; every computation is deterministic")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, hlp in (("solve", "one configuration: force, friction, diffusion, temperature"),
                      ("scan", "grid scan described by the sweep block"),
                      ("average", "wavelength average described by the average block"),
                      ("optimize", "optimum search described by the optimize block")):
        sub.add_parser(name, parents=[common], help=hlp)
    r = sub.add_parser("reproduce", parents=[common], help="built-in reference computations")
    r.add_argument("target", choices=sorted(reproduce.TARGETS))
    return p


def _load(path) -> RunConfig:
    if path is None:
        return parse_config("scenario: inside\n")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    return parse_config(text)


def _meta(config: RunConfig, command: str) -> dict:
    m = metadata_for(config.scenario)
    m["command"] = command
    return m


def run(config: RunConfig, command: str, workers: int = 1) -> OutputTable:
    """Execute ``command`` for ``config`` and return the result table."""
    s = config.scenario.resolved()
    if command == "solve":
        want = config.solve.observables if config.solve and config.solve.observables else SOLVE_COLUMNS
        build(s)  # saturation budget
        data, skipped, reasons = evaluate([s], tuple(want), enforce_saturation=False)
        if skipped[0]:
            raise DomainError(reasons[0])
        if "temperature" in want and np.isnan(data["temperature"][0]):
            if config.solve and config.solve.observables:
                raise HeatingError("heating: temperature undefined because friction >= 0 "
                                   "(k_B T = -D / (F1/v) holds only for a cooling force)")
        cols = list(want) + ["budget_saturation"]
        t = OutputTable(cols, [UNITS.get(c, "") for c in cols], metadata=_meta(config, command))
        t.add(*[float(data[c][0]) for c in want], budget_saturation(s))
        return t
    if command == "scan":
        if config.sweep is None:
            raise ConfigError("the scan command needs a sweep block")
        sw = config.sweep
        res = scan(s, sw, workers=workers)
        obs = list(sw.observables)
        cols = [sw.axis] + obs + (["friction_per_power"] if "friction" in obs else []) + ["saturation", "skipped"]
        units = [UNITS[sw.axis]] + [UNITS[o] for o in obs] + (["N s/m/W"] if "friction" in obs else []) + ["", ""]
        meta = _meta(config, command)
        meta.update({k: v for k, v in res.metadata.items() if k not in meta})
        t = OutputTable(cols, units, metadata=meta)
        fpp = res.per_power("friction") if "friction" in obs else None
        for i, v in enumerate(res.values):
            row = [float(v)] + [float(res.data[o][i]) for o in obs]
            if fpp is not None:
                row.append(float(fpp[i]))
            row += [float(res.data["saturation"][i]), int(res.skipped[i])]
            t.add(*row)
        return t
    if command == "average":
        a = config.average
        if a is None:
            raise ConfigError("the average command needs an average block")
        v = average_over_wavelength(s, a.observable, a.points)
        t = OutputTable([f"averaged_{a.observable}"], [UNITS.get(a.observable, "")], metadata=_meta(config, command))
        t.add(float(v))
        return t
    if command == "optimize":
        o = config.optimize
        if o is None:
            raise ConfigError("the optimize command needs an optimize block")
        bounds = {a: (lo, hi) for a, lo, hi in o.bounds}
        res = find_optimum(s, o.axes, o.objective, bounds, o.grid, o.sense)
        cols = list(o.axes) + ["objective"]
        t = OutputTable(cols, [UNITS[a] for a in o.axes] + [""], metadata=_meta(config, command))
        t.metadata["objective"] = o.objective
        t.add(*[res.location[a] for a in o.axes], float(res.value))
        return t
    raise UsageError(f"unknown command {command!r}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "reproduce":
            table = reproduce.TARGETS[args.target](workers=args.threads)
            out = OutputSpec(args.output, args.format or "csv")
        else:
            config = _load(args.config)
            table = run(config, args.command, workers=max(1, args.threads))
            out = replace(config.output, path=args.output or config.output.path,
                          format=args.format or config.output.format)
        text = table.render(out.format, out.precision)
        if out.path:
            with open(out.path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    except (UsageError, ConfigError) as exc:
        print(f"cavitycool: error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"cavitycool: physics domain error: {exc}", file=sys.stderr)
        return 2
    except CavityCoolError as exc:
        print(f"cavitycool: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
