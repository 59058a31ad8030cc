"""Tabular output: CSV with '#' metadata lines, or JSON."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__


@dataclass
class OutputTable:
    columns: list[str]
    units: list[str]
    rows: list[list] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.columns) != len(self.units):
            raise ValueError("columns and units differ in length")
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"row of length {len(r)} in a table of {len(self.columns)} columns")

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row of length {len(values)} in a table of {len(self.columns)} columns")
        self.rows.append(list(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def full_metadata(self) -> dict:
        return {"code_version": f"cavitycool {__version__}", **self.metadata}

    # -- writers ---------------------------------------------------------
    def to_csv(self, precision: int = 17) -> str:
        lines = [f"# {k}: {_meta(v)}" for k, v in self.full_metadata().items()]
        lines.append(",".join(f"{c} [{u}]" if u else c for c, u in zip(self.columns, self.units)))
        for r in self.rows:
            lines.append(",".join(_cell(v, precision) for v in r))
        return "\n".join(lines) + "\n"

    def to_json(self, precision: int = 17) -> str:
        def conv(v):
            if v is None or (isinstance(v, float) and math.isnan(v)):
                return None
            if isinstance(v, (bool, np.bool_)):
                return bool(v)
            if isinstance(v, (int, np.integer)):
                return int(v)
            if isinstance(v, (float, np.floating)):
                return float(f"{float(v):.{precision - 1}e}")
            return v

        doc = {"metadata": {k: _jsonable(v) for k, v in self.full_metadata().items()},
               "columns": [{"name": c, "unit": u} for c, u in zip(self.columns, self.units)],
               "rows": [[conv(v) for v in r] for r in self.rows]}
        return json.dumps(doc, indent=1, allow_nan=False) + "\n"

    def render(self, fmt: str = "csv", precision: int = 17) -> str:
        return self.to_json(precision) if fmt == "json" else self.to_csv(precision)


def _cell(v, precision):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return ""
        return f"{float(v):.{precision - 1}e}"
    s = str(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def _meta(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        return None if math.isnan(v) else float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v
