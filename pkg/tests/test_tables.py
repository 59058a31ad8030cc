import json
import math

import pytest

from cavitycool import __version__
from cavitycool.tables import OutputTable


def table():
    t = OutputTable(["x", "friction", "label"], ["m", "N s/m", ""], metadata={"kappa": 1.6990681292056881e7})
    t.add(0.1, -1.4135162182078859e-20, "a,b")
    t.add(0.2, float("nan"), None)
    return t


def test_csv_layout_and_round_trip():
    text = table().to_csv()
    lines = text.splitlines()
    assert lines[0] == f"# code_version: cavitycool {__version__}"
    assert lines[1] == "# kappa: 16990681.29205688"
    assert lines[2] == "x [m],friction [N s/m],label"
    cells = lines[3].split(",", 2)
    assert float(cells[1]) == -1.4135162182078859e-20  # 17 significant digits round-trip
    assert cells[2] == '"a,b"'
    assert lines[4] == "2.0000000000000001e-01,,"


def test_precision():
    assert table().to_csv(precision=9).splitlines()[3].startswith("1.00000000e-01,")


def test_json():
    doc = json.loads(table().to_json())
    assert doc["metadata"]["code_version"].endswith(__version__)
    assert doc["columns"][1] == {"name": "friction", "unit": "N s/m"}
    assert doc["rows"][1][1] is None
    assert doc["rows"][0][1] == -1.4135162182078859e-20


def test_row_length_checked():
    with pytest.raises(ValueError):
        table().add(1.0)
    with pytest.raises(ValueError):
        OutputTable(["a"], [])
    assert math.isnan(table().column("friction")[1])
