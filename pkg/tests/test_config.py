import pytest

from cavitycool.config import parse_config, serialize
from cavitycool.errors import ConfigError
from cavitycool.scenarios import InsideScenario, OutsideScenario

FULL = """
scenario: inside
power: 1.5 pW
detuning: -2 kappa
position: 247.6 um
waist: 30 um
sweep:
  axis: position
  lo: 247.5 um
  hi: 248.3 um
  points: 5
  observables: [friction, temperature]
output:
  format: json
  precision: 12
"""


def test_units_and_kappa():
    c = parse_config(FULL)
    assert isinstance(c.scenario, InsideScenario)
    assert c.scenario.pump_power == pytest.approx(1.5e-12)
    assert c.scenario.pump_detuning / c.scenario.kappa == pytest.approx(-2.0)
    assert c.scenario.atom_position == pytest.approx(247.6e-6)
    assert c.sweep.points == 5 and c.sweep.lo == pytest.approx(247.5e-6)
    assert c.output.format == "json" and c.output.precision == 12


def test_round_trip():
    c = parse_config(FULL)
    assert parse_config(serialize(c)) == c


def test_nested_form_and_gamma_units():
    c = parse_config("scenario:\n  type: outside\n  distance: 100 um\n  detuning: 0.5 Gamma\n  power: 0.2 nW\n")
    assert isinstance(c.scenario, OutsideScenario)
    assert c.scenario.pump_detuning == pytest.approx(0.5 * c.scenario.gamma)
    assert parse_config(serialize(c)) == c


def test_custom_elements():
    text = """
scenario:
  type: custom
  mobile: 1
  power: 0.1 pW
  elements:
    - {kind: mirror, position: 0 um, zeta: -20}
    - {kind: atom, position: 30 um}
    - {kind: mirror, position: 60 um, zeta: -20}
"""
    c = parse_config(text)
    assert len(c.scenario.elements) == 3
    assert parse_config(serialize(c)) == c


@pytest.mark.parametrize("text, where", [
    ("power: 2\n", "line 1: power: missing unit"),
    ("scenario: inside\npower: 2 pW\npower: 3 pW\n", "line 3: duplicate key"),
    ("wavelenght: 780 nm\n", "line 1: wavelenght: unknown key"),
    ("sweep:\n  axis: colour\n  lo: 0\n  hi: 1\n", "line 2: sweep.axis"),
    ("power: 2 parsecs\n", "unknown power unit"),
    ("scenario: sideways\n", "unknown scenario"),
    ("output:\n  format: xml\n", "line 1: output"),
    ("- a\n- b\n", "mapping"),
    ("power: [1\n", "invalid YAML"),
])
def test_errors_name_the_line(text, where):
    with pytest.raises(ConfigError, match=where.replace(".", r"\.").replace("(", r"\(")):
        parse_config(text)
