"""The two reference configurations: an atom inside and an atom outside a Fabry-Perot cavity."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from functools import lru_cache

import numpy as np
from scipy.constants import c

from .elements import (D2_WAVELENGTH, RB85_GAMMA, RB85_ISAT, RB85_MASS, AtomModel, atom_element,
                       coupling_for_waist, gaussian_mode_area, mirror, zeta_for_finesse)
from .errors import DomainError, SaturationError
from .stack import (CavityFigures, PumpSpec, Stack, batch_fields, characterize_cavity, intensity_at_position,
                    local_saturation, solve_fields)

SATURATION_RULES = ("local", "resonant")

#: default cavity-relative pump detuning inside, in units of kappa
INSIDE_DETUNING_KAPPA = -2.6


@dataclass(frozen=True)
class _CavityScenario:
    cavity_length: float = 495e-6
    mirror_zeta: float = -133.5
    waist: float = 30e-6
    wavelength: float = D2_WAVELENGTH
    gamma: float = RB85_GAMMA
    atom_detuning: float = -10 * RB85_GAMMA
    saturation_intensity: float = RB85_ISAT
    mass: float = RB85_MASS
    coupling: float | None = None  # None: calibrated from the waist
    mode_area: float | None = None  # None: pi w^2 / 4
    pump_power: float = 2e-12
    pump_detuning: float | None = None  # rad/s from the bare cavity resonance
    dispersion: bool = True
    s_max: float | None = 0.14  # None disables the saturation budget
    saturation_rule: str = "local"  # "local" or "resonant", see budget_saturation

    kind = "custom"

    def __post_init__(self):
        for name in ("cavity_length", "waist", "wavelength", "gamma", "saturation_intensity", "mass"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v!r}")
        if not self.pump_power >= 0:
            raise DomainError(f"pump_power must be non-negative, got {self.pump_power!r}")
        if self.mirror_zeta == 0:
            raise DomainError("mirror_zeta = 0 gives no resonator")
        if self.s_max is not None and not 0 < self.s_max:
            raise DomainError(f"s_max must be positive, got {self.s_max!r}")
        if self.saturation_rule not in SATURATION_RULES:
            raise DomainError(f"saturation_rule must be one of {SATURATION_RULES}, got {self.saturation_rule!r}")
        for name in ("coupling", "mode_area"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be positive, got {v!r}")

    # -- cavity ----------------------------------------------------------
    def resonator(self) -> Stack:
        m = (mirror(self.mirror_zeta, 0.0, "mirror1"), mirror(self.mirror_zeta, self.cavity_length, "mirror2"))
        return Stack(m, 0, PumpSpec(self.pump_power, self.area), self.wavelength)

    def figures(self) -> CavityFigures:
        return characterize_cavity(self.resonator())

    @property
    def kappa(self) -> float:
        return self.figures().kappa

    @property
    def area(self) -> float:
        return gaussian_mode_area(self.waist) if self.mode_area is None else self.mode_area

    def atom(self) -> AtomModel:
        cpl = coupling_for_waist(self.waist, self.wavelength) if self.coupling is None else self.coupling
        return AtomModel(gamma=self.gamma, detuning=self.atom_detuning, coupling=cpl,
                         saturation_intensity=self.saturation_intensity, mass=self.mass,
                         wavelength=self.wavelength)

    def pump_k(self, detuning: float) -> float:
        return self.figures().resonance_k + detuning / c

    def with_finesse(self, finesse: float):
        return replace(self, mirror_zeta=zeta_for_finesse(finesse))

    def detuning_in_kappa(self) -> float:
        return self.resolved().pump_detuning / self.kappa

    def resolved(self):
        return self

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class InsideScenario(_CavityScenario):
    """Atom between two identical mirrors, pumped from the left."""

    atom_position: float | None = None  # None: antinode of the empty-cavity mode nearest the centre
    saturation_rule: str = "resonant"

    kind = "inside"

    def __post_init__(self):
        super().__post_init__()
        if self.atom_position is not None and not 0 < self.atom_position < self.cavity_length:
            raise DomainError(f"atom_position {self.atom_position!r} must lie strictly inside (0, {self.cavity_length!r})")

    def resolved(self) -> "InsideScenario":
        s = self
        if s.pump_detuning is None:
            s = replace(s, pump_detuning=INSIDE_DETUNING_KAPPA * s.kappa)
        if s.atom_position is None:
            s = replace(s, atom_position=_central_antinode(s))
        return s


@dataclass(frozen=True)
class OutsideScenario(_CavityScenario):
    """Atom a distance ``atom_distance`` in front of the pumped mirror of the cavity."""

    waist: float = 1e-6
    pump_power: float = 200e-12
    atom_distance: float | None = None  # None: friction optimum (with pump_detuning)

    kind = "outside"

    def __post_init__(self):
        super().__post_init__()
        if self.atom_distance is not None and not self.atom_distance >= 0:
            raise DomainError(f"atom_distance must be non-negative, got {self.atom_distance!r}")

    def resolved(self) -> "OutsideScenario":
        if self.pump_detuning is not None and self.atom_distance is not None:
            return self
        return _resolve_outside(self)


def _central_antinode(s: InsideScenario) -> float:
    k = s.pump_k(s.pump_detuning)
    st = replace(s.resonator(), wavelength=2 * np.pi / k)
    cc, d = batch_fields([st], k, 1.0, 0.0)[0, 0, 2:]
    # |C e^{ikx} + D e^{-ikx}| peaks where 2kx = arg D - arg C (mod 2pi)
    x0 = (np.angle(d) - np.angle(cc)) / (2 * k)
    half = np.pi / k
    return float(x0 + half * np.round((s.cavity_length / 2 - x0) / half))


@lru_cache(maxsize=64)
def _resolve_outside(s: OutsideScenario) -> OutsideScenario:
    from .sweeps import optimize_outside

    return optimize_outside(s)


# ---------------------------------------------------------------------------
# builders


def _unchecked_inside(p: InsideScenario) -> Stack:
    p = p.resolved()
    k = p.pump_k(p.pump_detuning)
    atom = p.atom()
    els = (mirror(p.mirror_zeta, 0.0, "mirror1"),
           atom_element(atom, k, p.atom_position, p.dispersion),
           mirror(p.mirror_zeta, p.cavity_length, "mirror2"))
    pump = PumpSpec(p.pump_power, p.area, "left", p.pump_detuning)
    return Stack(els, 1, pump, 2 * np.pi / k)


def _unchecked_outside(p: OutsideScenario) -> Stack:
    p = p.resolved()
    k = p.pump_k(p.pump_detuning)
    atom = p.atom()
    els = (atom_element(atom, k, -p.atom_distance, p.dispersion),
           mirror(p.mirror_zeta, 0.0, "mirror1"),
           mirror(p.mirror_zeta, p.cavity_length, "mirror2"))
    pump = PumpSpec(p.pump_power, p.area, "left", p.pump_detuning)
    return Stack(els, 0, pump, 2 * np.pi / k)


def unchecked_stack(p) -> Stack:
    """Stack for a scenario without applying the saturation budget."""
    if isinstance(p, InsideScenario):
        return _unchecked_inside(p)
    if isinstance(p, OutsideScenario):
        return _unchecked_outside(p)
    if isinstance(p, CustomScenario):
        return _unchecked_custom(p)
    raise TypeError(f"unknown scenario type {type(p).__name__}")


def atom_saturation(stack: Stack) -> float:
    """Local saturation parameter of the mobile atom from the full solve."""
    return local_saturation(solve_fields(stack), stack.mobile.atom, stack.mobile_index)


def budget_saturation(p, stack: Stack | None = None) -> float:
    """Saturation parameter that the ``s_max`` budget is checked against.

    ``"local"``: the full solve with the atom present, at the scenario's pump
    detuning.  ``"resonant"``: the empty resonator pumped on its bare
    resonance, evaluated at the atom's position.  Because the atom only adds
    loss, the resonant figure bounds the in-cavity local value for every pump
    detuning, so a detuning sweep cannot leave the budget.
    """
    p = p.resolved()
    if p.saturation_rule == "local":
        return atom_saturation(unchecked_stack(p) if stack is None else stack)
    res = p.resonator()
    fig = p.figures()
    res = replace(res, wavelength=2 * np.pi / fig.resonance_k)
    if isinstance(p, CustomScenario):
        raise DomainError("the resonant saturation rule needs a cavity scenario")
    x = p.atom_position if isinstance(p, InsideScenario) else -p.atom_distance
    i_loc = intensity_at_position(res, solve_fields(res), x)
    atom = p.atom()
    return float(i_loc / atom.saturation_intensity * atom.gamma**2 / (atom.detuning**2 + atom.gamma**2))


def _checked(p, stack: Stack) -> Stack:
    if p.s_max is None:
        return stack
    s = budget_saturation(p, stack)
    if s > p.s_max:
        raise SaturationError(
            f"saturation parameter {s:.4g} exceeds the budget {p.s_max:.4g}; "
            f"reduce the pump power by a factor {s / p.s_max:.4g} (to at most {p.pump_power * p.s_max / s:.4g} W)",
            s, p.s_max)
    return stack


def build_inside(p: InsideScenario) -> Stack:
    """[mirror, atom, mirror] with the atom mobile and the pump from the left."""
    return _checked(p, _unchecked_inside(p))


def build_outside(p: OutsideScenario) -> Stack:
    """[atom, mirror, mirror] with the atom mobile in front of the pumped mirror."""
    return _checked(p, _unchecked_outside(p))


def build(p) -> Stack:
    return _checked(p, unchecked_stack(p))


def max_power_for_saturation(p, s_target: float) -> float:
    """Largest pump power keeping the local saturation parameter at or below ``s_target``."""
    if not 0 < s_target < 1:
        raise DomainError(f"s_target must lie in (0, 1), got {s_target!r}")
    ref = 1e-12
    s = budget_saturation(replace(p.resolved(), pump_power=ref))
    if s == 0:
        return float("inf")
    return s_target / s * ref


# ---------------------------------------------------------------------------
# user-defined stacks


@dataclass(frozen=True)
class ElementSpec:
    """One sheet of a custom stack: ``kind`` is "mirror" (fixed zeta) or "atom"."""

    kind: str
    position: float
    zeta: complex | None = None

    def __post_init__(self):
        if self.kind not in ("mirror", "atom"):
            raise DomainError(f"element kind must be 'mirror' or 'atom', got {self.kind!r}")
        if self.kind == "mirror" and self.zeta is None:
            raise DomainError("a mirror element needs a zeta value")
        if self.zeta is not None:
            object.__setattr__(self, "zeta", complex(self.zeta))


@dataclass(frozen=True)
class CustomScenario:
    """Arbitrary stack of mirrors and atoms driven exactly at ``wavelength``."""

    elements: tuple[ElementSpec, ...] = ()
    mobile_index: int = 0
    wavelength: float = D2_WAVELENGTH
    waist: float = 30e-6
    gamma: float = RB85_GAMMA
    atom_detuning: float = -10 * RB85_GAMMA
    saturation_intensity: float = RB85_ISAT
    mass: float = RB85_MASS
    coupling: float | None = None
    mode_area: float | None = None
    pump_power: float = 2e-12
    pump_side: str = "left"
    dispersion: bool = True
    s_max: float | None = 0.14
    saturation_rule: str = "local"

    kind = "custom"

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise DomainError("a custom stack needs at least one element")
        if not 0 <= self.mobile_index < len(self.elements):
            raise DomainError(f"mobile_index {self.mobile_index!r} out of range")
        if self.saturation_rule != "local":
            raise DomainError("custom stacks support only the 'local' saturation rule")
        for name in ("wavelength", "waist", "gamma", "saturation_intensity", "mass"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v!r}")

    area = _CavityScenario.area
    atom = _CavityScenario.atom
    to_dict = _CavityScenario.to_dict

    @property
    def pump_detuning(self) -> float:
        return 0.0

    def resolved(self) -> "CustomScenario":
        return self

    def pump_k(self, detuning: float = 0.0) -> float:
        return 2 * np.pi / self.wavelength + detuning / c

    def figures(self) -> CavityFigures:
        return characterize_cavity(_unchecked_custom(self))

    @property
    def kappa(self) -> float:
        try:
            return self.figures().kappa
        except Exception:
            return float("nan")

    @property
    def mobile_position(self) -> float:
        return self.elements[self.mobile_index].position


def _unchecked_custom(p: CustomScenario) -> Stack:
    k = 2 * np.pi / p.wavelength
    els = []
    for i, e in enumerate(p.elements):
        if e.kind == "mirror":
            els.append(mirror(e.zeta, e.position, f"mirror{i}"))
        else:
            els.append(atom_element(p.atom(), k, e.position, p.dispersion, f"atom{i}"))
    return Stack(tuple(els), p.mobile_index, PumpSpec(p.pump_power, p.area, p.pump_side), p.wavelength)


def build_custom(p: CustomScenario) -> Stack:
    st = _unchecked_custom(p)
    if p.s_max is None or not st.mobile.is_atom:
        return st
    return _checked(p, st)
