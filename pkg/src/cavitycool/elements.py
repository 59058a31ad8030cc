"""Optical elements: polarizabilities, atoms, mirrors and their 2x2 matrices.

A thin scatterer of polarizability ``zeta`` maps the amplitudes on its left
face to those on its right face::

    (C, D) = [[1 + i zeta, i zeta], [-i zeta, 1 - i zeta]] (A, B)

with reflectivity ``r = i zeta / (1 - i zeta)`` and transmissivity
``t = 1 + r``.  Free propagation over ``x`` is ``diag(e^{ikx}, e^{-ikx})``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants as sc

from .errors import DomainError

#: relative wavenumber offset over which the linear-detuning dispersion model is trusted
DISPERSION_WINDOW = 1e-3

RB85_MASS = 1.41e-25
RB85_GAMMA = np.pi * 6.0666e6  # HWHM, angular
RB85_ISAT = 16.7  # 1.67 mW/cm^2
D2_WAVELENGTH = 780e-9


def cross_section(wavelength: float) -> float:
    """Resonant two-level scattering cross-section ``3 lambda^2 / 2pi``."""
    return 3 * wavelength**2 / (2 * np.pi)


def coupling_for_waist(waist: float, wavelength: float = D2_WAVELENGTH) -> float:
    """Calibrated ``sigma / 2S`` for a beam of the given waist.

    The effective area is ``pi w^2 / 8``; this reproduces the reference
    polarizabilities 4.1e-5 (30 um) and 3.7e-2 (1 um) at Delta = -10 Gamma.
    """
    if waist <= 0:
        raise DomainError(f"waist must be positive, got {waist!r}")
    return cross_section(wavelength) / (2 * np.pi * waist**2 / 8)


def gaussian_mode_area(waist: float) -> float:
    """Beam cross-section ``pi w^2 / 4`` used for power-to-intensity conversion."""
    return np.pi * waist**2 / 4


@dataclass(frozen=True)
class AtomModel:
    """Two-level atom parameters (all SI, angular frequencies)."""

    gamma: float = RB85_GAMMA
    detuning: float = -10 * RB85_GAMMA
    coupling: float = field(default_factory=lambda: coupling_for_waist(30e-6))
    saturation_intensity: float = RB85_ISAT
    mass: float = RB85_MASS
    wavelength: float = D2_WAVELENGTH

    def __post_init__(self):
        for name in ("gamma", "coupling", "saturation_intensity", "mass", "wavelength"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"AtomModel.{name} must be positive and finite, got {v!r}")
        if not np.isfinite(self.detuning):
            raise DomainError(f"AtomModel.detuning must be finite, got {self.detuning!r}")

    def zeta(self, detuning=None):
        """Polarizability ``-coupling * Gamma / (Delta + i Gamma)``."""
        d = self.detuning if detuning is None else detuning
        return -self.coupling * self.gamma / (d + 1j * self.gamma)

    def with_detuning_in_gamma(self, x: float) -> "AtomModel":
        return replace(self, detuning=x * self.gamma)


@dataclass(frozen=True)
class Polarizability:
    """Dimensionless polarizability, optionally dispersive.

    ``value`` is zeta at the reference wavenumber ``k_ref``.  For atoms with
    ``dispersion_enabled`` the detuning shifts by ``c (k - k_ref)`` when the
    polarizability is evaluated at another wavenumber.
    """

    value: complex
    atom: AtomModel | None = None
    k_ref: float | None = None
    dispersion_enabled: bool = False

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))
        if self.dispersion_enabled and (self.atom is None or self.k_ref is None):
            raise DomainError("dispersion requires an atom model and a reference wavenumber")

    @property
    def lossless(self) -> bool:
        return self.value.imag == 0.0

    def at(self, k):
        """zeta at wavenumber(s) ``k``; scalar in, scalar out."""
        if not self.dispersion_enabled:
            if np.ndim(k):
                return np.full(np.shape(k), self.value, np.complex128)
            return self.value
        k = np.asarray(k, float)
        bad = np.abs(k - self.k_ref) > DISPERSION_WINDOW * self.k_ref
        if np.any(bad):
            kb = k[bad].flat[0] if k.ndim else float(k)
            raise DomainError(f"dispersion model not valid at k = {kb!r} m^-1 (reference {self.k_ref!r})")
        z = self.atom.zeta(self.atom.detuning + sc.c * (k - self.k_ref))
        return complex(z) if z.ndim == 0 else z

    def scaled(self, factor: float) -> "Polarizability":
        atom = None if self.atom is None else replace(self.atom, coupling=self.atom.coupling * factor)
        return replace(self, value=self.value * factor, atom=atom)


@dataclass(frozen=True)
class MirrorCoefficients:
    r: complex
    t: complex

    @property
    def reflectance(self) -> float:
        return abs(self.r) ** 2

    @property
    def transmittance(self) -> float:
        return abs(self.t) ** 2


def _zeta_value(zeta) -> complex:
    return zeta.value if isinstance(zeta, Polarizability) else complex(zeta)


def scatterer_matrix(zeta, k: float | None = None) -> np.ndarray:
    """2x2 matrix of a thin scatterer, with zeta evaluated at ``k`` if dispersive."""
    if k is not None and k <= 0:
        raise DomainError(f"wavenumber must be positive, got {k!r}")
    if isinstance(zeta, Polarizability):
        z = zeta.value if k is None else zeta.at(k)
    else:
        z = complex(zeta)
    return np.array([[1 + 1j * z, 1j * z], [-1j * z, 1 - 1j * z]])


def reduced_phase(k, x):
    """``k x`` reduced mod 2pi, evaluated in extended precision."""
    ph = np.longdouble(k) * np.longdouble(x)
    return np.asarray(np.fmod(ph, 2 * np.pi * np.longdouble(1)), dtype=np.float64)


def propagation_matrix(k: float, x: float) -> np.ndarray:
    if k <= 0:
        raise DomainError(f"wavenumber must be positive, got {k!r}")
    if x < 0:
        raise DomainError(f"propagation distance must be non-negative, got {x!r}")
    e = np.exp(1j * float(reduced_phase(k, x)))
    return np.array([[e, 0], [0, 1 / e]])


def mirror_coefficients(zeta) -> MirrorCoefficients:
    z = _zeta_value(zeta)
    den = 1 - 1j * z
    if abs(den) < 1e-300:
        raise DomainError("zeta = -i is a perfect-absorber pole; r and t are undefined")
    return MirrorCoefficients(r=1j * z / den, t=1 / den)


def zeta_for_reflectance(R: float) -> float:
    """Real (negative) zeta of a lossless mirror with power reflectance R."""
    if not 0 <= R < 1:
        raise DomainError(f"reflectance must lie in [0, 1), got {R!r}")
    return -float(np.sqrt(R / (1 - R)))


def zeta_for_finesse(finesse: float) -> float:
    """Mirror zeta whose two-mirror cavity has ``pi sqrt(R)/(1-R) = finesse``."""
    if finesse <= 0:
        raise DomainError(f"finesse must be positive, got {finesse!r}")
    # sqrt(R) solves F R + pi sqrt(R) - F = 0
    q = (-np.pi + np.sqrt(np.pi**2 + 4 * finesse**2)) / (2 * finesse)
    return zeta_for_reflectance(q * q)


def atom_polarizability(atom: AtomModel, k: float, dispersion: bool = True) -> Polarizability:
    """Polarizability of ``atom`` driven at wavenumber ``k``.

    ``atom.detuning`` is taken to be the detuning at ``k``.
    """
    return Polarizability(atom.zeta(), atom=atom, k_ref=float(k), dispersion_enabled=bool(dispersion))


@dataclass(frozen=True)
class OpticalElement:
    """A thin scatterer at ``position`` (m)."""

    zeta: Polarizability
    position: float
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.zeta, Polarizability):
            object.__setattr__(self, "zeta", Polarizability(self.zeta))

    @property
    def atom(self) -> AtomModel | None:
        return self.zeta.atom

    @property
    def is_atom(self) -> bool:
        return self.zeta.atom is not None

    def moved(self, position: float) -> "OpticalElement":
        return replace(self, position=position)


def mirror(zeta: float, position: float, name: str = "mirror") -> OpticalElement:
    return OpticalElement(Polarizability(zeta), position, name)


def atom_element(atom: AtomModel, k: float, position: float, dispersion: bool = True,
                 name: str = "atom") -> OpticalElement:
    return OpticalElement(atom_polarizability(atom, k, dispersion), position, name)
