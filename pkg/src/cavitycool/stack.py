"""Stacks of thin scatterers: composition, steady-state fields, forces and cavity figures."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.constants import c, epsilon_0

from . import kernels
from .elements import AtomModel, OpticalElement, Polarizability, reduced_phase
from .errors import CavityError, DomainError, SolverError


@dataclass(frozen=True)
class PumpSpec:
    power: float
    mode_area: float
    side: str = "left"  # "both": equal counter-propagating beams, each of ``power``
    detuning_from_cavity: float | None = None

    def __post_init__(self):
        if not self.power >= 0:
            raise DomainError(f"pump power must be non-negative, got {self.power!r}")
        if not self.mode_area > 0:
            raise DomainError(f"mode area must be positive, got {self.mode_area!r}")
        if self.side not in ("left", "right", "both"):
            raise DomainError(f"pump side must be 'left', 'right' or 'both', got {self.side!r}")

    @property
    def amplitude(self) -> float:
        """Input running-wave amplitude, with ``P = 2 eps0 c S |amp|^2``."""
        return float(np.sqrt(self.power / (2 * epsilon_0 * c * self.mode_area)))


@dataclass(frozen=True)
class Stack:
    """Ordered thin scatterers, one of them mobile, driven at ``wavelength``."""

    elements: tuple[OpticalElement, ...]
    mobile_index: int | None
    pump: PumpSpec
    wavelength: float

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.wavelength > 0:
            raise DomainError(f"wavelength must be positive, got {self.wavelength!r}")
        x = self.positions
        if len(x) > 1 and np.any(np.diff(x) < 0):
            raise DomainError("element positions must be non-decreasing")
        if self.elements:
            if self.mobile_index is None or not 0 <= self.mobile_index < len(self.elements):
                raise DomainError(f"mobile_index {self.mobile_index!r} out of range")

    @property
    def k(self) -> float:
        return 2 * np.pi / self.wavelength

    @property
    def positions(self) -> np.ndarray:
        return np.array([e.position for e in self.elements], float)

    @property
    def mobile(self) -> OpticalElement:
        return self.elements[self.mobile_index]

    def __len__(self):
        return len(self.elements)

    def with_element(self, index: int, element: OpticalElement) -> "Stack":
        els = list(self.elements)
        els[index] = element
        return replace(self, elements=tuple(els))

    def with_mobile_at(self, position: float) -> "Stack":
        return self.with_element(self.mobile_index, self.mobile.moved(position))

    def with_power(self, power: float) -> "Stack":
        return replace(self, pump=replace(self.pump, power=power))

    def without_mobile(self) -> "Stack":
        """The immobile elements only (the resonator of a scenario)."""
        els = tuple(e for i, e in enumerate(self.elements) if i != self.mobile_index)
        return Stack(els, 0 if els else None, self.pump, self.wavelength)


# ---------------------------------------------------------------------------
# batch assembly


def zeta_array(stacks: Sequence[Stack], k) -> np.ndarray:
    k = np.broadcast_to(np.asarray(k, float), (len(stacks),))
    n = len(stacks[0]) if stacks else 0
    z = np.empty((len(stacks), n), np.complex128)
    for b, (s, kb) in enumerate(zip(stacks, k)):
        for j, e in enumerate(s.elements):
            z[b, j] = e.zeta.at(kb)
    return z


def phase_array(stacks: Sequence[Stack], k) -> np.ndarray:
    k = np.broadcast_to(np.asarray(k, float), (len(stacks),))
    n = len(stacks[0]) if stacks else 0
    if n < 2:
        return np.zeros((len(stacks), 0))
    gaps = np.array([np.diff(s.positions) for s in stacks])
    return reduced_phase(k[:, None], gaps)


def batch_fields(stacks, k, a_in, d_in, src=None, zeta=None) -> np.ndarray:
    """Local amplitudes for a batch of same-length stacks; raises on singular rows."""
    if zeta is None:
        zeta = zeta_array(stacks, k)
    out, flag = kernels.chain_fields(zeta, phase_array(stacks, k), a_in, d_in, src)
    if np.any(flag):
        raise SolverError("singular stack: the homogeneous solution does not reach the right boundary")
    return out


def pump_inputs(stack: Stack, amplitude: float | None = None):
    a = stack.pump.amplitude if amplitude is None else amplitude
    return {"left": (a, 0.0), "right": (0.0, a), "both": (a, a)}[stack.pump.side]


# ---------------------------------------------------------------------------
# single-stack API


def compose(stack: Stack, k: float | None = None) -> np.ndarray:
    """Transfer matrix taking the left-face amplitudes of the first element to the right face of the last."""
    k = stack.k if k is None else k
    if not len(stack):
        return np.eye(2, dtype=complex)
    return kernels.chain_matrix(zeta_array([stack], k), phase_array([stack], k))[0]


def transmission(stack: Stack, k) -> np.ndarray:
    """Power transmission ``|1/M22|^2`` over an array of wavenumbers."""
    k = np.atleast_1d(np.asarray(k, float))
    stacks = [stack] * len(k)
    m = kernels.chain_matrix(zeta_array(stacks, k), phase_array(stacks, k))
    return 1.0 / np.abs(m[:, 1, 1]) ** 2


@dataclass(frozen=True)
class FieldState:
    """Local amplitudes ``(A, B, C, D)`` at each element (rows), in field units."""

    amplitudes: np.ndarray
    k: float
    mode_area: float
    a_in: complex
    d_in: complex

    @property
    def A(self):
        return self.amplitudes[:, 0]

    @property
    def B(self):
        return self.amplitudes[:, 1]

    @property
    def C(self):
        return self.amplitudes[:, 2]

    @property
    def D(self):
        return self.amplitudes[:, 3]

    def power(self, amp) -> float:
        return float(2 * epsilon_0 * c * self.mode_area * np.abs(amp) ** 2)

    @property
    def left_out(self) -> complex:
        return self.B[0] if len(self.amplitudes) else self.d_in

    @property
    def right_out(self) -> complex:
        return self.C[-1] if len(self.amplitudes) else self.a_in

    @property
    def input_power(self) -> float:
        return self.power(self.a_in) + self.power(self.d_in)

    @property
    def reflected_power(self) -> float:
        return self.power(self.left_out) if self.a_in != 0 else self.power(self.right_out)

    @property
    def transmitted_power(self) -> float:
        return self.power(self.right_out) if self.a_in != 0 else self.power(self.left_out)

    def absorbed_power(self, index: int) -> float:
        a, b, cc, d = self.amplitudes[index]
        return self.power(a) + self.power(d) - self.power(b) - self.power(cc)

    def intensity_at(self, index: int) -> float:
        """Total-field intensity ``2 eps0 c |A + B|^2`` at the sheet."""
        a, b = self.amplitudes[index, :2]
        return float(2 * epsilon_0 * c * abs(a + b) ** 2)

    def peak_intensity_right_of(self, index: int) -> float:
        """Standing-wave maximum of the intensity in the gap after ``index``."""
        cc, d = self.amplitudes[index, 2:]
        return float(2 * epsilon_0 * c * (abs(cc) + abs(d)) ** 2)


def solve_fields(stack: Stack, k: float | None = None) -> FieldState:
    k = stack.k if k is None else k
    a_in, d_in = pump_inputs(stack)
    if not len(stack):
        return FieldState(np.zeros((0, 4), complex), k, stack.pump.mode_area, a_in, d_in)
    amps = batch_fields([stack], k, a_in, d_in)[0]
    return FieldState(amps, k, stack.pump.mode_area, complex(a_in), complex(d_in))


def intensity_at_position(stack: Stack, fields: FieldState, x: float) -> float:
    """Total-field intensity at an arbitrary position ``x`` (not only at sheets)."""
    pos = stack.positions
    if not len(pos):
        amp = fields.a_in * np.exp(1j * fields.k * x) + fields.d_in * np.exp(-1j * fields.k * x)
        return float(2 * epsilon_0 * c * abs(amp) ** 2)
    if x <= pos[0]:
        j, a, b = 0, fields.A[0], fields.B[0]
    else:
        j = int(np.searchsorted(pos, x, side="left")) - 1
        a, b = fields.C[j], fields.D[j]
    ph = float(reduced_phase(fields.k, abs(x - pos[j])))
    if x <= pos[0]:
        ph = -ph
    amp = a * np.exp(1j * ph) + b * np.exp(-1j * ph)
    return float(2 * epsilon_0 * c * abs(amp) ** 2)


def force_on(stack: Stack, index: int, fields: FieldState) -> float:
    """Radiation force ``2 eps0 S (|A|^2 + |B|^2 - |C|^2 - |D|^2)``; positive pushes to +x."""
    if not 0 <= index < len(stack):
        raise IndexError(f"element index {index} out of range")
    a, b, cc, d = fields.amplitudes[index]
    return float(2 * epsilon_0 * fields.mode_area * (abs(a) ** 2 + abs(b) ** 2 - abs(cc) ** 2 - abs(d) ** 2))


def local_saturation(fields: FieldState, atom: AtomModel, index: int) -> float:
    i_loc = fields.intensity_at(index)
    g, d = atom.gamma, atom.detuning
    return float(i_loc / atom.saturation_intensity * g * g / (d * d + g * g))


# ---------------------------------------------------------------------------
# resonator figures


@dataclass(frozen=True)
class CavityFigures:
    finesse: float
    fsr: float  # Hz
    kappa: float  # angular HWHM, s^-1
    buildup: float  # peak intracavity intensity over input running-wave intensity
    resonance_k: float
    fwhm: float  # Hz

    @property
    def kappa_convention(self) -> str:
        return "kappa = HWHM, angular frequency"


def characterize_cavity(stack: Stack) -> CavityFigures:
    """Finesse, FSR, kappa and buildup of the resonator formed by the immobile elements.

    The mobile element is removed unless that would leave fewer than two
    elements (a bare two-mirror stack is characterized as is).  The resonance nearest the stack wavenumber
    is located on a transmission scan and fitted with a Lorentzian over
    three linewidths either side.
    """
    bare = stack.without_mobile() if len(stack) > 2 else stack
    if len(bare) < 2:
        raise CavityError("a resonator needs at least two immobile elements")
    key = tuple((e.zeta.value, e.position) for e in bare.elements)
    return _characterize(key, float(stack.k))


@lru_cache(maxsize=256)
def _characterize(key, k0: float) -> CavityFigures:
    els = tuple(OpticalElement(Polarizability(z), x) for z, x in key)
    bare = Stack(els, 0, PumpSpec(1.0, 1.0), 2 * np.pi / k0)
    length = els[-1].position - els[0].position
    if length <= 0:
        raise CavityError("resonator has zero length")
    fsr_k = np.pi / length

    def tr(k):
        return transmission(bare, k)

    def peak_near(kc, half_width, npts):
        grid = kc + np.linspace(-half_width, half_width, npts)
        tg = tr(grid)
        i = int(np.argmax(tg))
        dk = grid[1] - grid[0]
        res = optimize.minimize_scalar(lambda u: -tr(grid[i] + u * dk)[0], bounds=(-1.0, 1.0),
                                       method="bounded", options={"xatol": 1e-10})
        return grid[i] + res.x * dk, float(-res.fun), float(np.min(tg))

    kpk, tmax, tmin = peak_near(k0, 0.5 * fsr_k, 40001)
    if tmax <= 4 * tmin:
        raise CavityError("no resonance found in transmission scan")

    def half_point(sign):
        f = lambda u: tr(kpk + sign * u)[0] - tmax / 2
        step = fsr_k * 1e-9
        while f(step) > 0:
            step *= 2
            if step > fsr_k / 2:
                raise CavityError("resonance half-maximum not bracketed (finesse below 2)")
        return optimize.brentq(f, step / 2 if f(step / 2) > 0 else 0.0, step, xtol=1e-16 * kpk,
                               rtol=1e-14)

    hw0 = 0.5 * (half_point(1) + half_point(-1))
    du = np.linspace(-6 * hw0, 6 * hw0, 241)
    ydata = tr(kpk + du)

    def lorentz(u, a, u0, g):
        return a / (1 + ((u - u0) / g) ** 2)

    with warnings.catch_warnings():
        # an exact Lorentzian gives a degenerate covariance estimate; only the fit matters
        warnings.simplefilter("ignore", optimize.OptimizeWarning)
        p, _ = optimize.curve_fit(lorentz, du / hw0, ydata / tmax, p0=(1.0, 0.0, 1.0))
    hw = abs(p[2]) * hw0
    kpk = kpk + p[1] * hw0

    k2, _, _ = peak_near(kpk + fsr_k, 0.05 * fsr_k, 4001)
    fsr = c * abs(k2 - kpk) / (2 * np.pi)
    fwhm = c * 2 * hw / (2 * np.pi)
    finesse = fsr / fwhm
    if finesse < 2:
        raise CavityError(f"finesse {finesse:.3g} below 2: not a resonator")

    amps = batch_fields([bare], kpk, 1.0, 0.0)[0]
    buildup = max(float((abs(amps[j, 2]) + abs(amps[j, 3])) ** 2) for j in range(len(els) - 1))
    return CavityFigures(finesse=finesse, fsr=fsr, kappa=np.pi * fwhm, buildup=buildup,
                         resonance_k=float(kpk), fwhm=fwhm)
