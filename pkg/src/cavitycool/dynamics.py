"""Velocity-linear friction, momentum diffusion and equilibrium temperature.

Friction comes from sideband linear response: the mobile sheet is displaced
as ``x0 + eps cos(Omega t)``, which scatters the carrier into sidebands at
``k0 +- Omega/c``.  The component of the beat-note force in phase with the
velocity, divided by ``eps Omega``, is extrapolated to ``Omega -> 0``.

Diffusion is the zero-frequency force-noise density from vacuum fluctuations
entering every open port (both ends plus one loss channel per absorbing
sheet), plus recoil from spontaneous re-emission of the absorbed photons.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.constants import c, epsilon_0, hbar, k as k_B

from .errors import CavityError, ConvergenceError, DomainError, HeatingError
from .stack import Stack, batch_fields, characterize_cavity, pump_inputs, zeta_array

DIFFUSION_MODEL = "vacuum-port force noise at zero frequency + absorption recoil"
SIGNS = np.array([1.0, 1.0, -1.0, -1.0])
OMEGA_FRACTION = 0.05
RICHARDSON_TOL = 0.05


@dataclass(frozen=True)
class ModulationProbe:
    """Position modulation used to extract the friction coefficient.

    ``omega = None`` picks ``kappa_fraction`` times the slowest rate of the
    stack (cavity kappa, atomic Gamma, inverse light transit time).
    """

    omega: float | None = None
    epsilon: float | None = None
    kappa_fraction: float = OMEGA_FRACTION

    def __post_init__(self):
        if self.omega is not None and not self.omega > 0:
            raise DomainError(f"modulation frequency must be positive, got {self.omega!r}")
        if self.epsilon is not None and not self.epsilon > 0:
            raise DomainError(f"modulation amplitude must be positive, got {self.epsilon!r}")

    def resolve(self, stack: Stack) -> tuple[float, float]:
        eps = stack.wavelength * 1e-4 if self.epsilon is None else self.epsilon
        if eps > stack.wavelength / 1000:
            raise DomainError(f"modulation amplitude {eps!r} m exceeds wavelength/1000")
        rate = slowest_rate(stack)
        if self.omega is None:
            return self.kappa_fraction * rate, eps
        if self.omega > self.kappa_fraction * rate * (1 + 1e-12):
            raise DomainError(f"modulation frequency {self.omega!r} s^-1 exceeds "
                              f"{self.kappa_fraction} x the slowest rate {rate:.4g} s^-1")
        return self.omega, eps


def slowest_rate(stack: Stack) -> float:
    """Smallest of the cavity kappa, atomic Gamma and c / (span of the stack)."""
    rates = []
    span = float(np.ptp(stack.positions)) if len(stack) > 1 else 0.0
    if span > 0:
        rates.append(c / span)
    for e in stack.elements:
        if e.is_atom and e.zeta.dispersion_enabled:
            rates.append(e.atom.gamma)
    if sum(1 for i in range(len(stack)) if i != stack.mobile_index) >= 2:
        try:
            rates.append(characterize_cavity(stack).kappa)
        except CavityError:
            pass
    if not rates:
        # a single non-dispersive sheet has no internal time scale
        rates.append(c * stack.k)
    return float(min(rates))


@dataclass(frozen=True)
class DynamicalResponse:
    static_force: float
    friction: float
    diffusion: float
    temperature: float | None
    cooling_time: float | None
    spring: float
    diffusion_vacuum: float
    diffusion_recoil: float
    saturation: float | None
    omega: float

    def as_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# batched core


def _common_mobile(stacks: Sequence[Stack]) -> int:
    m = {s.mobile_index for s in stacks}
    n = {len(s) for s in stacks}
    if len(m) != 1 or len(n) != 1:
        raise ValueError("batched stacks must share element count and mobile index")
    return m.pop()


def _per_watt(stacks):
    """Stacks re-pumped at 1 W and the factors that restore their powers.

    Every observable is linear in the pump power, so solving at a fixed
    reference power and scaling afterwards keeps that linearity exact instead
    of letting rounding in the field solve leak into power ratios.
    """
    powers = np.array([s.pump.power for s in stacks], float)
    return [s if s.pump.power == 1.0 else s.with_power(1.0) for s in stacks], powers


def _carrier(stacks):
    k0 = np.array([s.k for s in stacks])
    inputs = np.array([pump_inputs(s) for s in stacks], complex).reshape(len(stacks), 2)
    z0 = zeta_array(stacks, k0)
    x0 = batch_fields(stacks, k0, inputs[:, 0], inputs[:, 1], zeta=z0)
    return k0, z0, x0


def _beat_force(stacks, k0, z0, x0, m, omega, eps):
    """Complex Omega-component of the force for modulation frequency ``omega`` (per row)."""
    nb, n = z0.shape
    area = np.array([s.pump.mode_area for s in stacks])
    a0, b0 = x0[:, m, 0], x0[:, m, 1]
    g = 0.5 * eps * 1j * k0 * (a0 - b0)
    h = -0.5 * eps * k0 * z0[:, m] * (a0 + b0)
    side = []
    for sgn in (1.0, -1.0):
        ks = k0 + sgn * omega / c
        zs = zeta_array(stacks, ks)
        src = np.zeros((nb, n, 2), complex)
        src[:, m, 0] = 1j * zs[:, m] * g - h
        src[:, m, 1] = -1j * zs[:, m] * g - h
        side.append(batch_fields(stacks, ks, 0.0, 0.0, src=src, zeta=zs)[:, m, :])
    xc = x0[:, m, :]
    f = np.sum(SIGNS * (np.conj(xc) * side[0] + xc * np.conj(side[1])), axis=1)
    return 2 * epsilon_0 * area * f


def friction_batch(stacks: Sequence[Stack], probe: ModulationProbe | None = None, carrier=None):
    """Friction, spring constant and convergence flag for same-shape stacks.

    A ``carrier`` passed in must have been solved for the 1 W stacks.
    """
    probe = probe or ModulationProbe()
    m = _common_mobile(stacks)
    stacks, pw = _per_watt(stacks)
    k0, z0, x0 = carrier or _carrier(stacks)
    res = [probe.resolve(s) for s in stacks]
    om = np.array([r[0] for r in res])
    eps = np.array([r[1] for r in res])
    betas = []
    spring = None
    for f in (1.0, 0.5, 0.25):
        fo = _beat_force(stacks, k0, z0, x0, m, om * f, eps)
        betas.append(-2 * fo.imag / (eps * om * f))
        if spring is None:
            spring = 2 * fo.real / eps
    r1 = (4 * betas[1] - betas[0]) / 3
    r2 = (4 * betas[2] - betas[1]) / 3
    power = np.array([s.pump.power * (2 if s.pump.side == "both" else 1) for s in stacks])
    floor = 2 * power / c**2 + 1e-6 * np.abs(spring) / om
    ok = np.abs(r1 - r2) <= RICHARDSON_TOL * np.abs(r2) + floor
    return r2 * pw, spring * pw, ok, np.stack([r1, r2], axis=1) * pw[:, None], om


def _photon_scale(stacks, k0):
    area = np.array([s.pump.mode_area for s in stacks])
    return np.sqrt(2 * epsilon_0 * c * area / (hbar * c * k0))


def diffusion_batch(stacks: Sequence[Stack], carrier=None):
    """Vacuum-port and recoil diffusion for same-shape stacks (carrier as in :func:`friction_batch`)."""
    m = _common_mobile(stacks)
    stacks, pw = _per_watt(stacks)
    k0, z0, x0 = carrier or _carrier(stacks)
    nb, n = z0.shape
    conv = _photon_scale(stacks, k0)
    xc = x0[:, m, :] * conv[:, None]
    weight = SIGNS * np.conj(xc)

    eta2 = np.zeros(nb)
    for a, d in ((1.0, 0.0), (0.0, 1.0)):
        g = batch_fields(stacks, k0, a, d, zeta=z0)[:, m, :]
        eta2 += np.abs(np.sum(weight * g, axis=1)) ** 2
    loss = np.sqrt(np.clip(2 * z0.imag, 0, None))
    for j in range(n):
        if not np.any(loss[:, j] > 0):
            continue
        src = np.zeros((nb, n, 2), complex)
        src[:, j, 0] = loss[:, j]
        src[:, j, 1] = -loss[:, j]
        g = batch_fields(stacks, k0, 0.0, 0.0, src=src, zeta=z0)[:, m, :]
        eta2 += np.abs(np.sum(weight * g, axis=1)) ** 2
    d_vac = 0.5 * (hbar * k0) ** 2 * eta2

    is_atom = np.array([s.mobile.is_atom for s in stacks])
    absorbed = np.abs(xc[:, 0]) ** 2 + np.abs(xc[:, 3]) ** 2 - np.abs(xc[:, 1]) ** 2 - np.abs(xc[:, 2]) ** 2
    d_rec = np.where(is_atom, 0.5 * (hbar * k0) ** 2 * np.clip(absorbed, 0, None), 0.0)
    return d_vac * pw, d_rec * pw


def respond_batch(stacks: Sequence[Stack], probe: ModulationProbe | None = None,
                  friction: bool = True, diffusion: bool = True) -> dict:
    """All observables for a batch of same-shape stacks, as arrays (NaN = undefined)."""
    stacks = list(stacks)
    m = _common_mobile(stacks)
    unit, pw = _per_watt(stacks)
    carrier = _carrier(unit)
    k0, z0, x0 = carrier
    area = np.array([s.pump.mode_area for s in stacks])
    xm = x0[:, m, :]
    out = {"force": pw * 2 * epsilon_0 * area * np.sum(SIGNS * np.abs(xm) ** 2, axis=1)}

    intensity = pw * 2 * epsilon_0 * c * np.abs(xm[:, 0] + xm[:, 1]) ** 2
    sat = np.full(len(stacks), np.nan)
    for b, s in enumerate(stacks):
        atom = s.mobile.atom
        if atom is not None:
            sat[b] = intensity[b] / atom.saturation_intensity * atom.gamma**2 / (atom.detuning**2 + atom.gamma**2)
    out["intensity"] = intensity
    out["saturation"] = sat

    if friction:
        beta, spring, ok, est, om = friction_batch(unit, probe, carrier)
        beta, spring, est = beta * pw, spring * pw, est * pw[:, None]
        out.update(friction=beta, spring=spring, converged=ok, estimates=est, omega=om)
        mass = np.array([s.mobile.atom.mass if s.mobile.is_atom else np.nan for s in stacks])
        with np.errstate(divide="ignore", invalid="ignore"):
            out["cooling_time"] = np.where(beta < 0, mass / np.abs(beta), np.nan)
    if diffusion:
        d_vac, d_rec = diffusion_batch(unit, carrier)
        d_vac, d_rec = d_vac * pw, d_rec * pw
        out.update(diffusion=d_vac + d_rec, diffusion_vacuum=d_vac, diffusion_recoil=d_rec)
    if friction and diffusion:
        with np.errstate(divide="ignore", invalid="ignore"):
            out["temperature"] = np.where(out["friction"] < 0, out["diffusion"] / (k_B * np.abs(out["friction"])), np.nan)
    return out


# ---------------------------------------------------------------------------
# single-stack API


def friction_coefficient(stack: Stack, probe: ModulationProbe | None = None) -> float:
    """Velocity-linear force coefficient F1/v in N/(m/s); negative cools."""
    if stack.mobile_index is None:
        raise DomainError("stack has no mobile element")
    beta, _, ok, est, _ = friction_batch([stack], probe)
    if not ok[0]:
        raise ConvergenceError(f"Omega -> 0 extrapolation did not settle: {est[0, 0]:.6e} vs {est[0, 1]:.6e}",
                               est[0])
    return float(beta[0])


def diffusion(stack: Stack) -> float:
    """Momentum diffusion D (kg^2 m^2 s^-3), with d<p^2>/dt = 2D."""
    if stack.mobile_index is None:
        raise DomainError("stack has no mobile element")
    d_vac, d_rec = diffusion_batch([stack])
    return float(d_vac[0] + d_rec[0])


def equilibrium_temperature(friction: float, diffusion: float) -> float:
    """``T = -D / (k_B friction)``, defined only for a cooling force."""
    if not friction < 0:
        raise HeatingError(f"heating: temperature undefined for friction {friction!r} >= 0 "
                           "(k_B T = -D / (F1/v) requires a cooling force)")
    if diffusion < 0:
        raise DomainError(f"diffusion must be non-negative, got {diffusion!r}")
    return -diffusion / (k_B * friction)


def temperature_asymptote(kappa: float, regime: str) -> float:
    """Limiting temperature: ``hbar kappa / k_B`` inside, ``1.9 hbar kappa / k_B`` outside."""
    if not kappa > 0:
        raise DomainError(f"kappa must be positive, got {kappa!r}")
    factor = {"inside": 1.0, "outside": 1.9}
    if regime not in factor:
        raise DomainError(f"regime must be 'inside' or 'outside', got {regime!r}")
    return factor[regime] * hbar * kappa / k_B


def respond(stack: Stack, probe: ModulationProbe | None = None) -> DynamicalResponse:
    """Static force, friction, diffusion and (if cooling) temperature of the mobile element."""
    r = respond_batch([stack], probe)
    if not r["converged"][0]:
        e = r["estimates"][0]
        raise ConvergenceError(f"Omega -> 0 extrapolation did not settle: {e[0]:.6e} vs {e[1]:.6e}", e)

    def opt(a):
        v = float(a[0])
        return None if np.isnan(v) else v

    return DynamicalResponse(
        static_force=float(r["force"][0]),
        friction=float(r["friction"][0]),
        diffusion=float(r["diffusion"][0]),
        temperature=opt(r["temperature"]),
        cooling_time=opt(r["cooling_time"]),
        spring=float(r["spring"][0]),
        diffusion_vacuum=float(r["diffusion_vacuum"][0]),
        diffusion_recoil=float(r["diffusion_recoil"][0]),
        saturation=opt(r["saturation"]),
        omega=float(r["omega"][0]),
    )
