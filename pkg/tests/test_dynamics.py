from dataclasses import replace

import numpy as np
import pytest
from scipy.constants import c, hbar, k as k_B

from cavitycool import kernels
from cavitycool.dynamics import (ModulationProbe, diffusion, diffusion_batch, equilibrium_temperature,
                                 friction_batch, friction_coefficient, respond, temperature_asymptote)
from cavitycool.elements import (D2_WAVELENGTH, AtomModel, OpticalElement, Polarizability, atom_element,
                                 gaussian_mode_area, mirror)
from cavitycool.errors import DomainError, HeatingError
from cavitycool.scenarios import InsideScenario, unchecked_stack
from cavitycool.stack import PumpSpec, Stack, characterize_cavity, solve_fields
from cavitycool.sweeps import with_axis
from cavitycool.timedomain import moving_scatterer_friction

LAM = D2_WAVELENGTH
K = 2 * np.pi / LAM
AREA = gaussian_mode_area(30e-6)
L = 495e-6


def weak_cavity_stack(zeta, detuning_kappa, zm=-133.5, power=1e-12):
    res = Stack((mirror(zm, 0.0), mirror(zm, L)), 0, PumpSpec(power, AREA), LAM)
    fig = characterize_cavity(res)
    kp = fig.resonance_k + detuning_kappa * fig.kappa / c
    lam = 2 * np.pi / kp
    els = (mirror(zm, 0.0), OpticalElement(Polarizability(zeta), L / 2 + 0.0875 * lam), mirror(zm, L))
    return Stack(els, 1, PumpSpec(power, AREA), lam), fig.kappa


def test_zero_zeta_mobile():
    st = Stack((mirror(-20.0, 0.0), OpticalElement(Polarizability(0.0), 30e-6), mirror(-20.0, 60e-6)), 1,
               PumpSpec(1e-12, AREA), LAM)
    assert friction_coefficient(st) == 0.0
    assert diffusion(st) == 0.0


def test_doppler_two_beam_oracle():
    """Standing-wave average of the two-beam friction against -2k dg/dDelta."""
    atom = AtomModel(detuning=-AtomModel().gamma)
    P = 1e-12
    xs = LAM + np.arange(16) * LAM / 32
    stacks = [Stack((mirror(0.0, 0.0), atom_element(atom, K, x), mirror(0.0, 3 * LAM)), 1,
                    PumpSpec(P, AREA, "both"), LAM) for x in xs]
    beta, _, ok, _, _ = friction_batch(stacks)
    assert ok.all()

    # one running wave pushes with g(Delta) = (P/c)(1 + |r|^2 - |t|^2); a moving atom
    # sees the two beams at Delta -/+ k v
    def g(d):
        z = atom.zeta(d)
        return P / c * (2 * z.imag + 2 * abs(z) ** 2) / abs(1 - 1j * z) ** 2

    h = 1e-4 * atom.gamma
    oracle = -2 * K * (g(atom.detuning + h) - g(atom.detuning - h)) / (2 * h)
    assert oracle < 0
    assert beta.mean() == pytest.approx(oracle, rel=0.05)
    assert beta.mean() == pytest.approx(oracle, rel=1e-4)


def test_time_domain_oracle():
    s = InsideScenario(dispersion=False, mirror_zeta=-20.0, cavity_length=60e-6).resolved()
    s = with_axis(s, "position", s.atom_position + 0.12e-6)
    st = unchecked_stack(s)
    beta = friction_coefficient(st)
    assert moving_scatterer_friction(st, 40 / s.kappa) == pytest.approx(beta, rel=0.01)


@pytest.mark.parametrize("detuning", [-0.5, -1.0, -2.0])
def test_single_mode_limit(detuning):
    st, kappa = weak_cavity_stack(1e-7, detuning)
    r = respond(st)
    assert r.diffusion_recoil == 0.0
    expect = hbar * kappa * (1 + detuning**2) / (4 * abs(detuning)) / k_B
    assert r.temperature == pytest.approx(expect, rel=0.02)


def test_single_mode_heating_side():
    st, _ = weak_cavity_stack(1e-7, +1.0)
    r = respond(st)
    assert r.friction > 0
    assert r.temperature is None and r.cooling_time is None


def test_running_wave_diffusion_components():
    """A lone atom in one beam: absorption shot noise and emission recoil, equal halves."""
    atom = AtomModel(detuning=-AtomModel().gamma)
    st = Stack((atom_element(atom, K, 0.0),), 0, PumpSpec(1e-12, AREA), LAM)
    fs = solve_fields(st)
    r_abs = fs.absorbed_power(0) / (hbar * c * K)
    d_vac, d_rec = diffusion_batch([st])
    assert d_rec[0] == pytest.approx(0.5 * (hbar * K) ** 2 * r_abs, rel=1e-9)
    assert d_vac[0] == pytest.approx(0.5 * (hbar * K) ** 2 * r_abs, rel=0.01)


def test_temperature_arithmetic():
    assert equilibrium_temperature(-1e-20, 1e-47) == pytest.approx(1e-47 / (k_B * 1e-20))
    assert equilibrium_temperature(-1e-20, 1e-47) == pytest.approx(72e-6, rel=0.01)
    with pytest.raises(HeatingError, match="heating"):
        equilibrium_temperature(1e-21, 1e-47)
    with pytest.raises(HeatingError):
        equilibrium_temperature(0.0, 1e-47)


def test_asymptotes():
    assert temperature_asymptote(1.70e7, "inside") == pytest.approx(130e-6, rel=0.01)
    assert temperature_asymptote(1.70e7, "outside") == pytest.approx(246e-6, rel=0.01)
    with pytest.raises(DomainError):
        temperature_asymptote(-1.0, "inside")
    with pytest.raises(DomainError):
        temperature_asymptote(1.0, "sideways")


@pytest.fixture(scope="module")
def inside_stack():
    s = InsideScenario().resolved()
    return unchecked_stack(with_axis(s, "position", s.atom_position + LAM / 12))


def test_power_invariance(inside_stack):
    a = respond(inside_stack)
    b = respond(inside_stack.with_power(2 * inside_stack.pump.power))
    assert b.friction == pytest.approx(2 * a.friction, rel=1e-6)
    assert b.diffusion == pytest.approx(2 * a.diffusion, rel=1e-6)
    assert b.temperature == pytest.approx(a.temperature, rel=1e-10)


def test_epsilon_halving(inside_stack):
    f1 = friction_coefficient(inside_stack, ModulationProbe(epsilon=LAM * 1e-4))
    f2 = friction_coefficient(inside_stack, ModulationProbe(epsilon=LAM * 0.5e-4))
    assert abs(f2 / f1 - 1) < 1e-3


def test_richardson_settles(inside_stack):
    _, _, ok, est, _ = friction_batch([inside_stack])
    assert ok[0]
    assert abs(est[0, 0] - est[0, 1]) < 0.05 * abs(est[0, 1])


def test_probe_limits(inside_stack):
    with pytest.raises(DomainError):
        ModulationProbe(epsilon=LAM / 100).resolve(inside_stack)
    with pytest.raises(DomainError):
        ModulationProbe(omega=1e9).resolve(inside_stack)
    with pytest.raises(DomainError):
        ModulationProbe(omega=-1.0)


def test_numpy_backend_matches(inside_stack, monkeypatch):
    if not kernels.HAS_NUMBA:
        pytest.skip("numba not installed")
    a = respond(inside_stack)
    monkeypatch.setattr(kernels, "USE_NUMBA", False)
    b = respond(inside_stack)
    assert b.friction == pytest.approx(a.friction, rel=1e-8)
    assert b.diffusion == pytest.approx(a.diffusion, rel=1e-8)


def test_response_record(inside_stack):
    r = respond(inside_stack)
    d = r.as_dict()
    assert d["friction"] == r.friction
    assert r.diffusion == pytest.approx(r.diffusion_vacuum + r.diffusion_recoil)
    assert r.diffusion > 0
    if r.friction < 0:
        mass = inside_stack.mobile.atom.mass
        assert r.cooling_time == pytest.approx(mass / abs(r.friction))


def test_needs_mobile_atom_for_recoil():
    st = Stack((mirror(-20.0, 0.0), OpticalElement(Polarizability(0.01 + 0.001j), 30e-6), mirror(-20.0, 60e-6)),
               1, PumpSpec(1e-12, AREA), LAM)
    _, d_rec = diffusion_batch([st])
    assert d_rec[0] == 0.0
    atom_st = replace(st, elements=(st.elements[0], atom_element(AtomModel(), K, 30e-6), st.elements[2]))
    assert diffusion_batch([atom_st])[1][0] > 0
