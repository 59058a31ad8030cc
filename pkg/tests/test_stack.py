import numpy as np
import pytest
from scipy.constants import c

from cavitycool import kernels
from cavitycool.elements import D2_WAVELENGTH, OpticalElement, Polarizability, mirror, mirror_coefficients
from cavitycool.errors import DomainError
from cavitycool.stack import (PumpSpec, Stack, characterize_cavity, compose, force_on, intensity_at_position,
                              solve_fields, transmission)

L = 495e-6
AREA = np.pi * (30e-6) ** 2 / 4


def cavity(z=-133.5, length=L, power=1e-12, side="left"):
    return Stack((mirror(z, 0.0), mirror(z, length)), 0, PumpSpec(power, AREA, side), D2_WAVELENGTH)


def airy(z, length, k):
    co = mirror_coefficients(z)
    return np.abs(co.t) ** 4 / np.abs(1 - co.r**2 * np.exp(2j * k * length)) ** 2


@pytest.mark.parametrize("z", [-133.5, -3.0, -0.4])
def test_airy_transmission(z):
    k0 = 2 * np.pi / D2_WAVELENGTH
    k = k0 + np.linspace(-1, 1, 2001) * np.pi / L
    got = transmission(cavity(z), k)
    np.testing.assert_allclose(got, airy(z, L, k), rtol=1e-8)


def test_matrix_product_unimodular():
    rng = np.random.default_rng(3)
    els = tuple(OpticalElement(Polarizability(complex(rng.normal(), rng.uniform(0, .1))), x)
                for x in np.sort(rng.uniform(0, 1e-5, 6)))
    st = Stack(els, 0, PumpSpec(1.0, AREA), D2_WAVELENGTH)
    assert abs(np.linalg.det(compose(st)) - 1) < 1e-10


def test_energy_conservation_lossless():
    rng = np.random.default_rng(4)
    for _ in range(20):
        n = rng.integers(1, 6)
        els = tuple(OpticalElement(Polarizability(float(rng.normal(scale=5))), x)
                    for x in np.sort(rng.uniform(0, 5e-5, n)))
        for side in ("left", "right", "both"):
            fs = solve_fields(Stack(els, 0, PumpSpec(1e-9, AREA, side), D2_WAVELENGTH))
            assert fs.reflected_power + fs.transmitted_power == pytest.approx(fs.input_power, rel=1e-10)


def test_absorbed_power_balance():
    els = (mirror(-5.0, 0.0), OpticalElement(Polarizability(0.1 + 0.02j), 3e-6), mirror(-5.0, 9e-6))
    fs = solve_fields(Stack(els, 1, PumpSpec(1e-9, AREA), D2_WAVELENGTH))
    lost = fs.input_power - fs.reflected_power - fs.transmitted_power
    assert fs.absorbed_power(1) == pytest.approx(lost, rel=1e-10)
    assert fs.absorbed_power(0) == pytest.approx(0, abs=1e-22)


def test_high_reflector_force():
    P = 1e-3
    st = Stack((mirror(-1e4, 0.0),), 0, PumpSpec(P, AREA), D2_WAVELENGTH)
    f = force_on(st, 0, solve_fields(st))
    assert f == pytest.approx(2 * P / c, rel=1e-7)
    right = Stack((mirror(-1e4, 0.0),), 0, PumpSpec(P, AREA, "right"), D2_WAVELENGTH)
    assert force_on(right, 0, solve_fields(right)) == pytest.approx(-2 * P / c, rel=1e-7)


def test_local_intensity_matches_sheet():
    st = cavity()
    fs = solve_fields(st)
    x = 1e-7
    a, b = fs.C[0], fs.D[0]
    k = st.k
    expect = 2 * 8.8541878128e-12 * c * abs(a * np.exp(1j * k * x) + b * np.exp(-1j * k * x)) ** 2
    assert intensity_at_position(st, fs, x) == pytest.approx(expect, rel=1e-9)
    assert intensity_at_position(st, fs, 0.0) == pytest.approx(fs.intensity_at(0), rel=1e-12)


def test_cavity_figures():
    fig = characterize_cavity(cavity())
    assert fig.finesse == pytest.approx(56000, rel=0.02)
    assert fig.fsr == pytest.approx(c / (2 * L), rel=1e-3)
    assert fig.kappa == pytest.approx(np.pi * fig.fsr / fig.finesse, rel=1e-9)
    co = mirror_coefficients(-3.0)
    R = co.reflectance
    formula = np.pi * np.sqrt(R) / (1 - R)
    assert characterize_cavity(cavity(-3.0)).finesse == pytest.approx(formula, rel=5e-3)


def test_positions_must_be_ordered():
    with pytest.raises(DomainError):
        Stack((mirror(-1.0, 1e-6), mirror(-1.0, 0.0)), 0, PumpSpec(1.0, AREA), D2_WAVELENGTH)
    with pytest.raises(DomainError):
        PumpSpec(1.0, AREA, "up")
    with pytest.raises(DomainError):
        PumpSpec(-1.0, AREA)


@pytest.mark.skipif(not kernels.HAS_NUMBA, reason="numba not installed")
def test_backends_agree():
    rng = np.random.default_rng(5)
    z = rng.normal(scale=1e-3, size=(50, 4)) + 1j * rng.uniform(0, 1e-4, (50, 4))
    z[:, 0] = z[:, -1] = -133.5
    ph = rng.uniform(0, 2 * np.pi, (50, 3))
    src = rng.normal(size=(50, 4, 2)) + 0j
    np.testing.assert_allclose(kernels.chain_matrix(z, ph, use_numba=True),
                               kernels.chain_matrix(z, ph, use_numba=False), rtol=1e-12, atol=1e-12)
    a, fa = kernels.chain_fields(z, ph, 1.0, 0.3, src, use_numba=True)
    b, fb = kernels.chain_fields(z, ph, 1.0, 0.3, src, use_numba=False)
    np.testing.assert_array_equal(fa, fb)
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(b))
