"""Acceptance criteria 1-9.

Each criterion prints one ``criterion N: PASS|FAIL ...`` line (also collected
into the pytest terminal summary).  Run ``python tests/test_acceptance.py``
to print the lines without pytest.
"""

from __future__ import annotations

import numpy as np
from scipy.constants import c, hbar, k as k_B

from cavitycool import reproduce as R
from cavitycool.dynamics import friction_batch, respond
from cavitycool.elements import (D2_WAVELENGTH, AtomModel, OpticalElement, Polarizability, atom_element,
                                 gaussian_mode_area, mirror, mirror_coefficients, propagation_matrix,
                                 scatterer_matrix)
from cavitycool.scenarios import InsideScenario, unchecked_stack
from cavitycool.stack import PumpSpec, Stack, solve_fields, transmission
from cavitycool.sweeps import with_axis

RESULTS: list[str] = []


def rel(v, ref, tol):
    return abs(v / ref - 1) <= tol


def factor(v, ref, f):
    return ref / f <= v <= ref * f


def _report(n, checks):
    """``checks``: list of (label, ok, text); one line per criterion."""
    ok = all(c[1] for c in checks)
    parts = "; ".join(f"{lab} {text} [{'ok' if good else 'MISS'}]" for lab, good, text in checks)
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {parts}"
    RESULTS.append(line)
    print(line)
    return ok, line


# ---------------------------------------------------------------------------


def criterion_1():
    F = InsideScenario().figures().finesse
    return _report(1, [("finesse", rel(F, 56000, 0.02), f"{F:.1f} (56000 +/- 2%)")])


def criterion_2():
    o = R.inside_optimum()
    return _report(2, [
        ("friction", rel(o["friction"], -1.5e-20, 0.2), f"{o['friction']:.4g} N s/m (-1.5e-20 +/- 20%)"),
        ("detuning", abs(o["detuning_kappa"] + 2.6) <= 0.3, f"{o['detuning_kappa']:.3f} kappa (-2.6 +/- 0.3)"),
    ])


def criterion_3():
    o = R.inside_optimum()
    t, ta = o["cooling_time"], o["averaged_cooling_time"]
    return _report(3, [
        ("optimum", rel(t, 9e-6, 0.2), f"{t * 1e6:.2f} us (9 +/- 20%)"),
        ("averaged", rel(ta, 37e-6, 0.25), f"{ta * 1e6:.2f} us (37 +/- 25%)"),
    ])


def criterion_4():
    s = R.inside_saturation()
    i_mw = s["peak_intensity"] * 0.1  # W/m^2 -> mW/cm^2
    return _report(4, [
        ("s", rel(s["budget_saturation"], 0.14, 0.25), f"{s['budget_saturation']:.4f} (0.14 +/- 25%)"),
        ("intensity", rel(i_mw, 23.0, 0.3), f"{i_mw:.2f} mW/cm^2 (23 +/- 30%)"),
    ])


def criterion_5():
    o = R.outside_optimum()
    return _report(5, [
        ("friction", rel(o["friction"], -2.9e-21, 0.25), f"{o['friction']:.4g} N s/m (-2.9e-21 +/- 25%)"),
        ("cooling time", rel(o["cooling_time"], 50e-6, 0.25), f"{o['cooling_time'] * 1e6:.2f} us (50 +/- 25%)"),
    ])


def criterion_6():
    i, o = R.inside_optimum(), R.outside_optimum()
    checks = []
    for lab, v, ref in (("inside optimum", i["temperature"], 56e-6),
                        ("inside averaged", i["averaged_temperature"], 220e-6),
                        ("outside optimum", o["temperature"], 280e-6)):
        checks.append((lab, factor(v, ref, 2), f"{v * 1e6:.1f} uK ({ref * 1e6:.0f} x/ 2)"))
    return _report(6, checks)


def criterion_7():
    res, slope = R.inside_finesse_scaling()
    small = R.outside_small_zeta()
    ratios = res.data["temperature"] * k_B / (hbar * res.data["kappa"])
    t = small["temperature_hbar_kappa"]
    return _report(7, [
        ("inside T-kappa slope", abs(slope - 1) <= 0.1,
         f"{slope:.3f} (1.0 +/- 0.1; T/(hbar kappa/k_B) = {', '.join(f'{r:.2f}' for r in ratios)})"),
        ("outside small-zeta T", factor(t, 1.9, 1.5), f"{t:.3f} hbar kappa/k_B (1.9 x/ 1.5)"),
    ])


def criterion_8():
    _, sl_l = R.outside_length_scaling()
    _, _, sl_z = R.outside_zeta_scaling()
    ratio = R.outside_averaged_ratio()
    return _report(8, [
        ("length slope", abs(sl_l - 1) <= 0.15, f"{sl_l:.3f} (1.0 +/- 0.15)"),
        ("zeta slope", abs(sl_z - 2) <= 0.1, f"{sl_z:.3f} (2.0 +/- 0.1)"),
        ("averaged/peak", abs(ratio) < 0.01, f"{abs(ratio):.2e} (< 1e-2)"),
    ])


def criterion_9():
    rng = np.random.default_rng(9)
    k = 2 * np.pi / D2_WAVELENGTH
    area = gaussian_mode_area(30e-6)

    det_err = 0.0
    for _ in range(200):
        m = np.eye(2, dtype=complex)
        for _ in range(rng.integers(1, 6)):
            z = complex(rng.normal(scale=3), rng.uniform(0, 1))
            m = scatterer_matrix(z) @ propagation_matrix(k, rng.uniform(0, 1e-5)) @ m
        # relative to the size of the two products that cancel in m00 m11 - m01 m10
        scale = max(1.0, abs(m[0, 0] * m[1, 1]) + abs(m[0, 1] * m[1, 0]))
        det_err = max(det_err, abs(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] - 1) / scale)

    energy_err = 0.0
    for _ in range(100):
        n = rng.integers(1, 6)
        els = tuple(OpticalElement(Polarizability(float(rng.normal(scale=5))), x)
                    for x in np.sort(rng.uniform(0, 5e-5, n)))
        fs = solve_fields(Stack(els, 0, PumpSpec(1e-9, area), D2_WAVELENGTH))
        energy_err = max(energy_err, abs((fs.reflected_power + fs.transmitted_power) / fs.input_power - 1))

    L = 495e-6
    cav = Stack((mirror(-133.5, 0.0), mirror(-133.5, L)), 0, PumpSpec(1e-12, area), D2_WAVELENGTH)
    kk = k + np.linspace(-1, 1, 4001) * np.pi / L
    co = mirror_coefficients(-133.5)
    airy = np.abs(co.t) ** 4 / np.abs(1 - co.r**2 * np.exp(2j * kk * L)) ** 2
    airy_err = float(np.max(np.abs(transmission(cav, kk) / airy - 1)))

    s = InsideScenario().resolved()
    st = unchecked_stack(with_axis(s, "position", s.atom_position + D2_WAVELENGTH / 12))
    a, b = respond(st), respond(st.with_power(3 * st.pump.power))
    power_err = abs(b.temperature / a.temperature - 1)

    _, _, ok, est, _ = friction_batch([st])
    halving = abs(est[0, 0] - est[0, 1]) / abs(est[0, 1])

    atom = AtomModel(detuning=-AtomModel().gamma)
    P = 1e-12
    xs = D2_WAVELENGTH + np.arange(16) * D2_WAVELENGTH / 32
    stacks = [Stack((mirror(0.0, 0.0), atom_element(atom, k, x), mirror(0.0, 3 * D2_WAVELENGTH)), 1,
                    PumpSpec(P, area, "both"), D2_WAVELENGTH) for x in xs]
    beta = friction_batch(stacks)[0].mean()

    def g(d):
        z = atom.zeta(d)
        return P / c * (2 * z.imag + 2 * abs(z) ** 2) / abs(1 - 1j * z) ** 2

    h = 1e-4 * atom.gamma
    oracle = -2 * k * (g(atom.detuning + h) - g(atom.detuning - h)) / (2 * h)
    doppler_err = abs(beta / oracle - 1)

    return _report(9, [
        ("det", det_err <= 1e-10, f"{det_err:.1e}"),
        ("energy", energy_err <= 1e-10, f"{energy_err:.1e}"),
        ("Airy", airy_err <= 1e-8, f"{airy_err:.1e}"),
        ("power invariance", power_err <= 1e-10, f"{power_err:.1e}"),
        ("Doppler oracle", doppler_err <= 0.05, f"{doppler_err:.1e}"),
        ("Omega halving", bool(ok[0]) and halving < 0.05, f"{halving:.1e}"),
    ])


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7,
            criterion_8, criterion_9]


def _check(fn):
    ok, line = fn()
    assert ok, line


def test_criterion_1_cavity_calibration():
    _check(criterion_1)


def test_criterion_2_inside_friction():
    _check(criterion_2)


def test_criterion_3_cooling_times():
    _check(criterion_3)


def test_criterion_4_saturation_bookkeeping():
    _check(criterion_4)


def test_criterion_5_outside_friction():
    _check(criterion_5)


def test_criterion_6_temperatures():
    _check(criterion_6)


def test_criterion_7_asymptotic_law():
    _check(criterion_7)


def test_criterion_8_scaling():
    _check(criterion_8)


def test_criterion_9_property_suite():
    _check(criterion_9)


if __name__ == "__main__":
    results = [fn()[0] for fn in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
