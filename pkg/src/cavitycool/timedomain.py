"""Delay-line simulation of a stack with a uniformly moving sheet.

This is an independent check of the sideband friction: the fields are
propagated step by step between the sheets while the mobile sheet moves at a
constant velocity, and the friction is read off from the force difference
between the two directions of motion at the instant the sheet passes its
nominal position.  Only non-dispersive polarizabilities are supported.
"""

from __future__ import annotations

import numpy as np
from scipy.constants import c

from .kernels import _maybe_njit
from .stack import Stack, zeta_array


def _run(zs, x0s, mob, k0, dt, v, nsteps, tpass, cdt):
    n = len(zs)
    nd = np.empty(max(n - 1, 1), np.int64)
    nd[0] = 1
    for j in range(n - 1):
        nd[j] = max(1, int(round((x0s[j + 1] - x0s[j]) / cdt)))
    maxd = nd.max() + 1
    rbuf = np.zeros((max(n - 1, 1), maxd), np.complex128)
    lbuf = np.zeros((max(n - 1, 1), maxd), np.complex128)
    r = 1j * zs / (1 - 1j * zs)
    t = 1 / (1 - 1j * zs)
    force = np.zeros(nsteps)
    ag = np.empty(n, np.complex128)
    dg = np.empty(n, np.complex128)
    xs = x0s.copy()
    for s in range(nsteps):
        xs[mob] = x0s[mob] + v * (s * dt - tpass)
        # read every arrival before anything is emitted in this step
        for j in range(n):
            ag[j] = 1.0 if j == 0 else rbuf[j - 1, s % nd[j - 1]]
            dg[j] = 0j if j == n - 1 else lbuf[j, s % nd[j]]
        for j in range(n):
            ph = np.exp(1j * k0 * xs[j])
            a = ag[j] * ph
            d = dg[j] / ph
            b = r[j] * a + t[j] * d
            cc = t[j] * a + r[j] * d
            if j == mob:
                force[s] = abs(a) ** 2 + abs(b) ** 2 - abs(cc) ** 2 - abs(d) ** 2
            if j < n - 1:
                rbuf[j, s % nd[j]] = cc / ph
            if j > 0:
                lbuf[j - 1, s % nd[j - 1]] = b * ph
    return force


_run_jit = _maybe_njit(_run)


def moving_scatterer_friction(stack: Stack, settle_time: float, steps_per_transit: int = 40,
                              velocity: float | None = None) -> float:
    """Friction F1/v of the mobile sheet from a time-domain run (pump from the left).

    ``settle_time`` has to cover many field lifetimes so that the start-up
    transient has decayed when the sheet passes its nominal position.  The
    time step is set so that the shortest gap spans ``steps_per_transit``
    steps; gaps are rounded to whole steps.
    """
    if stack.pump.side != "left":
        raise ValueError("time-domain oracle supports a left pump only")
    k0 = stack.k
    zs = zeta_array([stack], k0)[0]
    x0s = stack.positions - stack.positions[0]
    gaps = np.diff(x0s)
    shortest = gaps[gaps > 0].min() if np.any(gaps > 0) else stack.wavelength
    dt = shortest / c / steps_per_transit
    nsteps = int(settle_time / dt) + 1
    tpass = (nsteps - 1) * dt
    if velocity is None:
        velocity = 1e-3 / (k0 * settle_time)
    fp = _run_jit(zs, x0s, stack.mobile_index, k0, dt, velocity, nsteps, tpass, c * dt)[-1]
    fm = _run_jit(zs, x0s, stack.mobile_index, k0, dt, -velocity, nsteps, tpass, c * dt)[-1]
    # force is in units of P/c for unit input amplitude
    return float((fp - fm) / (2 * velocity) * stack.pump.power / c)
