"""Batched transfer-matrix kernels.

Every kernel works on a batch of ``B`` stacks that share the same element
count ``N``.  Each stack is described by its polarizabilities ``zeta[B, N]``
and the propagation phases ``phase[B, N-1]`` across the gaps (already
reduced mod 2*pi).  Amplitudes are local: at element ``j`` the field just
left of the sheet is ``A e^{ikx'} + B e^{-ikx'}`` and just right of it
``C e^{ikx'} + D e^{-ikx'}``.

Two implementations are kept in step: explicit loops compiled with numba,
and a numpy version vectorised over the batch.  Set the environment
variable ``CAVITYCOOL_DISABLE_NUMBA=1`` (or run without numba installed) to
use the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("CAVITYCOOL_DISABLE_NUMBA", "") not in ("1", "true", "yes")


def _maybe_njit(fn):
    if HAS_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


# ---------------------------------------------------------------------------
# numba loop versions


def _chain_matrix_loop(zeta, phase):
    nb, n = zeta.shape
    out = np.empty((nb, 2, 2), np.complex128)
    for b in range(nb):
        m11 = 1.0 + 0j
        m12 = 0j
        m21 = 0j
        m22 = 1.0 + 0j
        for j in range(n):
            if j > 0:
                e = np.exp(1j * phase[b, j - 1])
                m11 *= e
                m12 *= e
                m21 /= e
                m22 /= e
            z = zeta[b, j]
            s11 = 1.0 + 1j * z
            s12 = 1j * z
            s21 = -1j * z
            s22 = 1.0 - 1j * z
            n11 = s11 * m11 + s12 * m21
            n12 = s11 * m12 + s12 * m22
            n21 = s21 * m11 + s22 * m21
            n22 = s21 * m12 + s22 * m22
            m11, m12, m21, m22 = n11, n12, n21, n22
        out[b, 0, 0] = m11
        out[b, 0, 1] = m12
        out[b, 1, 0] = m21
        out[b, 1, 1] = m22
    return out


def _chain_fields_loop(zeta, phase, a_in, d_in, src):
    nb, n = zeta.shape
    out = np.empty((nb, n, 4), np.complex128)
    vl = np.empty((n, 2), np.complex128)
    vr = np.empty((n, 2), np.complex128)
    wl = np.empty((n, 2), np.complex128)
    wr = np.empty((n, 2), np.complex128)
    flag = np.zeros(nb, np.bool_)
    for b in range(nb):
        # particular solution with b_L = 0 and homogeneous one with (0, 1)
        v0 = a_in[b]
        v1 = 0j
        w0 = 0j
        w1 = 1.0 + 0j
        for j in range(n):
            if j > 0:
                e = np.exp(1j * phase[b, j - 1])
                v0 *= e
                v1 /= e
                w0 *= e
                w1 /= e
            vl[j, 0] = v0
            vl[j, 1] = v1
            wl[j, 0] = w0
            wl[j, 1] = w1
            z = zeta[b, j]
            t0 = (1.0 + 1j * z) * v0 + 1j * z * v1 + src[b, j, 0]
            t1 = -1j * z * v0 + (1.0 - 1j * z) * v1 + src[b, j, 1]
            v0, v1 = t0, t1
            t0 = (1.0 + 1j * z) * w0 + 1j * z * w1
            t1 = -1j * z * w0 + (1.0 - 1j * z) * w1
            w0, w1 = t0, t1
            vr[j, 0] = v0
            vr[j, 1] = v1
            wr[j, 0] = w0
            wr[j, 1] = w1
        if abs(w1) == 0.0:
            flag[b] = True
            bl = 0j
        else:
            bl = (d_in[b] - v1) / w1
        for j in range(n):
            out[b, j, 0] = vl[j, 0] + bl * wl[j, 0]
            out[b, j, 1] = vl[j, 1] + bl * wl[j, 1]
            out[b, j, 2] = vr[j, 0] + bl * wr[j, 0]
            out[b, j, 3] = vr[j, 1] + bl * wr[j, 1]
    return out, flag


_chain_matrix_nb = _maybe_njit(_chain_matrix_loop)
_chain_fields_nb = _maybe_njit(_chain_fields_loop)


# ---------------------------------------------------------------------------
# numpy versions, vectorised over the batch axis


def _chain_matrix_np(zeta, phase):
    nb, n = zeta.shape
    m = np.zeros((nb, 2, 2), np.complex128)
    m[:, 0, 0] = 1.0
    m[:, 1, 1] = 1.0
    for j in range(n):
        if j > 0:
            e = np.exp(1j * phase[:, j - 1])
            m[:, 0, :] *= e[:, None]
            m[:, 1, :] /= e[:, None]
        z = zeta[:, j]
        s = np.empty((nb, 2, 2), np.complex128)
        s[:, 0, 0] = 1.0 + 1j * z
        s[:, 0, 1] = 1j * z
        s[:, 1, 0] = -1j * z
        s[:, 1, 1] = 1.0 - 1j * z
        m = s @ m
    return m


def _chain_fields_np(zeta, phase, a_in, d_in, src):
    nb, n = zeta.shape
    # columns: particular (b_L = 0) and homogeneous (0, 1) solutions
    v = np.zeros((nb, 2, 2), np.complex128)
    v[:, 0, 0] = a_in
    v[:, 1, 1] = 1.0
    left = np.empty((nb, n, 2, 2), np.complex128)
    right = np.empty((nb, n, 2, 2), np.complex128)
    for j in range(n):
        if j > 0:
            e = np.exp(1j * phase[:, j - 1])
            v[:, 0, :] *= e[:, None]
            v[:, 1, :] /= e[:, None]
        left[:, j] = v
        z = zeta[:, j]
        c0 = (1.0 + 1j * z)[:, None] * v[:, 0, :] + 1j * z[:, None] * v[:, 1, :]
        c1 = -1j * z[:, None] * v[:, 0, :] + (1.0 - 1j * z)[:, None] * v[:, 1, :]
        v = np.stack([c0, c1], axis=1)
        v[:, :, 0] += src[:, j, :]
        right[:, j] = v
    w1 = v[:, 1, 1]
    flag = w1 == 0
    bl = np.where(flag, 0j, (d_in - v[:, 1, 0]) / np.where(flag, 1.0, w1))
    out = np.empty((nb, n, 4), np.complex128)
    out[:, :, 0:2] = left[:, :, :, 0] + bl[:, None, None] * left[:, :, :, 1]
    out[:, :, 2:4] = right[:, :, :, 0] + bl[:, None, None] * right[:, :, :, 1]
    return out, flag


# ---------------------------------------------------------------------------
# dispatch


def chain_matrix(zeta, phase, use_numba: bool | None = None) -> np.ndarray:
    """Total transfer matrix of each stack in the batch, shape ``(B, 2, 2)``."""
    zeta = np.ascontiguousarray(zeta, np.complex128)
    phase = np.ascontiguousarray(phase, np.float64)
    if _pick(use_numba):
        return _chain_matrix_nb(zeta, phase)
    return _chain_matrix_np(zeta, phase)


def chain_fields(zeta, phase, a_in, d_in, src=None, use_numba: bool | None = None):
    """Local amplitudes ``(A, B, C, D)`` at every element, shape ``(B, N, 4)``.

    ``a_in`` and ``d_in`` are the amplitudes incident from the far left and far
    right.  ``src[B, N, 2]`` is added to ``(C, D)`` after each sheet and models
    driven emission.  The second return value flags singular stacks.
    """
    zeta = np.ascontiguousarray(zeta, np.complex128)
    phase = np.ascontiguousarray(phase, np.float64)
    nb, n = zeta.shape
    a_in = np.ascontiguousarray(np.broadcast_to(a_in, (nb,)), np.complex128)
    d_in = np.ascontiguousarray(np.broadcast_to(d_in, (nb,)), np.complex128)
    if src is None:
        src = np.zeros((nb, n, 2), np.complex128)
    else:
        src = np.ascontiguousarray(src, np.complex128)
    if _pick(use_numba):
        return _chain_fields_nb(zeta, phase, a_in, d_in, src)
    return _chain_fields_np(zeta, phase, a_in, d_in, src)


def _pick(use_numba):
    if use_numba is None:
        return USE_NUMBA
    return bool(use_numba) and HAS_NUMBA
