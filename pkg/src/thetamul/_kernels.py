"""Lattice-sum kernels for theta series.

Two implementations of the same sum are kept: a numba one and a plain numpy
one. ``THETAMUL_NO_NUMBA=1`` (or a missing numba) selects numpy. Both sum in a
fixed order, so each backend is deterministic on its own.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("THETAMUL_NO_NUMBA", "") in ("", "0")


def theta_sum_numpy(v, tau, w):
    """Sum exp(i*pi*v.tau.v + 2*pi*i*v.w) over the rows of ``v``.

    v : (P, g) real shifted lattice points n + a
    tau : (g, g) complex
    w : (M, g) complex arguments z + b
    Returns an (M,) complex array.
    """
    quad = np.einsum("pi,ij,pj->p", v, tau, v)
    phase = 1j * np.pi * quad[:, None] + 2j * np.pi * (v @ w.T)
    return np.exp(phase).sum(axis=0)


def _theta_sum_loops(v, tau, w):
    npts, g = v.shape
    m = w.shape[0]
    quad = np.empty(npts, dtype=np.complex128)
    for p in range(npts):
        acc = 0j
        for i in range(g):
            for j in range(g):
                acc += v[p, i] * tau[i, j] * v[p, j]
        quad[p] = acc
    out = np.zeros(m, dtype=np.complex128)
    for k in range(m):
        acc = 0j
        for p in range(npts):
            lin = 0j
            for i in range(g):
                lin += v[p, i] * w[k, i]
            acc += np.exp(1j * np.pi * quad[p] + 2j * np.pi * lin)
        out[k] = acc
    return out


if numba is not None:
    theta_sum_numba = numba.njit(cache=True)(_theta_sum_loops)
else:  # pragma: no cover
    theta_sum_numba = None


def theta_sum(v, tau, w):
    v = np.ascontiguousarray(v, dtype=np.float64)
    tau = np.ascontiguousarray(tau, dtype=np.complex128)
    w = np.ascontiguousarray(w, dtype=np.complex128)
    if USE_NUMBA:
        return theta_sum_numba(v, tau, w)
    return theta_sum_numpy(v, tau, w)


def backend():
    return "numba" if USE_NUMBA else "numpy"
