"""Riemann theta functions with rational characteristics.

    theta[a;b](z, tau) = sum_n exp(i pi (n+a)^T tau (n+a) + 2 pi i (n+a)^T (z+b))

Truncation is ellipsoidal around the real-shift centre c0 = -Y^{-1} Im z,
Y = Im tau. The tail outside radius R (in the Y-norm) is bounded by comparing
each lattice term with the Gaussian integral over a disjoint ball of radius
r = sqrt(lambda_min(Y))/2 around it:

    tail <= exp(pi y^T Y^{-1} y) * (g / r^g) * int_{R-2r}^inf (s+r)^{g-1} exp(-pi s^2) ds

valid for R >= 2r. The integral is expanded binomially into upper incomplete
gamma functions.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from scipy.special import gamma, gammaincc

from . import _kernels
from .avcore import PeriodMatrix
from .errors import NearDegenerate

DEFAULT_EPS = 1e-10
MAX_POINTS = 10**8


@dataclass(frozen=True)
class Characteristic:
    a: tuple[Fraction, ...]
    b: tuple[Fraction, ...]

    @classmethod
    def make(cls, a, b=None) -> "Characteristic":
        a = tuple(Fraction(x) for x in a)
        b = tuple(Fraction(x) for x in b) if b is not None else (Fraction(0),) * len(a)
        if len(a) != len(b):
            raise ValueError("characteristic halves must have equal length")
        return cls(a, b)

    @property
    def g(self) -> int:
        return len(self.a)

    def a_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.a])

    def b_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.b])

    def parity(self) -> int:
        """4 a.b mod 2 for half-integral characteristics; -1 otherwise."""
        v = 4 * sum(x * y for x, y in zip(self.a, self.b))
        return int(v) % 2 if v.denominator == 1 else -1

    def __str__(self):
        return "[" + ",".join(map(str, self.a)) + ";" + ",".join(map(str, self.b)) + "]"


@dataclass(frozen=True)
class ThetaValue:
    value: complex
    abs_error_bound: float


def tail_bound(R: float, g: int, r: float) -> float:
    """Bound on sum_{|x|>R} exp(-pi |x|^2) over a point set with packing radius >= r."""
    A = R - 2 * r
    if A < 0:
        return np.inf
    total = 0.0
    for k in range(g):
        s = (k + 1) / 2
        integral = 0.5 * np.pi ** (-s) * gamma(s) * gammaincc(s, np.pi * A * A)
        total += comb(g - 1, k) * r ** (g - 1 - k) * integral
    return g / r**g * total


def truncation_radius(eps: float, g: int, lam_min: float, log_prefactor: float = 0.0) -> float:
    """Smallest R (to 1e-3 relative) with exp(log_prefactor) * tail_bound(R) <= eps."""
    r = np.sqrt(lam_min) / 2
    target = np.log(eps) - log_prefactor

    def ok(R):
        t = tail_bound(R, g, r)
        return t == 0.0 or np.log(t) <= target

    lo, hi = 2 * r, 2 * r + 1.0
    while not ok(hi):
        lo, hi = hi, hi * 2
        if hi > 1e6:
            raise NearDegenerate("truncation radius diverges")
    while hi - lo > 1e-3 * hi:
        mid = (lo + hi) / 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True, eq=False)
class _Geometry:
    tau: np.ndarray
    Y: np.ndarray
    Yinv: np.ndarray
    lam_min: float


def _geometry(tau) -> _Geometry:
    if isinstance(tau, PeriodMatrix):
        t = tau.tau
        lam = tau.lambda_min
    else:
        t = np.asarray(tau, dtype=np.complex128)
        lam = float(np.linalg.eigvalsh(t.imag)[0])
    Y = t.imag
    return _Geometry(t, Y, np.linalg.inv(Y), lam)


def _points(a: np.ndarray, centers: np.ndarray, R: float, geo: _Geometry) -> np.ndarray:
    """All v = n + a (n integral) lying in the union of Y-ellipsoids of radius R around ``centers``."""
    half = R * np.sqrt(np.diag(geo.Yinv))
    lo = np.floor(centers.min(axis=0) - half - a).astype(np.int64)
    hi = np.ceil(centers.max(axis=0) + half - a).astype(np.int64)
    count = int(np.prod(hi - lo + 1))
    if count > MAX_POINTS:
        raise NearDegenerate(f"truncation needs {count} lattice points (cap {MAX_POINTS})")
    axes = [np.arange(l, h + 1) for l, h in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(a)) + a
    keep = np.zeros(len(grid), dtype=bool)
    for c in centers:
        d = grid - c
        keep |= np.einsum("pi,ij,pj->p", d, geo.Y, d) <= R * R
    return grid[keep]


def theta_batch(ch: Characteristic, Z, tau, eps: float = DEFAULT_EPS) -> tuple[np.ndarray, np.ndarray]:
    """theta[ch](z, tau) for every row z of ``Z``; returns (values, error bounds)."""
    geo = _geometry(tau)
    g = geo.tau.shape[0]
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    if Z.shape[1] != g:
        raise ValueError(f"z has length {Z.shape[1]}, expected {g}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    y = Z.imag
    centers = -(y @ geo.Yinv)
    log_pref = np.pi * np.einsum("mi,ij,mj->m", y, geo.Yinv, y)
    R = truncation_radius(eps, g, geo.lam_min, float(log_pref.max()))
    a = ch.a_array()
    v = _points(a, centers, R, geo)
    vals = _kernels.theta_sum(v, geo.tau, Z + ch.b_array())
    r = np.sqrt(geo.lam_min) / 2
    bounds = np.exp(log_pref) * tail_bound(R, g, r)
    return vals, bounds


def theta(ch: Characteristic, z, tau, eps: float = DEFAULT_EPS) -> ThetaValue:
    vals, bounds = theta_batch(ch, np.atleast_2d(np.asarray(z, dtype=np.complex128)), tau, eps)
    return ThetaValue(complex(vals[0]), float(bounds[0]))


class ThetaConstantCache:
    """Theta constants keyed by (characteristic, tau fingerprint, eps).

    Reads are lock-free dict lookups; inserts take a lock so a value is computed
    and stored once.
    """

    def __init__(self):
        self._store: dict = {}
        self._lock = threading.Lock()

    def get(self, ch: Characteristic, tau: PeriodMatrix, eps: float) -> ThetaValue:
        key = (ch, tau.fingerprint(), eps)
        hit = self._store.get(key)
        if hit is not None:
            return hit
        val = theta(ch, np.zeros(tau.g), tau, eps)
        with self._lock:
            return self._store.setdefault(key, val)

    def __len__(self):
        return len(self._store)

    def clear(self):
        with self._lock:
            self._store.clear()


_CACHE = ThetaConstantCache()


def theta_constant(ch: Characteristic, tau: PeriodMatrix, eps: float = DEFAULT_EPS, cache=None) -> ThetaValue:
    if cache is None:
        cache = _CACHE
    return cache.get(ch, tau, eps)


def quasiperiodicity_factor(ch: Characteristic, m, n, z, tau) -> complex:
    """Factor f with theta[ch](z + tau m + n) = f * theta[ch](z)."""
    t = tau.tau if isinstance(tau, PeriodMatrix) else np.asarray(tau, dtype=np.complex128)
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    z = np.asarray(z, dtype=np.complex128)
    a, b = ch.a_array(), ch.b_array()
    return complex(np.exp(-1j * np.pi * (m @ t @ m) - 2j * np.pi * (m @ z) + 2j * np.pi * (a @ n - b @ m)))
