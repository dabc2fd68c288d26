"""Abelian-variety input data: period matrix, polarization type, Appell-Humbert forms.

The torus is C^g / (tau Z^g + D Z^g). Real coordinates of a point z are
(Re z, Im z) stacked, and the lattice basis is (tau e_1..tau e_g, d_1 e_1..d_g e_g).
"""
from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from math import prod
from pathlib import Path

import numpy as np

from .errors import (
    InvalidPolarization,
    LatticeMembership,
    NearDegenerateWarning,
    NotPositive,
    NotSymmetric,
)

NEAR_DEGENERATE_LAMBDA = 1e-3


@dataclass(frozen=True)
class PolarizationType:
    d: tuple[int, ...]

    def __init__(self, d, check_chain=True):
        d = tuple(int(x) for x in d)
        if len(d) < 1:
            raise InvalidPolarization("polarization type needs g >= 1 entries")
        if any(x < 1 for x in d):
            raise InvalidPolarization(f"elementary divisors must be >= 1, got {d}")
        if check_chain:
            for i in range(len(d) - 1):
                if d[i + 1] % d[i]:
                    raise InvalidPolarization(f"divisibility chain broken: {d[i]} does not divide {d[i + 1]}")
        object.__setattr__(self, "d", d)

    @property
    def g(self) -> int:
        return len(self.d)

    @property
    def s(self) -> int:
        """Number of odd elementary divisors."""
        return sum(1 for x in self.d if x % 2)

    @property
    def h0(self) -> int:
        return prod(self.d)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.d, dtype=np.int64)

    @classmethod
    def parse(cls, text: str) -> "PolarizationType":
        return cls(int(t) for t in text.replace(" ", "").split(",") if t)

    def __str__(self):
        return "(" + ",".join(map(str, self.d)) + ")"


@dataclass(frozen=True, eq=False)
class PeriodMatrix:
    tau: np.ndarray
    symmetry_tol: float = 1e-12
    lambda_min: float = field(default=0.0)

    @property
    def g(self) -> int:
        return self.tau.shape[0]

    @property
    def im(self) -> np.ndarray:
        return self.tau.imag

    def fingerprint(self) -> str:
        data = ",".join(repr(float(x)) for x in np.concatenate([self.tau.real.ravel(), self.tau.imag.ravel()]))
        return hashlib.sha256(data.encode()).hexdigest()[:16]

    def scaled(self, k: float) -> "PeriodMatrix":
        return PeriodMatrix(self.tau * k, self.symmetry_tol, self.lambda_min * k)


def validate_period_matrix(tau, symmetry_tol: float = 1e-12) -> PeriodMatrix:
    """Check symmetry and positivity of Im(tau); return the validated matrix."""
    tau = np.atleast_2d(np.asarray(tau, dtype=np.complex128))
    if tau.ndim != 2 or tau.shape[0] != tau.shape[1]:
        raise ValueError(f"tau must be square, got shape {tau.shape}")
    asym = np.abs(tau - tau.T)
    if asym.max() > symmetry_tol:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise NotSymmetric(f"tau[{i},{j}] - tau[{j},{i}] = {tau[i, j] - tau[j, i]} exceeds tol {symmetry_tol}")
    tau = (tau + tau.T) / 2
    try:
        np.linalg.cholesky(tau.imag)
    except np.linalg.LinAlgError:
        ev = np.linalg.eigvalsh(tau.imag)
        raise NotPositive(f"Im(tau) not positive definite, smallest eigenvalue {ev[0]}") from None
    lam = float(np.linalg.eigvalsh(tau.imag)[0])
    if lam <= 0:
        raise NotPositive(f"Im(tau) not positive definite, smallest eigenvalue {lam}")
    if lam < NEAR_DEGENERATE_LAMBDA:
        warnings.warn(f"lambda_min(Im tau) = {lam:.3g} < {NEAR_DEGENERATE_LAMBDA}", NearDegenerateWarning, stacklevel=2)
    tau.setflags(write=False)
    return PeriodMatrix(tau, symmetry_tol, lam)


@dataclass(frozen=True, eq=False)
class SymplecticData:
    """Alternating form E (lattice basis) and hermitian H with Im H = E.

    ``H`` is the matrix with H(z, w) = z^T H conj(w).
    """

    pm: PeriodMatrix
    D: PolarizationType
    E: np.ndarray
    H: np.ndarray
    basis: np.ndarray  # real 2g x 2g, columns are lattice basis vectors in (Re, Im) coords

    def E_real(self, z, w) -> float:
        """E extended R-bilinearly to C^g."""
        x = self._lattice_coords(z)
        y = self._lattice_coords(w)
        return float(x @ self.E @ y)

    def H_form(self, z, w) -> complex:
        return complex(np.asarray(z) @ self.H @ np.conj(w))

    def _lattice_coords(self, z):
        z = np.asarray(z, dtype=np.complex128)
        return np.linalg.solve(self.basis, np.concatenate([z.real, z.imag]))

    def lattice_point(self, m, n) -> np.ndarray:
        return self.pm.tau @ np.asarray(m, dtype=float) + self.D.array * np.asarray(n, dtype=float)


def _real_basis(pm: PeriodMatrix, D: PolarizationType) -> np.ndarray:
    g = pm.g
    P = np.zeros((2 * g, 2 * g))
    P[:g, :g] = pm.tau.real
    P[g:, :g] = pm.tau.imag
    P[:g, g:] = np.diag(D.d)
    return P


def symplectic_data(pm: PeriodMatrix, D: PolarizationType) -> SymplecticData:
    """Recover H from E via H(z, w) = i E(z, w) + E(iz, w)."""
    if pm.g != D.g:
        raise ValueError(f"dimension mismatch: tau is {pm.g}x{pm.g}, type has g={D.g}")
    g = pm.g
    Dm = np.diag(D.d).astype(float)
    E = np.block([[np.zeros((g, g)), Dm], [-Dm, np.zeros((g, g))]])
    P = _real_basis(pm, D)
    Pinv = np.linalg.inv(P)
    E_R = Pinv.T @ E @ Pinv  # E on real coordinates (Re, Im)

    def e(z, w):
        zr = np.concatenate([z.real, z.imag])
        wr = np.concatenate([w.real, w.imag])
        return zr @ E_R @ wr

    eye = np.eye(g, dtype=np.complex128)
    H = np.empty((g, g), dtype=np.complex128)
    for j in range(g):
        for k in range(g):
            H[j, k] = 1j * e(eye[j], eye[k]) + e(1j * eye[j], eye[k])
    H = (H + H.conj().T) / 2
    return SymplecticData(pm, D, E, H, P)


def lattice_coordinates(sd: SymplecticData, lam, tol: float = 1e-12) -> np.ndarray:
    """Integer coordinates (m, n) of lam = tau m + D n; raises if lam is off-lattice."""
    x = sd._lattice_coords(lam)
    r = np.rint(x)
    if np.max(np.abs(x - r) / np.maximum(1.0, np.abs(x))) > tol:
        raise LatticeMembership(f"{np.asarray(lam)} is not a lattice point (coords {x})")
    return r.astype(np.int64)


def check_cocycle_identity(sd: SymplecticData, v, lam, z) -> float:
    """Residual |pi H(v,lam) - 2 pi i E(v,lam) - (F(z+lam) - F(z))|.

    F(z) = -pi (i E(v, z) - E(iv, z)).
    """
    v = np.asarray(v, dtype=np.complex128)
    lam = np.asarray(lam, dtype=np.complex128)
    z = np.asarray(z, dtype=np.complex128)
    lattice_coordinates(sd, lam)

    def F(x):
        return -np.pi * (1j * sd.E_real(v, x) - sd.E_real(1j * v, x))

    lhs = np.pi * sd.H_form(v, lam)
    rhs = 2j * np.pi * sd.E_real(v, lam) + (F(z + lam) - F(z))
    return float(abs(lhs - rhs))


def appell_humbert_residual(sd: SymplecticData, z, w) -> float:
    """|H(z,w) - iE(z,w) - E(iz,w)| with H taken from the stored matrix."""
    z = np.asarray(z, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    return float(abs(sd.H_form(z, w) - 1j * sd.E_real(z, w) - sd.E_real(1j * z, w)))


def lattice_basis_residual(sd: SymplecticData) -> float:
    """max |Im H(b_i, b_j) - E_ij| over all pairs of lattice basis vectors."""
    g = sd.pm.g
    vecs = [sd.pm.tau[:, i] for i in range(g)] + [sd.D.d[i] * np.eye(g)[i].astype(complex) for i in range(g)]
    worst = 0.0
    for i, bi in enumerate(vecs):
        for j, bj in enumerate(vecs):
            worst = max(worst, abs(sd.H_form(bi, bj).imag - sd.E[i, j]))
    return worst


# -- period-matrix file format -------------------------------------------------

def dump_period_file(path, pm: PeriodMatrix, D: PolarizationType) -> None:
    doc = {
        "g": pm.g,
        "d": list(D.d),
        "tau_re": [float(x) for x in pm.tau.real.ravel()],
        "tau_im": [float(x) for x in pm.tau.imag.ravel()],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_period_file(path, symmetry_tol: float = 1e-12) -> tuple[PeriodMatrix, PolarizationType]:
    doc = json.loads(Path(path).read_text())
    g = int(doc["g"])
    D = PolarizationType(doc["d"])
    if D.g != g:
        raise ValueError(f"'d' has {D.g} entries but g = {g}")
    re = np.array(doc["tau_re"], dtype=float).reshape(g, g)
    im = np.array(doc["tau_im"], dtype=float).reshape(g, g)
    return validate_period_matrix(re + 1j * im, symmetry_tol), D
