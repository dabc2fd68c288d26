"""Theta bases of H^0(A, L) and H^0(A, L^2) and their evaluation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .avcore import PeriodMatrix, PolarizationType
from .errors import DegenerateSampling
from .groups import GroupElement, enumerate_K1, subgroup_2K1
from .theta import DEFAULT_EPS, Characteristic, theta_batch

INDEPENDENCE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class SectionBasis:
    """Indexed theta sections of L (level 1) or L^2 (level 2).

    Entry x evaluates to theta[(2D)^{-1} c_x; 0](level*z, level*tau).
    """

    level: int
    D: PolarizationType
    tau: PeriodMatrix
    indices: tuple[GroupElement, ...]
    characteristics: tuple[Characteristic, ...]

    def __len__(self):
        return len(self.indices)

    def position(self, x: GroupElement) -> int:
        return self.indices.index(x)

    def evaluate_all(self, Z, eps: float = DEFAULT_EPS) -> np.ndarray:
        """(len(basis), len(Z)) matrix of section values; columns follow rows of Z."""
        Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
        tau = self.tau.scaled(self.level)
        return np.array([theta_batch(ch, self.level * Z, tau, eps)[0] for ch in self.characteristics])


def _basis(level, D, tau, indices):
    if tau.g != D.g:
        raise ValueError(f"tau is {tau.g}x{tau.g} but type {D} has g={D.g}")
    chars = tuple(Characteristic.make(x.characteristic()) for x in indices)
    return SectionBasis(level, D, tau, tuple(indices), chars)


def basis_L(D: PolarizationType, tau: PeriodMatrix) -> SectionBasis:
    return _basis(1, D, tau, subgroup_2K1(D))


def basis_L2(D: PolarizationType, tau: PeriodMatrix) -> SectionBasis:
    return _basis(2, D, tau, enumerate_K1(D))


@dataclass(frozen=True, eq=False)
class SectionVector:
    basis: SectionBasis
    coeffs: np.ndarray

    def __post_init__(self):
        if len(self.coeffs) != len(self.basis):
            raise ValueError(f"{len(self.coeffs)} coefficients for a basis of size {len(self.basis)}")


def evaluate(v: SectionVector, z, eps: float = DEFAULT_EPS) -> complex:
    vals = v.basis.evaluate_all(np.atleast_2d(z), eps)[:, 0]
    return complex(np.asarray(v.coeffs) @ vals)


def sample_points(tau: PeriodMatrix, D: PolarizationType, n: int, rng) -> np.ndarray:
    """z = tau u + D v with u, v uniform in [0,1)^g, one point per row."""
    g = tau.g
    u = rng.random((n, g))
    v = rng.random((n, g))
    return u @ tau.tau.T + v * D.array


@dataclass
class IndependenceReport:
    n_samples: int
    sigma_min: float
    sigma_max: float
    rank: int
    independent: bool


def linear_independence_check(basis: SectionBasis, n_samples=None, seed=0, eps=DEFAULT_EPS) -> IndependenceReport:
    """Numerical rank of the basis evaluated at pseudorandom points of the fundamental domain."""
    n_samples = n_samples or 2 * len(basis)
    if n_samples < 2 * len(basis):
        raise ValueError(f"need at least {2 * len(basis)} samples")
    rng = np.random.default_rng(seed)
    Z = sample_points(basis.tau, basis.D, n_samples, rng)
    M = basis.evaluate_all(Z, eps).T
    # row scaling leaves the rank alone and removes the per-point dynamic range
    M = M / np.abs(M).max(axis=1, keepdims=True)
    sv = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(sv > INDEPENDENCE_TOL * sv[0]))
    if rank < len(basis):
        raise DegenerateSampling(f"evaluation matrix has rank {rank} < {len(basis)} (sigma={sv})")
    return IndependenceReport(n_samples, float(sv[-1]), float(sv[0]), rank, True)
