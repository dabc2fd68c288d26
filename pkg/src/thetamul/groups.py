"""Finite group bookkeeping for K(L^2)_1 = Z_{2d_1} + ... + Z_{2d_g}.

An element is stored as its integer vector c with 0 <= c_i < 2 d_i; the point
of the torus it stands for is (2D)^{-1} c. Inside this group:

* 2K1   -- elements with every c_i even (the index set of H^0(L)),
* Z2    -- the 2-torsion {D eps}, eps in {0,1}^g,
* Z2'   -- Z2 intersected with 2K1 (eps_i = 0 on odd d_i),
* W     -- the coordinate complement of Z2' in Z2 (eps_i = 0 on even d_i),
* U     -- transversal of Z2 in K1, chosen as 0 <= c_i < d_i.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import prod

import numpy as np

from .avcore import PolarizationType
from .errors import InjectivityOfPsiFailed, NotHalvable, SizeLimit

DEFAULT_SIZE_CAP = 10**6


@dataclass(frozen=True, order=True, slots=True)
class GroupElement:
    c: tuple[int, ...]
    mod: tuple[int, ...]

    @classmethod
    def make(cls, c, D: PolarizationType) -> "GroupElement":
        mod = tuple(2 * d for d in D.d)
        return cls(tuple(int(x) % m for x, m in zip(c, mod)), mod)

    def __add__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(tuple((a + b) % m for a, b, m in zip(self.c, other.c, self.mod)), self.mod)

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(tuple((a - b) % m for a, b, m in zip(self.c, other.c, self.mod)), self.mod)

    def __neg__(self) -> "GroupElement":
        return GroupElement(tuple((-a) % m for a, m in zip(self.c, self.mod)), self.mod)

    def double(self) -> "GroupElement":
        return self + self

    def is_zero(self) -> bool:
        return not any(self.c)

    def characteristic(self) -> tuple[Fraction, ...]:
        """The rational point (2D)^{-1} c."""
        return tuple(Fraction(a, m) for a, m in zip(self.c, self.mod))

    def __str__(self):
        return "(" + ",".join(map(str, self.c)) + ")"


def _check_size(n: int, cap: int) -> None:
    if n > cap:
        raise SizeLimit(f"group of order {n} exceeds enumeration cap {cap}")


def enumerate_K1(D: PolarizationType, cap: int = DEFAULT_SIZE_CAP) -> list[GroupElement]:
    mod = tuple(2 * d for d in D.d)
    _check_size(prod(mod), cap)
    return [GroupElement(c, mod) for c in itertools.product(*(range(m) for m in mod))]


def subgroup_2K1(D: PolarizationType, cap: int = DEFAULT_SIZE_CAP) -> list[GroupElement]:
    mod = tuple(2 * d for d in D.d)
    _check_size(D.h0, cap)
    return [GroupElement(c, mod) for c in itertools.product(*(range(0, m, 2) for m in mod))]


def _two_torsion(D: PolarizationType, free_axes) -> list[GroupElement]:
    mod = tuple(2 * d for d in D.d)
    choices = [(0, d) if i in free_axes else (0,) for i, d in enumerate(D.d)]
    return [GroupElement(c, mod) for c in itertools.product(*choices)]


def subgroup_Z2(D: PolarizationType) -> list[GroupElement]:
    return _two_torsion(D, set(range(D.g)))


def even_axes(D: PolarizationType) -> tuple[int, ...]:
    return tuple(i for i, d in enumerate(D.d) if d % 2 == 0)


def odd_axes(D: PolarizationType) -> tuple[int, ...]:
    return tuple(i for i, d in enumerate(D.d) if d % 2)


def subgroup_Z2prime(D: PolarizationType) -> list[GroupElement]:
    return _two_torsion(D, set(even_axes(D)))


def complement_W(D: PolarizationType) -> list[GroupElement]:
    W = _two_torsion(D, set(odd_axes(D)))
    Zp = set(subgroup_Z2prime(D))
    Z2 = set(subgroup_Z2(D))
    # complement axioms, checked rather than assumed
    if set(W) & Zp != {GroupElement.make((0,) * D.g, D)} or {w + z for w in W for z in Zp} != Z2:
        raise RuntimeError(f"coordinate complement of Z2' fails for D={D}")
    return W


def transversal_U(D: PolarizationType, cap: int = DEFAULT_SIZE_CAP) -> list[GroupElement]:
    mod = tuple(2 * d for d in D.d)
    _check_size(D.h0, cap)
    return [GroupElement(c, mod) for c in itertools.product(*(range(d) for d in D.d))]


@dataclass(frozen=True)
class CharacterRho:
    """A +-1 character of Z2', given by its values on the generators d_i e_i (i even axis)."""

    signs: tuple[int, ...]
    axes: tuple[int, ...]

    def __call__(self, z: GroupElement) -> int:
        val = 1
        for sgn, i in zip(self.signs, self.axes):
            if z.c[i]:
                val *= sgn
        return val

    def is_trivial(self) -> bool:
        return all(s == 1 for s in self.signs)

    def __str__(self):
        return "[" + ",".join("+" if s > 0 else "-" for s in self.signs) + "]"


def characters_of_Z2prime(D: PolarizationType) -> list[CharacterRho]:
    axes = even_axes(D)
    # (+1,...) first, then lexicographic with +1 < -1
    return [CharacterRho(tuple(1 - 2 * b for b in bits), axes) for bits in itertools.product((0, 1), repeat=len(axes))]


def halve(x: GroupElement) -> GroupElement:
    """Canonical u with 2u = x; the full preimage is u + Z2."""
    if any(a % 2 for a in x.c):
        raise NotHalvable(f"{x} has an odd coordinate")
    return GroupElement(tuple(a // 2 for a in x.c), x.mod)


def halve_all(x: GroupElement, D: PolarizationType) -> list[GroupElement]:
    u = halve(x)
    return sorted(u + z for z in subgroup_Z2(D))


def class_rep(x: GroupElement, subgroup: list[GroupElement]) -> GroupElement:
    """Lexicographically smallest element of the coset x + subgroup."""
    return min(x + z for z in subgroup)


def pair_class_rep(x1: GroupElement, x2: GroupElement, subgroup) -> tuple[GroupElement, GroupElement]:
    """Smallest representative of (x1, x2) under the diagonal action of ``subgroup``."""
    return min((x1 + z, x2 + z) for z in subgroup)


@dataclass
class PsiTable:
    domain: list[tuple[GroupElement, GroupElement]]  # (u in U, t in 2K1/Z2')
    image: list[tuple[GroupElement, GroupElement]]  # class reps in (2K1 x 2K1)/Delta_Z2'
    domain_size: int
    codomain_size: int
    bijective: bool


def psi_pairing(D: PolarizationType, cap: int = DEFAULT_SIZE_CAP) -> PsiTable:
    """Pairing (u, t) -> [(2u - t, t)] with u in U and t in 2K1/Z2'.

    In the (y1, y2) language this is y1 = u, y2 = u - t, (x1, x2) = (y1 + y2, y1 - y2).
    Cardinalities and injectivity are verified by enumeration.
    """
    U = transversal_U(D, cap)
    two_k1 = subgroup_2K1(D, cap)
    Zp = subgroup_Z2prime(D)
    t_reps = sorted({class_rep(t, Zp) for t in two_k1})
    domain = [(u, t) for u in U for t in t_reps]
    image = []
    seen = {}
    for u, t in domain:
        y2 = u - t
        cls = pair_class_rep(u + y2, u - y2, Zp)
        if cls in seen:
            raise InjectivityOfPsiFailed(
                f"D={D}: (u,t)=({u},{t}) and {seen[cls]} both map to class {cls[0]},{cls[1]}"
            )
        seen[cls] = (u, t)
        image.append(cls)
    codomain = {pair_class_rep(a, b, Zp) for a in two_k1 for b in two_k1}
    expected = D.h0 * D.h0 // 2 ** (D.g - D.s)
    return PsiTable(
        domain=domain,
        image=image,
        domain_size=len(domain),
        codomain_size=len(codomain),
        bijective=len(domain) == len(codomain) == expected and set(image) == codomain,
    )


# -- vectorised enumeration --------------------------------------------------------
# Elements of K1 as rows of an integer array; subgroups are cut out by their
# defining predicates, not built from generators, so these counts are an
# independent check of the constructions above.

def _k1_array(D: PolarizationType, cap: int) -> tuple[np.ndarray, np.ndarray]:
    mod = 2 * np.array(D.d, dtype=np.int64)
    _check_size(int(np.prod(mod)), cap)
    c = np.indices(tuple(mod)).reshape(D.g, -1).T
    return c, mod


def _codes(c: np.ndarray, mod: np.ndarray) -> np.ndarray:
    """Mixed-radix integer code of each row (a bijection K1 -> range(|K1|))."""
    return np.ravel_multi_index(tuple(np.moveaxis(c % mod, -1, 0)), tuple(mod))


def group_orders(D: PolarizationType, cap: int = DEFAULT_SIZE_CAP) -> dict:
    """Orders of K1, 2K1, Z2, Z2', W, U found by filtering K1 with each predicate."""
    c, mod = _k1_array(D, cap)
    d = mod // 2
    two_k1 = np.all(c % 2 == 0, axis=1)
    z2 = np.all((2 * c) % mod == 0, axis=1)
    z2p = z2 & two_k1
    w = z2 & np.all(c[:, d % 2 == 0] == 0, axis=1)
    # complement axioms: trivial intersection and W + Z2' = Z2
    sums = _codes(c[w][:, None, :] + c[z2p][None, :, :], mod).ravel()
    if np.count_nonzero(w & z2p) != 1 or set(sums.tolist()) != set(_codes(c[z2], mod).tolist()):
        raise RuntimeError(f"coordinate complement of Z2' fails for D={D}")
    return {
        "K1": len(c),
        "2K1": int(two_k1.sum()),
        "Z2": int(z2.sum()),
        "Z2prime": int(z2p.sum()),
        "W": int(w.sum()),
        "U": int(np.all(c < d, axis=1).sum()),
    }


def psi_counts(D: PolarizationType, full_limit: int = 10**5, cap: int = DEFAULT_SIZE_CAP) -> dict:
    """Cardinality and injectivity data for the pairing (u, t) -> [(2u - t, t)].

    The codomain is counted with Burnside's lemma, enumerating the fixed points of
    every z in Z2' on 2K1. The image itself is enumerated (and checked for
    repeats) when the domain has at most ``full_limit`` elements.
    """
    c, mod = _k1_array(D, cap)
    d = mod // 2
    ev = c[np.all(c % 2 == 0, axis=1)]
    Zp = c[np.all((2 * c) % mod == 0, axis=1) & np.all(c % 2 == 0, axis=1)]
    orbit = _codes(ev[:, None, :] + Zp[None, :, :], mod)
    t = ev[orbit.min(axis=1) == _codes(ev, mod)]
    U = c[np.all(c < d, axis=1)]
    fixed = sum(int(np.all((ev + z) % mod == ev, axis=1).sum()) ** 2 for z in Zp)
    if fixed % len(Zp):
        raise RuntimeError(f"Burnside count is not integral for D={D}")
    out = {
        "domain": len(U) * len(t),
        "codomain": fixed // len(Zp),
        "expected": D.h0 * D.h0 // 2 ** (D.g - D.s),
        "image_enumerated": False,
        "injective": None,
    }
    if out["domain"] <= full_limit:
        a = (2 * U[:, None, :] - t[None, :, :]).reshape(-1, D.g)
        b = np.broadcast_to(t[None, :, :], (len(U), len(t), D.g)).reshape(-1, D.g)
        n = int(np.prod(mod))
        cls = (_codes(a[:, None, :] + Zp[None, :, :], mod) * n + _codes(b[:, None, :] + Zp[None, :, :], mod)).min(axis=1)
        out["image_enumerated"] = True
        out["injective"] = len(np.unique(cls)) == len(cls)
    return out


def group_report(D: PolarizationType) -> dict:
    """Plain-data dump of every group used downstream (for ``dump-groups``)."""
    fmt = lambda xs: [list(x.c) for x in xs]  # noqa: E731
    psi = psi_pairing(D)
    return {
        "d": list(D.d),
        "g": D.g,
        "s": D.s,
        "K1": fmt(enumerate_K1(D)),
        "2K1": fmt(subgroup_2K1(D)),
        "Z2": fmt(subgroup_Z2(D)),
        "Z2prime": fmt(subgroup_Z2prime(D)),
        "W": fmt(complement_W(D)),
        "U": fmt(transversal_U(D)),
        "characters": [list(r.signs) for r in characters_of_Z2prime(D)],
        "psi": {
            "bijective": psi.bijective,
            "domain_size": psi.domain_size,
            "codomain_size": psi.codomain_size,
            "table": [[list(u.c), list(t.c), list(a.c), list(b.c)] for (u, t), (a, b) in zip(psi.domain, psi.image)],
        },
    }
