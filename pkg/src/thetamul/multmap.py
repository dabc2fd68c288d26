"""The multiplication map mu: Sym^2 H^0(L) -> H^0(L^2) and its character blocks.

For x1, x2 in 2K1 put y1 = halve(x1 + x2) and y2 = y1 - x2. Then

    theta_{x1} * theta_{x2} = sum_{z in Z2} theta^{L2}_{y2+z}(0) * theta^{L2}_{y1+z}

which in classical normalisation reads
theta[a](z,tau) theta[b](z,tau) = sum_nu theta[(a+b+nu)/2](2z,2tau) theta[(a-b+nu)/2](0,2tau).

Blocks are indexed by (u, rho), u in the transversal U and rho a character of
Z2'. Block (u, rho) has one row per +- orbit of y2 in (u + 2K1)/Z2' whose
symmetrised source element survives in Sym^2, and one column per w in W; its
entries are C(y2, w, rho) = sum_{z in Z2'} rho(z) theta^{L2}_{y2+w+z}(0).
The u = 0 blocks are the matrices M_rho.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import subspace_angles

from .avcore import PeriodMatrix, PolarizationType
from .errors import (
    BlockLeak,
    EmptyKernel,
    IllConditioned,
    ResidualTooLarge,
    SpanMismatch,
    VerdictMismatch,
)
from .groups import (
    CharacterRho,
    GroupElement,
    characters_of_Z2prime,
    complement_W,
    enumerate_K1,
    halve,
    odd_axes,
    subgroup_2K1,
    subgroup_Z2,
    subgroup_Z2prime,
    transversal_U,
)
from .sections import basis_L, basis_L2, sample_points
from .theta import DEFAULT_EPS, Characteristic, theta_batch, theta_constant

RANK_TOL = 1e-8
BLOCK_LEAK_TOL = 1e-8
ORACLE_RESIDUAL_TOL = 1e-6
ORACLE_COND_MAX = 1e8
SPAN_TOL = 1e-8


Pair = tuple[GroupElement, GroupElement]


@dataclass(frozen=True, eq=False)
class MultMatrix:
    rows: tuple[GroupElement, ...]  # basis_L2 indices
    cols: tuple[Pair, ...]  # unordered pairs x1 <= x2 (or ordered pairs for the tensor matrix)
    entries: np.ndarray
    provenance: str

    @property
    def shape(self):
        return self.entries.shape


def level2_constants(D: PolarizationType, tau: PeriodMatrix, eps=DEFAULT_EPS, cache=None) -> dict:
    """theta[(2D)^{-1} k; 0](0, 2 tau) for every k in K1."""
    tau2 = tau.scaled(2)
    return {k: theta_constant(Characteristic.make(k.characteristic()), tau2, eps, cache).value for k in enumerate_K1(D)}


def sym2_pairs(D: PolarizationType) -> list[Pair]:
    xs = subgroup_2K1(D)
    return [(xs[i], xs[j]) for i in range(len(xs)) for j in range(i, len(xs))]


def ordered_pairs(D: PolarizationType) -> list[Pair]:
    xs = subgroup_2K1(D)
    return [(a, b) for a in xs for b in xs]


def formula_column(x1, x2, consts, row_pos, Z2, y1_shift=None) -> np.ndarray:
    y1 = halve(x1 + x2)
    if y1_shift is not None:
        y1 = y1 + y1_shift
    y2 = y1 - x2
    col = np.zeros(len(row_pos), dtype=np.complex128)
    for z in Z2:
        col[row_pos[y1 + z]] += consts[y2 + z]
    return col


def tensor_matrix_formula(D, tau, eps=DEFAULT_EPS, cache=None, y1_shift=None) -> MultMatrix:
    """mu on H^0(L) (x) H^0(L), columns indexed by ordered pairs."""
    consts = level2_constants(D, tau, eps, cache)
    rows = tuple(enumerate_K1(D))
    row_pos = {x: i for i, x in enumerate(rows)}
    Z2 = subgroup_Z2(D)
    cols = tuple(ordered_pairs(D))
    M = np.column_stack([formula_column(a, b, consts, row_pos, Z2, y1_shift) for a, b in cols])
    return MultMatrix(rows, cols, M, "formula")


def sym2_embedding(D) -> np.ndarray:
    """Linear map Sym^2 (monomial basis) -> tensor square: {x1,x2} -> (x1(x)x2 + x2(x)x1)/2."""
    ordered = {p: i for i, p in enumerate(ordered_pairs(D))}
    sym = sym2_pairs(D)
    J = np.zeros((len(ordered), len(sym)))
    for j, (a, b) in enumerate(sym):
        J[ordered[(a, b)], j] += 0.5
        J[ordered[(b, a)], j] += 0.5
    return J


def mult_matrix_formula(D, tau, eps=DEFAULT_EPS, cache=None, y1_shift=None) -> MultMatrix:
    full = tensor_matrix_formula(D, tau, eps, cache, y1_shift)
    return MultMatrix(full.rows, tuple(sym2_pairs(D)), full.entries @ sym2_embedding(D), "formula")


def mult_matrix_interpolation(D, tau, eps=DEFAULT_EPS, n_samples=None, seed=0, retries=3) -> MultMatrix:
    """Fit the products theta_{x1} theta_{x2} in the L^2 basis from point samples."""
    bl, bl2 = basis_L(D, tau), basis_L2(D, tau)
    n_min = 2 * len(bl2)
    n_samples = n_samples or n_min
    if n_samples < n_min:
        raise ValueError(f"need at least {n_min} samples, got {n_samples}")
    pairs = sym2_pairs(D)
    pos = {x: i for i, x in enumerate(bl.indices)}
    for attempt in range(retries):
        rng = np.random.default_rng([seed, attempt])
        Z = sample_points(tau, D, n_samples, rng)
        A = bl2.evaluate_all(Z, eps).T
        V = bl.evaluate_all(Z, eps)
        B = np.column_stack([V[pos[a]] * V[pos[b]] for a, b in pairs])
        # row scaling keeps the exact solution; column scaling is undone below
        rs = 1.0 / np.abs(A).max(axis=1)
        A = A * rs[:, None]
        B = B * rs[:, None]
        cs = 1.0 / np.linalg.norm(A, axis=0)
        A = A * cs
        cond = np.linalg.cond(A)
        if cond <= ORACLE_COND_MAX:
            break
    else:
        raise IllConditioned(f"sample matrix condition {cond:.3g} > {ORACLE_COND_MAX:g} after {retries} draws")
    X, *_ = np.linalg.lstsq(A, B, rcond=None)
    resid = np.linalg.norm(A @ X - B) / np.linalg.norm(B)
    if resid > ORACLE_RESIDUAL_TOL:
        raise ResidualTooLarge(f"least-squares residual {resid:.3g} > {ORACLE_RESIDUAL_TOL:g}")
    return MultMatrix(bl2.indices, tuple(pairs), X * cs[:, None], "interpolation")


def relative_difference(a: MultMatrix, b: MultMatrix) -> float:
    if a.rows != b.rows or a.cols != b.cols:
        raise ValueError("matrices are indexed differently")
    return float(np.abs(a.entries - b.entries).max() / np.abs(a.entries).max())


# -- character blocks ------------------------------------------------------------

@dataclass
class BlockRow:
    t: GroupElement  # y2 representative
    source: dict  # Sym^2 monomial pair -> coefficient


@dataclass
class BlockLayout:
    u: GroupElement
    rho: CharacterRho
    rows: list[BlockRow]
    W: list[GroupElement]


def block_layouts(D: PolarizationType) -> list[BlockLayout]:
    """Row/column bookkeeping of every (u, rho) block, independent of tau."""
    two_k1 = subgroup_2K1(D)
    Zp = subgroup_Z2prime(D)
    W = complement_W(D)
    out = []
    for u in transversal_U(D):
        for rho in characters_of_Z2prime(D):
            rows, seen = [], set()
            for t in sorted(u + x for x in two_k1):
                key = min(s + z for s in (t, -t) for z in Zp)
                if key in seen:
                    continue
                seen.add(key)
                x1, x2 = u + t, u - t
                src: dict = {}
                for z in Zp:
                    p = tuple(sorted((x1 + z, x2 + z)))
                    src[p] = src.get(p, 0) + rho(z)
                src = {p: c for p, c in src.items() if c != 0}
                if src:  # antisymmetric orbits vanish in Sym^2
                    rows.append(BlockRow(t, src))
            out.append(BlockLayout(u, rho, rows, W))
    return out


def C_value(t, w, rho, consts, Zp) -> complex:
    return sum(rho(z) * consts[t + w + z] for z in Zp)


@dataclass
class BlockReport:
    u: GroupElement
    rho: CharacterRho
    row_index: list[GroupElement]
    col_index: list[GroupElement]
    matrix: np.ndarray
    singular_values: np.ndarray
    rank: int
    margin: float
    verdict: str

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def full_rank(self) -> bool:
        return self.verdict == "full-rank"


def character_blocks(D, tau, eps=DEFAULT_EPS, rank_tol=RANK_TOL, cache=None, consts=None) -> list[BlockReport]:
    """Blocks M_{u,rho}; rank is counted against the largest singular value over all blocks."""
    consts = consts or level2_constants(D, tau, eps, cache)
    Zp = subgroup_Z2prime(D)
    layouts = block_layouts(D)
    mats, svs = [], []
    for lay in layouts:
        M = np.array([[C_value(r.t, w, lay.rho, consts, Zp) for w in lay.W] for r in lay.rows], dtype=np.complex128)
        M = M.reshape(len(lay.rows), len(lay.W))
        mats.append(M)
        svs.append(np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(0))
    scale = max((s[0] for s in svs if s.size), default=0.0)
    reports = []
    for lay, M, sv in zip(layouts, mats, svs):
        need = M.shape[0]
        rank = int(np.sum(sv > rank_tol * scale)) if scale > 0 else 0
        if need == 0:
            margin = 1.0
        elif need > len(sv) or scale == 0:
            margin = 0.0
        else:
            margin = float(sv[need - 1] / scale)
        reports.append(
            BlockReport(
                lay.u, lay.rho, [r.t for r in lay.rows], list(lay.W), M, sv, rank, margin,
                "full-rank" if rank == need else "deficient",
            )
        )
    return reports


def _change_of_basis(D, layouts):
    """Source matrix S (Sym^2 monomials x symmetrised elements) and target matrix T (L^2 basis x combos)."""
    pairs = sym2_pairs(D)
    ppos = {p: i for i, p in enumerate(pairs)}
    rows = enumerate_K1(D)
    rpos = {x: i for i, x in enumerate(rows)}
    Zp = subgroup_Z2prime(D)
    src_cols, tgt_cols, src_block, tgt_block = [], [], [], []
    for b, lay in enumerate(layouts):
        for r in lay.rows:
            col = np.zeros(len(pairs))
            for p, c in r.source.items():
                col[ppos[p]] += c
            src_cols.append(col)
            src_block.append(b)
        for w in lay.W:
            col = np.zeros(len(rows))
            for z in Zp:
                col[rpos[lay.u + w + z]] += lay.rho(z)
            tgt_cols.append(col)
            tgt_block.append(b)
    S = np.column_stack(src_cols)
    T = np.column_stack(tgt_cols)
    return S, T, np.array(src_block), np.array(tgt_block)


@dataclass
class BlockStructure:
    leak: float  # largest off-block entry, relative to max |entry|
    block_value_residual: float  # in-block entries vs. C values
    source_rank: int
    sym2_dim: int


def block_structure(D, tau, eps=DEFAULT_EPS, cache=None, mm: MultMatrix | None = None) -> BlockStructure:
    mm = mm or mult_matrix_formula(D, tau, eps, cache)
    layouts = block_layouts(D)
    S, T, sb, tb = _change_of_basis(D, layouts)
    Bm = np.linalg.solve(T, mm.entries @ S)
    scale = np.abs(Bm).max()
    off = tb[:, None] != sb[None, :]
    leak = float(np.abs(Bm[off]).max() / scale) if off.any() else 0.0
    consts = level2_constants(D, tau, eps, cache)
    Zp = subgroup_Z2prime(D)
    worst = 0.0
    for b, lay in enumerate(layouts):
        sub = Bm[np.ix_(tb == b, sb == b)]
        for j, r in enumerate(lay.rows):
            for i, w in enumerate(lay.W):
                worst = max(worst, abs(sub[i, j] - C_value(r.t, w, lay.rho, consts, Zp)))
    n = D.h0
    return BlockStructure(leak, float(worst / scale), int(np.linalg.matrix_rank(S)), n * (n + 1) // 2)


def block_structure_check(D, tau, eps=DEFAULT_EPS, cache=None, tol=BLOCK_LEAK_TOL) -> float:
    """Largest entry coupling distinct (u, rho) blocks, relative to max |entry|. Raises BlockLeak above tol."""
    bs = block_structure(D, tau, eps, cache)
    if bs.source_rank != bs.sym2_dim:
        raise BlockLeak(f"symmetrised elements span {bs.source_rank} of {bs.sym2_dim} dimensions", np.inf)
    residual = max(bs.leak, bs.block_value_residual)
    if residual > tol:
        raise BlockLeak(f"off-block residual {residual:.3g} > {tol:g}", residual)
    return residual


# -- injectivity -----------------------------------------------------------------

@dataclass
class InjectivityReport:
    D: PolarizationType
    block_injective: bool
    block_margin: float
    svd_injective: bool
    svd_margin: float
    blocks: list[BlockReport] = field(repr=False)
    singular_values: np.ndarray = field(repr=False)

    @property
    def consistent(self) -> bool:
        return self.block_injective == self.svd_injective

    @property
    def injective(self) -> bool:
        return self.block_injective and self.svd_injective

    @property
    def margin(self) -> float:
        return min(self.block_margin, self.svd_margin)

    @property
    def m_rho_full_rank(self) -> bool:
        """Verdict from the u = 0 blocks alone; can miss kernels living in u != 0 blocks."""
        return all(b.full_rank for b in self.blocks if b.u.is_zero())

    @property
    def verdict(self) -> str:
        if not self.consistent:
            return "mismatch"
        return "injective" if self.injective else "deficient"


def injectivity_report(D, tau, eps=DEFAULT_EPS, rank_tol=RANK_TOL, cache=None, raise_on_mismatch=True) -> InjectivityReport:
    """Decide injectivity twice: all blocks full rank, and sigma_min of the Sym^2 matrix."""
    consts = level2_constants(D, tau, eps, cache)
    blocks = character_blocks(D, tau, eps, rank_tol, consts=consts)
    mm = mult_matrix_formula(D, tau, eps, cache)
    sv = np.linalg.svd(mm.entries, compute_uv=False)
    ncols = mm.shape[1]
    svd_margin = float(sv[ncols - 1] / sv[0]) if ncols <= len(sv) else 0.0
    report = InjectivityReport(
        D,
        block_injective=all(b.full_rank for b in blocks),
        block_margin=min(b.margin for b in blocks),
        svd_injective=svd_margin > rank_tol,
        svd_margin=svd_margin,
        blocks=blocks,
        singular_values=sv,
    )
    if raise_on_mismatch and not report.consistent:
        raise VerdictMismatch(
            f"block route says {report.block_injective}, SVD route says {report.svd_injective}", report
        )
    return report


@dataclass
class Sym2Vector:
    pairs: tuple[Pair, ...]
    coeffs: np.ndarray


def numerical_kernel(M: np.ndarray, rank_tol=RANK_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of {v : ||M v|| <= rank_tol * ||M||}."""
    _, sv, Vh = np.linalg.svd(M)
    rank = int(np.sum(sv > rank_tol * sv[0])) if sv.size and sv[0] > 0 else 0
    return Vh[rank:].conj().T


def kernel_basis(D, tau, eps=DEFAULT_EPS, rank_tol=RANK_TOL, cache=None, mm: MultMatrix | None = None) -> list[Sym2Vector]:
    mm = mm or mult_matrix_formula(D, tau, eps, cache)
    K = numerical_kernel(mm.entries, rank_tol)
    if K.shape[1] == 0:
        raise EmptyKernel(f"multiplication map is injective for D={D} at rank_tol={rank_tol:g}")
    return [Sym2Vector(mm.cols, K[:, j]) for j in range(K.shape[1])]


# -- product factorisation ---------------------------------------------------------

def factorization_residual(D, tau, eps=DEFAULT_EPS, cache=None) -> float:
    """For diagonal tau: max relative gap between every C(t,w,rho) and the product of one-variable constants."""
    t = tau.tau
    if np.abs(t - np.diag(np.diag(t))).max() > 0:
        raise ValueError("factorisation check needs a diagonal period matrix")
    consts = level2_constants(D, tau, eps, cache)
    Zp = subgroup_Z2prime(D)
    one_dim = []
    for i, d in enumerate(D.d):
        tau2 = 2 * t[i, i]
        vals = {}
        for k in range(2 * d):
            ch = Characteristic.make([Fraction(k, 2 * d)])
            vals[k] = theta_batch(ch, np.zeros((1, 1)), np.array([[tau2]]), eps)[0][0]
        one_dim.append(vals)
    worst, scale = 0.0, 0.0
    for lay in block_layouts(D):
        for r in lay.rows:
            for w in lay.W:
                full = C_value(r.t, w, lay.rho, consts, Zp)
                prod_val = 1.0 + 0j
                for i, d in enumerate(D.d):
                    zs = (0, d) if d % 2 == 0 else (0,)
                    sgn = dict(zip(lay.rho.axes, lay.rho.signs)).get(i, 1)
                    prod_val *= sum(
                        (sgn if zi else 1) * one_dim[i][(r.t.c[i] + w.c[i] + zi) % (2 * d)] for zi in zs
                    )
                worst = max(worst, abs(full - prod_val))
                scale = max(scale, abs(full))
    return worst / scale


# -- isogeny pullback --------------------------------------------------------------

def pullback_invariance_check(D, tau, eps=DEFAULT_EPS, n_samples=None, seed=0, tol=SPAN_TOL) -> float:
    """Compare span of the type-D basis with the Ker(h)-invariant part of the refined type.

    The refined lattice doubles the odd coordinates of D; Ker(h) is generated by the
    real translations d_i e_i on those coordinates. Returns sin of the largest
    principal angle between the two evaluation spans.
    """
    odd = odd_axes(D)
    if not odd:
        raise ValueError(f"type {D} has no odd entry; nothing to pull back")
    Dp = PolarizationType([2 * d if d % 2 else d for d in D.d], check_chain=False)
    bD, bP = basis_L(D, tau), basis_L(Dp, tau)
    n_samples = n_samples or 4 * len(bP)
    rng = np.random.default_rng(seed)
    Z = sample_points(tau, Dp, n_samples, rng)
    kernel = []
    for bits in np.ndindex(*(2,) * len(odd)):
        k = np.zeros(D.g)
        for b, i in zip(bits, odd):
            k[i] = b * D.d[i]
        kernel.append(k)
    avg = sum(bP.evaluate_all(Z + k, eps) for k in kernel) / len(kernel)
    ED = bD.evaluate_all(Z, eps)
    rs = 1.0 / np.abs(ED).max(axis=0)
    A = (ED * rs).T
    Bfull = (avg * rs).T
    U, sv, _ = np.linalg.svd(Bfull, full_matrices=False)
    r = int(np.sum(sv > 1e-8 * sv[0]))
    if r != len(bD):
        raise SpanMismatch(f"invariant subspace has dimension {r}, expected {len(bD)}", np.inf)
    residual = float(np.sin(subspace_angles(A, U[:, :r]).max()))
    if residual > tol:
        raise SpanMismatch(f"principal-angle residual {residual:.3g} > {tol:g}", residual)
    return residual


# -- dump format ------------------------------------------------------------------

def matrix_document(mm: MultMatrix) -> dict:
    def legend(x):
        return {"index": list(x.c), "characteristic": [str(q) for q in x.characteristic()]}

    return {
        "provenance": mm.provenance,
        "shape": list(mm.shape),
        "rows": [legend(x) for x in mm.rows],
        "cols": [[legend(a), legend(b)] for a, b in mm.cols],
        "entries": [[[float(v.real), float(v.imag)] for v in row] for row in mm.entries],
    }


def dumps_matrix(mm: MultMatrix) -> str:
    return json.dumps(matrix_document(mm), indent=1)
