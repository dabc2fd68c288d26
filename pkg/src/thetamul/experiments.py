"""Seeded moduli sweeps, the injectivity experiment suite and the identity checks."""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from .avcore import (
    PeriodMatrix,
    PolarizationType,
    appell_humbert_residual,
    check_cocycle_identity,
    lattice_basis_residual,
    load_period_file,
    symplectic_data,
    validate_period_matrix,
)
from .errors import BlockLeak, ThetaMulError, VerdictMismatch
from .multmap import (
    RANK_TOL,
    block_structure_check,
    factorization_residual,
    injectivity_report,
    mult_matrix_formula,
    mult_matrix_interpolation,
    pullback_invariance_check,
    relative_difference,
)
from .theta import DEFAULT_EPS, Characteristic, ThetaConstantCache, quasiperiodicity_factor, theta_batch

SCHEMA_VERSION = 1
OUT_ENV = "THETAMUL_OUT"
TAU_MODES = ("random", "file", "diagonal-product", "perturbed-product")


def random_siegel(g: int, seed, spread: float = 1.0) -> PeriodMatrix:
    """tau = S + i(Q^T Q + I), entries of S (symmetric) and Q uniform in [-spread, spread]."""
    rng = np.random.default_rng(seed)
    S = rng.uniform(-spread, spread, (g, g))
    S = np.triu(S) + np.triu(S, 1).T
    Q = rng.uniform(-spread, spread, (g, g))
    return validate_period_matrix(S + 1j * (Q.T @ Q + np.eye(g)))


@dataclass
class SweepConfig:
    D: PolarizationType
    n_samples: int = 10
    seed: int = 0
    eps: float = DEFAULT_EPS
    rank_tol: float = RANK_TOL
    tau_mode: str = "random"
    delta: float = 0.0
    spread: float = 1.0
    tau_file: str | None = None

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.eps <= 0 or self.rank_tol <= 0:
            raise ValueError("eps and rank_tol must be positive")
        if self.tau_mode not in TAU_MODES:
            raise ValueError(f"tau_mode must be one of {TAU_MODES}")
        if self.tau_mode == "file" and not self.tau_file:
            raise ValueError("tau_mode 'file' needs tau_file")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["D"] = list(self.D.d)
        return d


def sample_tau(cfg: SweepConfig, k: int) -> PeriodMatrix:
    g = cfg.D.g
    if cfg.tau_mode == "random":
        return random_siegel(g, [cfg.seed, k], cfg.spread)
    if cfg.tau_mode == "file":
        pm, _ = load_period_file(cfg.tau_file)
        return pm
    diag = np.array([random_siegel(1, [cfg.seed, k, i], cfg.spread).tau[0, 0] for i in range(g)])
    tau = np.diag(diag)
    if cfg.tau_mode == "perturbed-product":
        rng = np.random.default_rng([cfg.seed, k, g])
        P = rng.uniform(-1, 1, (g, g)) + 1j * rng.uniform(-1, 1, (g, g))
        P = np.triu(P, 1) + np.triu(P, 1).T
        tau = tau + cfg.delta * P
    return validate_period_matrix(tau)


def run_sample(cfg: SweepConfig, k: int) -> tuple[dict, float]:
    """One sweep record plus its wall time (kept out of the record for byte-stability)."""
    start = time.perf_counter()
    rec: dict = {"sample": k}
    try:
        pm = sample_tau(cfg, k)
        rec["tau_fingerprint"] = pm.fingerprint()
        rec["tau_re"] = pm.tau.real.ravel().tolist()
        rec["tau_im"] = pm.tau.imag.ravel().tolist()
        rec["lambda_min"] = pm.lambda_min
        cache = ThetaConstantCache()
        rep = injectivity_report(cfg.D, pm, cfg.eps, cfg.rank_tol, cache, raise_on_mismatch=False)
        rec.update(
            verdict=rep.verdict,
            block_injective=rep.block_injective,
            svd_injective=rep.svd_injective,
            block_margin=rep.block_margin,
            svd_margin=rep.svd_margin,
            block_shapes=[list(b.shape) for b in rep.blocks],
        )
        try:
            rec["block_leak"] = block_structure_check(cfg.D, pm, cfg.eps, cache)
        except BlockLeak as exc:
            rec["block_leak"] = exc.residual
            rec["verdict"] = "block-leak"
        if cfg.tau_mode == "diagonal-product":
            rec["factorization_residual"] = float(factorization_residual(cfg.D, pm, cfg.eps, cache))
        if cfg.tau_mode == "perturbed-product":
            rec["delta"] = cfg.delta
        rec["error"] = None
    except ThetaMulError as exc:
        rec["verdict"] = "error"
        rec["error"] = f"{type(exc).__name__}: {exc}"
    return rec, time.perf_counter() - start


def aggregate(records: list[dict]) -> dict:
    ok = [r for r in records if r["error"] is None]
    margins = [min(r["block_margin"], r["svd_margin"]) for r in ok]
    fact = [r["factorization_residual"] for r in ok if "factorization_residual" in r]
    n = len(records)
    return {
        "n_samples": n,
        "n_injective": sum(r["verdict"] == "injective" for r in records),
        "fraction_injective": sum(r["verdict"] == "injective" for r in records) / n if n else 0.0,
        "n_deficient": sum(r["verdict"] == "deficient" for r in records),
        "n_mismatch": sum(r["verdict"] == "mismatch" for r in records),
        "n_block_leak": sum(r["verdict"] == "block-leak" for r in records),
        "n_errors": sum(r["error"] is not None for r in records),
        "worst_margin": min(margins) if margins else None,
        "max_block_leak": max((r["block_leak"] for r in ok), default=None),
        "max_factorization_residual": max(fact) if fact else None,
        "failures": [r["sample"] for r in records if r["verdict"] != "injective"],
    }


@dataclass
class SweepReport:
    config: dict
    records: list[dict]
    aggregate: dict
    timings: list[float] = field(default_factory=list)

    def summary(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "config": self.config, "aggregate": self.aggregate}

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "records.jsonl", "w") as fh:
            for r in self.records:
                fh.write(json.dumps(r, sort_keys=True) + "\n")
        (out / "summary.json").write_text(json.dumps(self.summary(), sort_keys=True, indent=1) + "\n")
        with open(out / "timings.jsonl", "w") as fh:
            for k, t in enumerate(self.timings):
                fh.write(json.dumps({"sample": k, "seconds": t}) + "\n")
        return out


def run_sweep(cfg: SweepConfig, jobs: int = 1, out_dir=None) -> SweepReport:
    work = partial(run_sample, cfg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, range(cfg.n_samples)))
    else:
        results = [work(k) for k in range(cfg.n_samples)]
    records = [r for r, _ in results]
    report = SweepReport(cfg.to_dict(), records, aggregate(records), [t for _, t in results])
    out_dir = out_dir or os.environ.get(OUT_ENV)
    if out_dir:
        report.write(out_dir)
    return report


def run_theorem_A_suite(cfg: SweepConfig, jobs: int = 1, out_dir=None) -> SweepReport:
    """Sweep restricted to types with every d_i in {1, 2}."""
    if any(d not in (1, 2) for d in cfg.D.d):
        raise ValueError(f"injectivity theorem covers d_i in {{1,2}} only, got {cfg.D}")
    return run_sweep(cfg, jobs, out_dir)


# -- identity checks -------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)


def default_fixtures(g1_only: bool = False) -> list[tuple[PolarizationType, PeriodMatrix]]:
    fx = [
        (PolarizationType([1]), validate_period_matrix([[1j]])),
        (PolarizationType([2]), validate_period_matrix([[1j]])),
        (PolarizationType([2]), random_siegel(1, 7)),
    ]
    if not g1_only:
        fx += [
            (PolarizationType([1, 2]), validate_period_matrix(np.eye(2) * 1j)),
            (PolarizationType([1, 2]), random_siegel(2, 7)),
            (PolarizationType([2, 2]), random_siegel(2, 8)),
        ]
    return fx


def _cocycle_worst(D, pm, rng, n=100) -> tuple[float, float]:
    sd = symplectic_data(pm, D)
    g = D.g
    worst_c, worst_h = 0.0, 0.0
    for _ in range(n):
        v = rng.normal(size=g) + 1j * rng.normal(size=g)
        z = rng.normal(size=g) + 1j * rng.normal(size=g)
        w = rng.normal(size=g) + 1j * rng.normal(size=g)
        lam = sd.lattice_point(rng.integers(-3, 4, g), rng.integers(-3, 4, g))
        scale = 1 + abs(np.pi * sd.H_form(v, lam))
        worst_c = max(worst_c, check_cocycle_identity(sd, v, lam, z) / scale)
        worst_h = max(worst_h, appell_humbert_residual(sd, z, w))
    return worst_c, max(worst_h, lattice_basis_residual(sd))


def quasiperiodicity_residual(pm: PeriodMatrix, rng, n=100, eps=1e-14) -> float:
    """Worst relative residual of theta(z + tau m + n) = factor * theta(z) over random draws."""
    g = pm.g
    worst = 0.0
    for _ in range(n):
        ch = Characteristic.make(rng.integers(0, 4, g) / 4, rng.integers(0, 4, g) / 4)
        m = rng.integers(-2, 3, g)
        nn = rng.integers(-2, 3, g)
        z = rng.uniform(0, 1, g) @ pm.tau.T + rng.uniform(0, 1, g)
        zs = np.vstack([z, z + pm.tau @ m + nn])
        vals, _ = theta_batch(ch, zs, pm, eps)
        f = quasiperiodicity_factor(ch, m, nn, z, pm)
        worst = max(worst, abs(vals[1] - f * vals[0]) / max(abs(vals[1]), abs(f * vals[0])))
    return worst


def verify_identities(fixtures=None, seed: int = 0, eps: float = DEFAULT_EPS, sabotage: bool = False) -> list[CheckResult]:
    """Run the property checks of every module on a fixture set."""
    fixtures = fixtures if fixtures is not None else default_fixtures()
    rng = np.random.default_rng(seed)
    results = []
    for D, pm in fixtures:
        tag = f"D={D} tau={pm.fingerprint()}"
        c, h = _cocycle_worst(D, pm, rng)
        results.append(CheckResult(f"cocycle {tag}", c, 1e-10))
        results.append(CheckResult(f"appell-humbert {tag}", h, 1e-10))
        results.append(CheckResult(f"quasi-periodicity {tag}", quasiperiodicity_residual(pm, rng, 20), 1e-9))
        F = mult_matrix_formula(D, pm, eps)
        if sabotage:
            entries = F.entries.copy()
            entries[0, 0] += 1e-3 * np.abs(entries).max()
            F = type(F)(F.rows, F.cols, entries, F.provenance)
        Interp = mult_matrix_interpolation(D, pm, eps, seed=seed)
        results.append(CheckResult(f"oracle-equivalence {tag}", relative_difference(F, Interp), 1e-8))
        try:
            leak = block_structure_check(D, pm, eps)
        except BlockLeak as exc:
            leak = exc.residual
        results.append(CheckResult(f"block-structure {tag}", leak, 1e-8))
        if D.s > 0:
            try:
                pb = pullback_invariance_check(D, pm, eps, seed=seed)
            except ThetaMulError as exc:
                pb = getattr(exc, "residual", np.inf) or np.inf
            results.append(CheckResult(f"pullback-invariance {tag}", pb, 1e-8))
        try:
            injectivity_report(D, pm, eps)
            results.append(CheckResult(f"verdict-consistency {tag}", 0.0, 0.0))
        except VerdictMismatch:
            results.append(CheckResult(f"verdict-consistency {tag}", 1.0, 0.0))
    return results
