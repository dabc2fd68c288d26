"""Time the numba and numpy lattice-sum kernels on identical inputs.

    python3 benchmarks/bench_theta.py [--repeat 5]

The numba kernel is compiled once before timing. Both kernels see the same
points and arguments, and the largest disagreement is printed next to the times.
"""
import argparse
import time

import numpy as np

from thetamul import _kernels
from thetamul.experiments import random_siegel
from thetamul.theta import Characteristic, _geometry, _points, truncation_radius


def workload(g, n_z, eps, seed):
    pm = random_siegel(g, seed)
    rng = np.random.default_rng(seed)
    Z = rng.uniform(0, 1, (n_z, g)) @ pm.tau.T + rng.uniform(0, 1, (n_z, g))
    geo = _geometry(pm)
    y = Z.imag
    log_pref = np.pi * np.einsum("mi,ij,mj->m", y, geo.Yinv, y)
    R = truncation_radius(eps, g, geo.lam_min, float(log_pref.max()))
    a = Characteristic.make([0] * g).a_array()
    v = _points(a, -(y @ geo.Yinv), R, geo)
    return np.ascontiguousarray(v), np.ascontiguousarray(pm.tau), np.ascontiguousarray(Z)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--eps", type=float, default=1e-12)
    args = ap.parse_args(argv)
    if _kernels.theta_sum_numba is None:
        raise SystemExit("numba is not installed")

    v, tau, Z = workload(1, 4, args.eps, 0)
    _kernels.theta_sum_numba(v, tau, Z)

    print(f"{'g':>2} {'points':>8} {'args':>5} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max |diff|':>11}")
    for g, n_z in ((1, 64), (2, 64), (2, 512), (3, 64), (3, 256)):
        v, tau, Z = workload(g, n_z, args.eps, g)
        t_np, r_np = best_of(lambda: _kernels.theta_sum_numpy(v, tau, Z), args.repeat)
        t_nb, r_nb = best_of(lambda: _kernels.theta_sum_numba(v, tau, Z), args.repeat)
        diff = np.abs(r_np - r_nb).max()
        print(f"{g:>2} {len(v):>8} {n_z:>5} {1e3 * t_np:>11.2f} {1e3 * t_nb:>11.2f} {t_np / t_nb:>8.2f} {diff:>11.1e}")


if __name__ == "__main__":
    main()
