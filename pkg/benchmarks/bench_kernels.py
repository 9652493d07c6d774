"""Compare the numba kernels with the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--N 64] [--repeat 5]

Each kernel is run once to trigger compilation, then timed; the two paths
are also compared for agreement. The end-to-end velocity timing re-runs this
script in a subprocess with G2FLOW_JIT=0 so the whole package takes the
fallback path.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from g2flow import _kernels as K
from g2flow.families import frame_phi
from g2flow.geometry import GridSpec


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(N, repeat):
    spec = GridSpec(7, 1, N)
    phi = frame_phi(spec, 0.05, 0)
    flat = np.ascontiguousarray(phi.reshape(spec.npts, -1))
    src, dst, sgn = K.star_table(7, 3)
    rows = []

    out_j = np.zeros((spec.npts, 7**4))
    out_n = np.zeros_like(out_j)
    if K.HAVE_NUMBA:
        K._star_jit(flat, src, dst, sgn, out_j)
        tj = best(lambda: K._star_jit(flat, src, dst, sgn, out_j), repeat)
    else:
        tj = float("nan")
    tn = best(lambda: K._star_numpy(flat, src, dst, sgn, out_n), repeat)
    rows.append(("flat_star", tj, tn, float(np.max(np.abs(out_j - out_n)))))

    eta = np.ascontiguousarray(K.flat_star(phi, 7, 3))
    dj = np.empty((spec.npts, 7, 7))
    if K.HAVE_NUMBA:
        K._density_jit(phi, eta, dj)
        tj = best(lambda: K._density_jit(phi, eta, dj), repeat)

    def dens_np():
        w = np.einsum("njcd,nabcd->njab", phi, eta)
        return 0.25 * np.einsum("niab,njab->nij", phi, w)

    dn = dens_np()
    tn = best(dens_np, repeat)
    rows.append(("metric_density", tj, tn, float(np.max(np.abs(dj - dn)))))

    f = np.ascontiguousarray(phi.reshape(N, -1))
    h = spec.h
    gj = np.empty_like(f)
    if K.HAVE_NUMBA:
        K._d1_jit(f, h, gj)
        tj = best(lambda: K._d1_jit(f, h, gj), repeat)
    c = 1.0 / (12.0 * h)

    def d1_np():
        return c * (-np.roll(f, -2, 0) + 8.0 * np.roll(f, -1, 0) - 8.0 * np.roll(f, 1, 0) + np.roll(f, 2, 0))

    gn = d1_np()
    tn = best(d1_np, repeat)
    rows.append(("periodic_d1", tj, tn, float(np.max(np.abs(gj - gn)))))
    return rows


def velocity_time(N, repeat):
    from g2flow.flow import velocity

    spec = GridSpec(7, 1, N)
    phi = frame_phi(spec, 0.05, 0)
    velocity(phi, spec)
    return best(lambda: velocity(phi, spec), repeat)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--velocity-only", action="store_true")
    args = ap.parse_args()
    if args.velocity_only:
        print(f"{velocity_time(args.N, args.repeat):.6f}")
        return
    print(f"backend {K.backend()}  N={args.N}  (one active direction)")
    print(f"{'kernel':<16s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for name, tj, tn, diff in kernel_rows(args.N, args.repeat):
        print(f"{name:<16s} {1e3 * tj:11.3f} {1e3 * tn:11.3f} {tn / tj:8.2f} {diff:10.2e}")
    cmd = [sys.executable, __file__, "--N", str(args.N), "--repeat", str(args.repeat), "--velocity-only"]
    tj = float(subprocess.check_output(cmd, env={**os.environ, "G2FLOW_JIT": "1"}))
    tn = float(subprocess.check_output(cmd, env={**os.environ, "G2FLOW_JIT": "0"}))
    print(f"{'velocity':<16s} {1e3 * tj:11.3f} {1e3 * tn:11.3f} {tn / tj:8.2f}")


if __name__ == "__main__":
    main()
