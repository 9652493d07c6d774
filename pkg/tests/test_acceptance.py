"""Acceptance suite: one PASS/FAIL line per criterion.

Run with pytest (lines appear in the terminal summary) or directly with
`python tests/test_acceptance.py`.
"""

import filecmp
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from g2flow import cli
from g2flow import families as fam
from g2flow import flow as fl
from g2flow import spin7 as s7
from g2flow import taylorcheck as tc
from g2flow.geometry import GridSpec, curvature, ricci_identity_residual
from g2flow.soliton import (
    SolitonCandidate,
    auxiliary_identities,
    certify,
    gradient_identities,
    pw1_field,
    pw2_field,
    soliton_residual,
)
from g2flow.errors import NotASoliton
from g2flow.torsion import (
    G2State,
    bianchi_residual,
    laplacian_identity_residual,
    nabla_phi_residual,
    scalar_identity_residual,
)

try:
    from conftest import ACCEPTANCE
except ImportError:  # pragma: no cover
    ACCEPTANCE = {}

NS = (16, 32, 64)


def report(n: int, ok: bool, line: str):
    ok = bool(ok)
    ACCEPTANCE[n] = (ok, line)
    print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {line}")
    assert ok, line


def fitted_order(values, Ns=NS) -> float:
    return float(-np.polyfit(np.log(Ns), np.log(values), 1)[0])


# ----------------------------------------------------------------------


def test_criterion_01_exact_identities():
    t0 = time.perf_counter()
    rows = cli.identity_rows()
    elapsed = time.perf_counter() - t0
    worst = max(v for _, v in rows)
    report(1, worst == 0.0 and elapsed < 1.0, f"{len(rows)} identities, max error {worst:.1e}, {elapsed:.2f} s")


def test_criterion_02_taylor_suites():
    t0 = time.perf_counter()
    worst = {t: float(tc.run_suite(t, samples=200, seed=0).max()) for t in tc.TARGETS}
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-12 and elapsed < 10.0
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    report(2, ok, f"200 samples each: {detail}; {elapsed:.2f} s")


def test_criterion_03_nearly_g2():
    t0 = time.perf_counter()
    dt = 1e-4
    rows = fl.nearly_g2_ode(1.0, dt, 0.045)
    err = float(np.max(np.abs(rows[:, 1] - rows[:, 2])))
    horizon = fl.nearly_g2_horizon(1.0, dt)
    elapsed = time.perf_counter() - t0
    ok = err <= 1e-8 and abs(horizon - 0.05) <= dt and elapsed < 1.0
    report(3, ok, f"max |s - exact| {err:.1e}, horizon {horizon:.4f}, {elapsed:.3f} s")


def test_criterion_04_scaling():
    t0 = time.perf_counter()
    sp = GridSpec(7, 1, 32)
    worst = 0.0
    for seed in range(10):
        phi = fam.frame_phi(sp, 0.1, seed)
        v1 = fl.velocity(phi, sp)
        v8 = fl.velocity(8.0 * phi, sp)
        worst = max(worst, float(np.max(np.abs(v8 - 2.0 * v1)) / np.max(np.abs(2.0 * v1))))
    elapsed = time.perf_counter() - t0
    report(4, worst <= 1e-9 and elapsed < 30.0, f"10 fields, max relative {worst:.1e}, {elapsed:.1f} s")


def test_criterion_05_convergence_orders():
    t0 = time.perf_counter()
    res = {k: [] for k in ("bianchi", "scalar", "nabla_phi", "laplacian", "ricci_identity")}
    for N in NS:
        sp = GridSpec(7, 1, N)
        s = G2State(fam.frame_phi(sp, 0.05, 0), sp)
        res["bianchi"].append(bianchi_residual(s))
        res["scalar"].append(scalar_identity_residual(s))
        res["nabla_phi"].append(nabla_phi_residual(s))
        res["laplacian"].append(laplacian_identity_residual(s))
        res["ricci_identity"].append(ricci_identity_residual(fam.smooth_field(sp, 2, seed=3), s.curv))
    orders = {k: fitted_order(v) for k, v in res.items()}
    elapsed = time.perf_counter() - t0
    ok = all(abs(p - 4.0) <= 0.3 for p in orders.values()) and elapsed < 300
    report(5, ok, "orders " + ", ".join(f"{k} {p:.2f}" for k, p in orders.items()) + f"; {elapsed:.1f} s")


def test_criterion_06_evolution_consistency():
    t0 = time.perf_counter()
    dt, tc_ = 1e-4, 1e-3
    # dt-order and h-order: default central-4th stencil
    spatial = {q: [] for q in ("volume", "scalar", "torsion")}
    dt_orders = {}
    combined_c4 = 0.0
    for N in NS:
        sp = GridSpec(7, 1, N)
        phi = fam.frame_phi(sp, 0.05, 0)
        qs = fl.QUANTITIES if N == 32 else tuple(spatial)
        for q in qs:
            st = fl.dt_study(q, phi, sp, dt, t_centre=tc_)
            if q in spatial:
                spatial[q].append(st["spatial"])
            if N == 32:
                dt_orders[q] = st["dt_order"]
                combined_c4 = max(combined_c4, st["relative"])
    h_orders = {q: fitted_order(v) for q, v in spatial.items()}
    # combined threshold at N = 32, dt = 1e-4 on the spectral grid
    sp = GridSpec(7, 1, 32, "spectral")
    phi = fam.frame_phi(sp, 0.05, 0)
    cfg = fl.FlowConfig(sp, dt=dt)
    combined = max(fl.evolution_consistency(q, phi, cfg, tc_) for q in fl.QUANTITIES)
    elapsed = time.perf_counter() - t0
    ok = (
        all(abs(p - 2.0) <= 0.2 for p in dt_orders.values())
        and all(abs(p - 4.0) <= 0.3 for p in h_orders.values())
        and combined < 1e-4
        and elapsed < 600
    )
    line = (
        "dt-orders "
        + ", ".join(f"{q} {p:.2f}" for q, p in dt_orders.items())
        + "; h-orders "
        + ", ".join(f"{q} {p:.2f}" for q, p in h_orders.items())
        + f"; combined N=32 spectral {combined:.1e} (central-4th {combined_c4:.1e}); {elapsed:.0f} s"
    )
    report(6, ok, line)


def test_criterion_07_stationary_points():
    t0 = time.perf_counter()
    sp = GridSpec(7, 1, 16)
    phi, _ = fl.run(fam.flat_phi(sp), fl.FlowConfig(sp, dt=1e-3, t_end=1.0))
    flat_v = float(np.max(np.abs(fl.velocity(phi, sp))))
    vel, energy = [], []
    # perturbative ladder approaching the flat stationary point
    eps = (0.01, 0.005, 0.0025, 0.00125, 0.000625)
    for e in eps:
        s = G2State(fam.frame_phi(sp, e, 0), sp)
        vel.append(float(np.max(np.abs(s.velocity_f))))
        energy.append(s.intrinsic_energy())
    slope = float(np.polyfit(np.log(np.sqrt(energy)), np.log(vel), 1)[0])
    elapsed = time.perf_counter() - t0
    ok = flat_v < 1e-12 and abs(slope - 1.0) <= 0.2
    report(7, ok, f"flat after 1000 steps {flat_v:.1e}; slope log|v| vs log sqrt(E) {slope:.3f}; {elapsed:.1f} s")


def test_criterion_08_volume_monotone():
    runs = []
    for k, scheme, integ, eps, seed in [
        (1, "central-4th", "RK4", 0.05, 0),
        (1, "central-4th", "RK4", 0.1, 1),
        (1, "spectral", "RK4", 0.1, 2),
        (1, "central-4th", "Euler", 0.05, 3),
        (2, "central-4th", "RK4", 0.05, 4),
    ]:
        sp = GridSpec(7, k, 16, scheme)
        _, series = fl.run(fam.frame_phi(sp, eps, seed), fl.FlowConfig(sp, dt=1e-3, t_end=2e-2, integrator=integ))
        v = np.asarray(series.volume)
        runs.append(float(np.max(np.diff(v) / v[:-1])))
    worst = max(runs)
    report(8, worst <= 1e-12, f"{len(runs)} runs, largest relative step increase {worst:.1e}")


def test_criterion_09_solitons():
    sp = GridSpec(7, 1, 16)
    flat = fam.flat_phi(sp)
    c = SolitonCandidate(flat, sp, f=np.zeros(sp.npts))
    r = certify(c)
    aux = auxiliary_identities(c)
    values = [r.res_3form, r.res_metric, r.res_vector, *gradient_identities(c).values()]
    values += [aux.pw1, aux.pw2, aux.pwsol1, aux.pwsol2, aux.driftR, *aux.intsol1]
    trivial_ok = all(v == 0.0 for v in values)

    rejected = 0
    anti = [
        SolitonCandidate(flat, sp, lam=1.0),
        SolitonCandidate(flat, sp, f=0.1 * np.sin(sp.coords()[:, 0])),
    ]
    for a in anti:
        if not soliton_residual(a).certified:
            try:
                certify(a)
            except NotASoliton:
                rejected += 1

    pw1, pw2 = [], []
    Ns = (32, 64, 128)
    for N in Ns:
        g = GridSpec(7, 1, N)
        b = curvature(fam.warped_metric(g, 0.1), g)
        x = g.coords()[:, 0]
        X = np.zeros((g.npts, 7))
        X[:, 0], X[:, 1] = np.cos(x), np.sin(2 * x)
        Z = np.zeros((g.npts, 7))
        Z[:, 0], Z[:, 1] = 1 + 0.5 * np.sin(x), np.cos(x)
        pw1.append(float(np.max(np.abs(pw1_field(X, b)))))
        pw2.append(float(np.max(np.abs(pw2_field(np.sin(x) + 0.2 * np.cos(2 * x), Z, b)))))
    p1, p2 = fitted_order(pw1, Ns), fitted_order(pw2, Ns)
    ok = trivial_ok and rejected == len(anti) and abs(p1 - 4) <= 0.3 and abs(p2 - 4) <= 0.3
    report(9, ok, f"trivial residuals all 0: {trivial_ok}; anti-tests rejected {rejected}/{len(anti)}; "
               f"pw1 order {p1:.2f}, pw2 order {p2:.2f} (N=32/64/128)")


def test_criterion_10_spin7():
    t0 = time.perf_counter()
    sp = GridSpec(8, 1, 16)
    e = np.broadcast_to(np.eye(8), (sp.npts, 8, 8)).copy()
    st = s7.Spin7State(e, sp)
    flat_T = float(np.max(np.abs(st.T)))
    flat_v = float(np.max(np.abs(s7.velocity_spin7(st))))
    rng = np.random.default_rng(0)
    rm = max(float(np.max(np.abs(s7.rm_contraction(tc.random_curvature(rng, 8))))) for _ in range(100))
    res = {k: [] for k in ("bianchi", "ricci", "scalar")}
    for N in NS:
        g = GridSpec(8, 1, N)
        r = s7.spin7_identity_residuals(s7.Spin7State(fam.frame_field(g, 0.05, 0), g))
        for k in res:
            res[k].append(r[k])
    orders = {k: fitted_order(v) for k, v in res.items()}
    elapsed = time.perf_counter() - t0
    ok = flat_T == 0.0 and flat_v == 0.0 and rm <= 1e-12 and all(abs(p - 4) <= 0.3 for p in orders.values())
    ok = ok and elapsed < 300
    report(10, ok, f"flat T {flat_T:.0e}, flat velocity {flat_v:.0e}, Rm.Phi max {rm:.1e}; orders "
                + ", ".join(f"{k} {p:.2f}" for k, p in orders.items()) + f"; {elapsed:.1f} s")


def test_criterion_11_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cfg = tmp / "run.cfg"
        cfg.write_text("N = 16\nk = 1\nseed = 7\ndt = 1e-3\nt_end = 4e-3\nsnapshot_stride = 2\nresiduals = bianchi\n"
                       "tolerance = 1\n")
        outs = []
        for i in range(2):
            out = tmp / f"out{i}"
            subprocess.run([sys.executable, "-m", "g2flow.cli", "flow", "--config", str(cfg), "--out", str(out)],
                           check=True, capture_output=True)
            outs.append(out)
        names = sorted(p.name for p in outs[0].iterdir())
        same = names == sorted(p.name for p in outs[1].iterdir())
        files = [n for n in names if n.endswith((".csv", ".g2fs"))]
        _, mismatch, errors = filecmp.cmpfiles(outs[0], outs[1], files, shallow=False)
        ok = same and not mismatch and not errors and len(files) >= 2
        report(11, ok, f"{len(files)} CSV/snapshot files compared byte for byte, mismatches {len(mismatch)}")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
