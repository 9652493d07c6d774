"""Command-line entry point: g2flow {verify, flow, soliton, taylor-check, spin7-verify}.

Exit status is 0 exactly when every requested residual is within tolerance.
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import flow as fl
from . import g2algebra as ga
from . import spin7 as s7
from . import taylorcheck as tc
from .config import RunConfig, config_hash, parse_config, serialize
from .errors import BlowUp, ConfigError, G2FlowError
from .families import flat_phi, frame_field, frame_phi
from .files import gnuplot_script, write_csv, write_snapshot
from .geometry import Field, GridSpec
from .soliton import SolitonCandidate, auxiliary_identities, gradient_identities, soliton_residual

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BLOWUP = 3


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    return parse_config(Path(path).read_text(encoding="utf-8"))


def initial_phi(cfg: RunConfig, spec: GridSpec) -> np.ndarray:
    if cfg.family == "flat":
        return flat_phi(spec)
    return frame_phi(spec, cfg.epsilon, cfg.seed)


def _report(rows, tol, out=None):
    out = sys.stdout if out is None else out
    ok = True
    for name, value in rows:
        good = value <= tol
        ok &= good
        print(f"{name:<28s} {value:.3e}  {'PASS' if good else 'FAIL'}", file=out)
    return ok


# ------------------------------------------------------------- commands


def identity_rows():
    """The exact algebraic identity suite as (name, max error) pairs."""
    rows = [
        ("phi_phi_contraction", ga.phiphi_residual()),
        ("phi_psi_contraction", ga.phipsi_residual()),
        ("g_diamond_phi", float(np.max(np.abs(ga.diamond(np.eye(7), ga.PHI0, 3) - 3 * ga.PHI0)))),
        ("phi_norm2", abs(float(ga.form_norm2(ga.PHI0, 3)) - 7.0)),
        ("psi_norm2", abs(float(ga.form_norm2(ga.PSI0, 4)) - 7.0)),
        ("kernel_dim7", float(abs(ga.diamond_rank(ga.PHI0, 3)[1] - 14))),
        ("kernel_dim8", float(abs(s7.diamond_rank()[1] - 21))),
        ("Phi_norm2", abs(float(ga.form_norm2(s7.PHI0_8, 4)) - 14.0)),
        ("Phi_self_dual", s7.self_duality_residual()),
        ("g_diamond_Phi", float(np.max(np.abs(ga.diamond(np.eye(8), s7.PHI0_8, 4) - 4 * s7.PHI0_8)))),
    ]
    return rows


def cmd_verify(cfg: RunConfig, out_dir=None) -> int:
    rows = identity_rows()
    ok = _report(rows, cfg.tolerance)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_csv(Path(out_dir) / "verify.csv", ["identity", "max_error"], rows, config_hash(cfg))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_flow(cfg: RunConfig, out_dir) -> int:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = GridSpec(7, cfg.k, cfg.N, cfg.scheme)
    h = config_hash(cfg)
    (out / "config.txt").write_text(serialize(cfg), encoding="utf-8")
    fc = fl.FlowConfig(
        grid=spec,
        dt=cfg.dt,
        t_end=cfg.t_end,
        integrator=cfg.integrator,
        monitor_stride=cfg.monitor_stride,
        lambda_abort=cfg.lambda_abort,
        residuals=cfg.residual_names(),
    )

    def snap(step, phi):
        write_snapshot(Field(spec, 3, phi), out / f"phi_{h}_{step:06d}.g2fs")

    def on_record(step, t, phi, series):
        if step == 0 or (cfg.snapshot_stride and step % cfg.snapshot_stride == 0):
            snap(step, phi)

    phi0 = initial_phi(cfg, spec)
    csv_path = out / "monitor.csv"
    try:
        phi, series = fl.run(phi0, fc, on_record)
    except BlowUp as exc:
        if exc.series is not None:
            write_csv(csv_path, exc.series.columns(), exc.series.rows(), h)
        print(str(exc), file=sys.stderr)
        return EXIT_BLOWUP
    snap(series.step[-1], phi)
    write_csv(csv_path, series.columns(), series.rows(), h)
    (out / "monitor.gp").write_text(gnuplot_script(csv_path, "t", ["lambda_max", "volume", "energy"], "monitors"))
    rows = [(f"res_{n}", series.residuals[n][-1]) for n in series.residual_names]
    print(f"steps {series.step[-1]}  t {series.t[-1]:.6g}  volume {series.volume[-1]:.12g}")
    ok = _report(rows, cfg.tolerance)
    return EXIT_OK if ok else EXIT_FAIL


def soliton_candidate(cfg: RunConfig) -> SolitonCandidate:
    spec = GridSpec(7, cfg.k, cfg.N, cfg.scheme)
    phi = initial_phi(cfg, spec)
    if cfg.potential_amplitude != 0.0:
        f = cfg.potential_amplitude * np.sin(spec.coords()[:, 0])
        return SolitonCandidate(phi, spec, cfg.lam, f=f)
    Yv = cfg.Y_vector()
    if Yv:
        Y = np.zeros((spec.npts, 7))
        Y[:, : len(Yv)] = Yv
        return SolitonCandidate(phi, spec, cfg.lam, Y=Y)
    return SolitonCandidate(phi, spec, cfg.lam, f=np.zeros(spec.npts))


def cmd_soliton(cfg: RunConfig, out_dir=None) -> int:
    c = soliton_candidate(cfg)
    r = soliton_residual(c)
    rows = [
        ("res_3form", r.res_3form),
        ("res_metric", r.res_metric),
        ("res_vector", r.res_vector),
        ("cross_check", r.cross_check),
    ]
    print(f"certified = {r.certified}")
    if r.certified:
        if c.is_gradient:
            rows += sorted(gradient_identities(c).items())
        aux = auxiliary_identities(c)
        rows += [(k, getattr(aux, k)) for k in ("pw1", "pw2", "pwsol1", "pwsol2", "driftR") if getattr(aux, k) is not None]
        if aux.intsol1 is not None:
            rows.append(("intsol1", abs(aux.intsol1[0] - aux.intsol1[1])))
    ok = _report(rows, cfg.tolerance) and r.certified
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_csv(Path(out_dir) / "soliton.csv", ["quantity", "value"], rows, config_hash(cfg))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_taylor(cfg: RunConfig, out_dir=None) -> int:
    t0 = time.perf_counter()
    res = tc.run_suite(cfg.target, cfg.samples, cfg.seed)
    lin = tc.run_linear_suite(cfg.target, min(cfg.samples, 20), cfg.seed)
    tol = min(cfg.tolerance, 1e-12)
    print(f"target {cfg.target}  samples {cfg.samples}  seed {cfg.seed}  ({time.perf_counter() - t0:.2f} s)")
    ok = _report([("quadratic_max", float(res.max())), ("linear_max", float(lin.max()))], tol)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_csv(
            Path(out_dir) / f"taylor_{cfg.target}.csv",
            ["sample", "residual"],
            [(i, float(v)) for i, v in enumerate(res)],
            config_hash(cfg),
        )
    return EXIT_OK if ok else EXIT_FAIL


def cmd_spin7(cfg: RunConfig, out_dir=None) -> int:
    spec = GridSpec(8, cfg.k, cfg.N, cfg.scheme)
    if cfg.family == "flat":
        e = np.broadcast_to(np.eye(8), (spec.npts, 8, 8)).copy()
    else:
        e = frame_field(spec, cfg.epsilon, cfg.seed)
    st = s7.Spin7State(e, spec)
    rows = sorted(s7.spin7_identity_residuals(st).items())
    rows.append(("projection", s7.projection_residual(st)))
    if cfg.family == "flat":
        rows.append(("velocity", float(np.max(np.abs(st.velocity)))))
    ok = _report(rows, cfg.tolerance)
    if out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        write_csv(Path(out_dir) / "spin7.csv", ["quantity", "value"], rows, config_hash(cfg))
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="g2flow", description="Ricci-harmonic flow laboratory for G2 and Spin(7) structures")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="exact algebraic identity suite")
    v.add_argument("--config")
    v.add_argument("--out")
    f = sub.add_parser("flow", help="integrate the flow and write monitors and snapshots")
    f.add_argument("--config")
    f.add_argument("--out", required=True)
    s = sub.add_parser("soliton", help="soliton residuals and identities")
    s.add_argument("--config")
    s.add_argument("--out")
    t = sub.add_parser("taylor-check", help="Taylor-coefficient contraction suites")
    t.add_argument("--config")
    t.add_argument("--samples", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--target", choices=tc.TARGETS)
    t.add_argument("--out")
    s7p = sub.add_parser("spin7-verify", help="Spin(7) torsion and curvature identities")
    s7p.add_argument("--config")
    s7p.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = replace(cfg, command=args.command)
        if args.command == "taylor-check":
            over = {k: getattr(args, k) for k in ("samples", "seed", "target") if getattr(args, k) is not None}
            cfg = replace(cfg, **over)
            if cfg.samples < 1:
                raise ConfigError("--samples must be >= 1")
        handlers = {
            "verify": lambda: cmd_verify(cfg, args.out),
            "flow": lambda: cmd_flow(cfg, args.out),
            "soliton": lambda: cmd_soliton(cfg, args.out),
            "taylor-check": lambda: cmd_taylor(cfg, args.out),
            "spin7-verify": lambda: cmd_spin7(cfg, args.out),
        }
        return handlers[args.command]()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (G2FlowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
