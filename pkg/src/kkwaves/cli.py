"""Command-line entry point: deterministic batch runs over all modules.

Configuration is a single JSON file of flat dotted keys; command-line
flags override file values, and KKWAVES_OUTPUT_ROOT overrides the output
directory. There is no randomness anywhere, so identical configurations
produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import equilibria as eqm
from . import io as kio
from . import normalforms as nf
from . import pde as kpde
from .continuation import StepPolicy, continue_hopf, fixed_period_family
from .equilibria import Theta0Policy
from .model import DomainError, ModelParams, PhysicalConstants, ve_derivs, ve_of_v

EXIT_DOMAIN_ERROR = 2

DEFAULTS = {
    "constants.rho_max": 140.0,      # veh/km
    "constants.V_max": 120.0,        # km/h
    "constants.tau_s": 30.0,         # seconds; stored internally in hours
    "constants.eta_0": 600.0,        # veh*km/h
    "constants.Theta_0": 2304.0,     # km^2/h^2 (theta0 = 0.16)
    "theta0.policy": "fixed",        # "fixed" | "bt"
    "theta0.value": 0.16,
    "roots.tol": 1e-12,
    "roots.scan_points": 2000,
    "fold.q_min": 0.02,
    "fold.n_points": 200,
    "gh.q_min": 0.02,
    "gh.n_points": 100,
    "continuation.initial_step": 2e-3,
    "continuation.max_step": 5e-3,
    "continuation.min_step": 1e-6,
    "cycles.segments": 20,
    "cycles.n_steps": 25,
    "cycles.step": 2e-4,
    "cycles.max_step": 2e-3,
    "cycles.seed_amplitude": 2e-3,
    "diagram.n_hopf_curves": 3,
    "pde.n_points": 1024,
    "pde.t_end_min": 60.0,
    "pde.save_every_min": 1.0,
    "pde.scheme": "central",
    "pde.eps4": 1.0 / 64.0,
    "pde.cfl": 0.4,
    "output.dir": "out",
}


def load_config(path: str | None, overrides: dict | None = None) -> dict:
    cfg = dict(DEFAULTS)
    if path:
        loaded = json.loads(Path(path).read_text())
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    if overrides:
        cfg.update({k: v for k, v in overrides.items() if v is not None})
    root = os.environ.get("KKWAVES_OUTPUT_ROOT")
    if root:
        cfg["output.dir"] = root
    return cfg


def _constants(cfg: dict) -> PhysicalConstants:
    return PhysicalConstants(rho_max=cfg["constants.rho_max"],
                             V_max=cfg["constants.V_max"],
                             tau=cfg["constants.tau_s"] / 3600.0,
                             eta_0=cfg["constants.eta_0"],
                             Theta_0=cfg["constants.Theta_0"])


def _policy(cfg: dict) -> Theta0Policy:
    return Theta0Policy(kind=cfg["theta0.policy"],
                        value=cfg["theta0.value"] if cfg["theta0.policy"] == "fixed" else None)


def _meta(cfg: dict) -> dict:
    # the hash covers the scientific configuration only, not where it lands
    science = {k: v for k, v in cfg.items() if not k.startswith("output.")}
    return {"config_hash": kio.config_hash(science),
            "theta0_policy": _policy(cfg).describe()}


def _params(cfg: dict, q_g: float, v_g: float, theta0: float | None = None) -> ModelParams:
    consts = _constants(cfg)
    return ModelParams.from_physical(
        consts, q_g, v_g,
        theta0=theta0 if theta0 is not None else (
            cfg["theta0.value"] if cfg["theta0.policy"] == "fixed" else None))


def _outdir(cfg: dict) -> Path:
    d = Path(cfg["output.dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def cmd_equilibria(cfg: dict, args) -> int:
    theta0 = args.theta0
    p = _params(cfg, args.q_g, args.v_g, theta0)
    if cfg["theta0.policy"] == "bt" and theta0 is None:
        # classification under the BT convention, per equilibrium
        pass
    eqs = eqm.find_equilibria(p, tol=cfg["roots.tol"],
                              n_scan=int(cfg["roots.scan_points"]))
    rows = []
    for e in eqs:
        pe = p
        if cfg["theta0.policy"] == "bt" and theta0 is None:
            pe = p.with_values(theta0=(e.v_c + p.v_g) ** 2)
            e = eqm.classify(pe, e.v_c)
        rows.append({
            "v_c": e.v_c, "kind": e.kind.value, "b": e.b, "c": e.c,
            "eig1_re": e.eigenvalues[0].real, "eig1_im": e.eigenvalues[0].imag,
            "eig2_re": e.eigenvalues[1].real, "eig2_im": e.eigenvalues[1].imag,
            "residual": abs(ve_of_v(pe, e.v_c) - e.v_c),
        })
    cols = ["v_c", "kind", "b", "c", "eig1_re", "eig1_im", "eig2_re", "eig2_im",
            "residual"]
    meta = {**_meta(cfg), "q_g": kio.fmt(args.q_g), "v_g": kio.fmt(args.v_g)}
    if args.out:
        kio.write_csv(args.out, cols, rows, meta)
    for line in kio.header_lines(meta):
        print(line)
    print(",".join(cols))
    for row in rows:
        print(",".join(kio.fmt(row[c]) for c in cols))
    return 0


def cmd_fold(cfg: dict, args) -> int:
    K = eqm.cusp_point(tol=cfg["roots.tol"])
    pts = eqm.fold_curve(theta0_policy=_policy(cfg),
                         q_g_range=(cfg["fold.q_min"], K.q_g),
                         n_points=int(cfg["fold.n_points"]))
    rows = [{"q_g": fp.q_g, "v_g": fp.v_g, "v_c": fp.v_c,
             "branch": fp.branch.value, "residual": fp.residual} for fp in pts]
    path = args.out or (_outdir(cfg) / "fold_curve.csv")
    kio.write_csv(path, ["q_g", "v_g", "v_c", "branch", "residual"], rows, _meta(cfg))
    print(f"wrote {path} ({len(rows)} points)")
    return 0


def cmd_cusp(cfg: dict, args) -> int:
    K = eqm.cusp_point(tol=cfg["roots.tol"])
    p = ModelParams(q_g=K.q_g, v_g=K.v_g)
    dbt = nf.dbt_coefficients(K)
    payload = {
        "q_g": K.q_g, "v_g": K.v_g, "v_c": K.v_c, "theta_BT": K.theta_BT,
        "ve3": ve_derivs(p, K.v_c, 3),
        "residuals": {
            "equilibrium": abs(ve_of_v(p, K.v_c) - K.v_c),
            "fold": abs(ve_derivs(p, K.v_c, 1) - 1.0),
            "cusp": abs(ve_derivs(p, K.v_c, 2)),
        },
        "dbt": {"a3": dbt.a3, "b2": dbt.b2, "saddle_case": dbt.saddle_case},
    }
    path = args.out or (_outdir(cfg) / "cusp.json")
    kio.write_json(path, payload, _meta(cfg))
    print(json.dumps(payload, indent=2, default=kio.fmt))
    return 0


def cmd_lyapunov(cfg: dict, args) -> int:
    p = _params(cfg, args.q_g, args.v_g)
    e = eqm.interior_equilibrium(p)
    hd = nf.lyapunov_l1_via_g(p, e.v_c)
    ell1 = nf.lyapunov_l1(p, e.v_c)
    payload = {
        "q_g": args.q_g, "v_g": args.v_g, "v_c": e.v_c,
        "omega0": hd.omega0, "ell1": ell1, "ell1_g_route": hd.ell1,
        "route_agreement": abs(ell1 - hd.ell1) / max(abs(ell1), 1e-300),
        "g20": [hd.g20.real, hd.g20.imag],
        "g11": [hd.g11.real, hd.g11.imag],
        "g21": [hd.g21.real, hd.g21.imag],
    }
    if args.out:
        kio.write_json(args.out, payload, _meta(cfg))
    print(json.dumps(payload, indent=2, default=kio.fmt))
    return 0


def cmd_gh_curve(cfg: dict, args) -> int:
    K = eqm.cusp_point()
    curve = nf.gh_curve(q_g_range=(cfg["gh.q_min"], K.q_g),
                        n_points=int(cfg["gh.n_points"]))
    rows = [{"q_g": pt["q_g"], "v_g": pt["v_g"], "ell1_residual": pt["ell1"]}
            for pt in curve.points]
    path = args.out or (_outdir(cfg) / "gh_curve.csv")
    kio.write_csv(path, ["q_g", "v_g", "ell1_residual"], rows, _meta(cfg))
    print(f"wrote {path} ({len(rows)} points)")
    return 0


def cmd_hopf_continue(cfg: dict, args) -> int:
    theta0 = args.theta0 if args.theta0 is not None else cfg["theta0.value"]
    bts = nf.bt_points_at_theta0(theta0)
    if not bts:
        raise DomainError(f"no BT points at theta0={theta0}")
    start = bts[0] if args.start == "gamma_minus" else bts[-1]
    pol = StepPolicy(initial=cfg["continuation.initial_step"],
                     max_step=cfg["continuation.max_step"],
                     min_step=cfg["continuation.min_step"])
    curve = continue_hopf(start, step_policy=pol, theta0=theta0)
    path = args.out or (_outdir(cfg) / f"hopf_curve_theta{theta0:g}.csv")
    kio.curve_csv(path, curve, _meta(cfg))
    ghs = curve.labeled_points("GH")
    print(f"wrote {path} ({len(curve)} points, {len(ghs)} GH)")
    return 0


def cmd_cycles(cfg: dict, args) -> int:
    theta0 = args.theta0 if args.theta0 is not None else cfg["theta0.value"]
    fam = fixed_period_family(
        seed_q_g=args.q_g, theta0=theta0, target_period=args.period,
        n_steps=int(args.n_steps or cfg["cycles.n_steps"]),
        step=cfg["cycles.step"], max_step=cfg["cycles.max_step"],
        M=int(cfg["cycles.segments"]),
        eps_seed=cfg["cycles.seed_amplitude"],
        stop_amplitude=args.stop_amplitude)
    outdir = _outdir(cfg)
    meta = {**_meta(cfg),
            "resonance_convention": "road L = m*T/rho_max; m=1 is the minimal road"}
    path = outdir / f"cycle_family_T{args.period:g}.csv"
    kio.curve_csv(path, fam, meta)
    n_export = min(len(fam.cycles), int(args.export_cycles))
    for i, c in enumerate(fam.cycles[-n_export:]):
        kio.cycle_to_json(outdir / f"cycle_T{args.period:g}_{i:03d}.json", c, meta)
    print(f"wrote {path} ({len(fam)} points, {n_export} meshes)")
    return 0


def cmd_pde(cfg: dict, args) -> int:
    consts = _constants(cfg)
    c = kio.cycle_from_json(args.cycle_json)
    s0 = kpde.cycle_to_initial_condition(c, consts, m=int(args.m),
                                         n_points=int(cfg["pde.n_points"]))
    opts = kpde.SchemeOptions(advection=cfg["pde.scheme"], eps4=cfg["pde.eps4"],
                              cfl=cfg["pde.cfl"])
    t_end = (args.t_end_min if args.t_end_min is not None
             else cfg["pde.t_end_min"]) / 60.0
    V_g = c.params.v_g * consts.V_max
    report, snaps = kpde.run_and_report(
        s0, consts, t_end, V_g,
        save_every=cfg["pde.save_every_min"] / 60.0, opts=opts)
    outdir = _outdir(cfg)
    meta = _meta(cfg)
    cadence = max(len(snaps) // int(args.max_snapshots), 1)
    for i, s in enumerate(snaps):
        if i % cadence == 0 or i == len(snaps) - 1:
            kio.snapshot_csv(outdir / f"pde_t{int(round(s.t * 60)):04d}min.csv",
                             s, meta)
    payload = {
        "verdict": report.verdict.value,
        "measured_speed": report.measured_speed,
        "expected_speed": -V_g,
        "profile_drift_per_10min": report.profile_drift,
        "transient_time_h": report.transient_time,
        "amplitude_initial": report.amplitude_initial,
        "amplitude_final": report.amplitude_final,
        "m": int(args.m), "road_length_km": s0.L,
    }
    kio.write_json(outdir / "wave_report.json", payload, meta)
    print(json.dumps(payload, indent=2, default=kio.fmt))
    return 0


def cmd_diagram(cfg: dict, args) -> int:
    outdir = _outdir(cfg)
    meta = _meta(cfg)
    manifest: dict = {"artifacts": []}

    def note(path, kind, residual):
        manifest["artifacts"].append({"path": str(Path(path).name), "kind": kind,
                                      "max_residual": residual})

    K = eqm.cusp_point(tol=cfg["roots.tol"])
    p_k = ModelParams(q_g=K.q_g, v_g=K.v_g)
    cusp_resid = max(abs(ve_of_v(p_k, K.v_c) - K.v_c),
                     abs(ve_derivs(p_k, K.v_c, 1) - 1.0),
                     abs(ve_derivs(p_k, K.v_c, 2)))
    path = kio.write_json(outdir / "cusp.json",
                          {"q_g": K.q_g, "v_g": K.v_g, "v_c": K.v_c,
                           "theta_BT": K.theta_BT}, meta)
    note(path, "cusp", cusp_resid)

    pts = eqm.fold_curve(theta0_policy=_policy(cfg),
                         q_g_range=(cfg["fold.q_min"], K.q_g),
                         n_points=int(cfg["fold.n_points"]))
    rows = [{"q_g": fp.q_g, "v_g": fp.v_g, "v_c": fp.v_c,
             "branch": fp.branch.value, "residual": fp.residual} for fp in pts]
    path = kio.write_csv(outdir / "fold_curve.csv",
                         ["q_g", "v_g", "v_c", "branch", "residual"], rows, meta)
    note(path, "fold", max(r["residual"] for r in rows))

    curve = nf.gh_curve(q_g_range=(cfg["gh.q_min"], K.q_g),
                        n_points=int(cfg["gh.n_points"]))
    rows = [{"q_g": pt["q_g"], "v_g": pt["v_g"], "ell1_residual": pt["ell1"]}
            for pt in curve.points]
    path = kio.write_csv(outdir / "gh_curve.csv",
                         ["q_g", "v_g", "ell1_residual"], rows, meta)
    note(path, "gh", max(abs(r["ell1_residual"]) for r in rows))

    # fan of Hopf curves from BT points at a spread of theta0 values
    n_fan = int(cfg["diagram.n_hopf_curves"])
    theta_values = np.linspace(0.1, 0.36, n_fan) if n_fan > 1 else [cfg["theta0.value"]]
    fan_failures = []
    gh_markers = []
    for th in theta_values:
        th = float(th)
        try:
            bts = nf.bt_points_at_theta0(th)
            hc = continue_hopf(bts[0], theta0=th)
            path = kio.curve_csv(outdir / f"hopf_curve_theta{th:.4f}.csv", hc, meta)
            worst = 0.0
            for pt in hc.points:
                pp = ModelParams(q_g=pt["q_g"], v_g=pt["v_g"])
                worst = max(worst, abs(ve_of_v(pp, pt["v_c"]) - pt["v_c"]))
            note(path, "hopf", worst)
            for gh in hc.labeled_points("GH"):
                gh_markers.append({"theta0": th, "q_g": gh["q_g"], "v_g": gh["v_g"],
                                   "gh_curve_v_g": nf.gh_vg_of_qg(gh["q_g"])})
        except (RuntimeError, ValueError, DomainError) as exc:
            fan_failures.append({"theta0": th, "error": str(exc)})
    manifest["gh_markers"] = gh_markers
    manifest["failures"] = fan_failures
    kio.write_json(outdir / "manifest.json", manifest, meta)
    print(f"diagram written to {outdir} ({len(manifest['artifacts'])} artifacts, "
          f"{len(fan_failures)} failures)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kkwaves",
                                 description=__doc__.split("\n")[0])
    ap.add_argument("--config", help="JSON config of flat dotted keys")
    ap.add_argument("--output-dir", help="override output.dir")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("equilibria", help="find and classify critical points")
    s.add_argument("--q-g", type=float, required=True)
    s.add_argument("--v-g", type=float, required=True)
    s.add_argument("--theta0", type=float)
    s.add_argument("--out")

    s = sub.add_parser("fold", help="both branches of the fold curve")
    s.add_argument("--out")

    s = sub.add_parser("cusp", help="cusp point and its normal-form verdict")
    s.add_argument("--out")

    s = sub.add_parser("lyapunov", help="first Lyapunov coefficient, both routes")
    s.add_argument("--q-g", type=float, required=True)
    s.add_argument("--v-g", type=float, required=True)
    s.add_argument("--out")

    s = sub.add_parser("gh-curve", help="the Bautin locus l1=0")
    s.add_argument("--out")

    s = sub.add_parser("hopf-continue", help="Hopf curve between BT endpoints")
    s.add_argument("--theta0", type=float)
    s.add_argument("--start", choices=["gamma_minus", "gamma_plus"],
                   default="gamma_minus")
    s.add_argument("--out")

    s = sub.add_parser("cycles", help="fixed-period limit-cycle family")
    s.add_argument("--q-g", type=float, required=True)
    s.add_argument("--period", type=float, required=True)
    s.add_argument("--theta0", type=float)
    s.add_argument("--n-steps", type=int)
    s.add_argument("--stop-amplitude", type=float)
    s.add_argument("--export-cycles", type=int, default=1)

    s = sub.add_parser("pde", help="evolve a cycle profile in the traffic PDE")
    s.add_argument("--cycle-json", required=True)
    s.add_argument("--m", type=int, default=1)
    s.add_argument("--t-end-min", type=float)
    s.add_argument("--max-snapshots", type=int, default=7)

    sub.add_parser("diagram", help="full bifurcation-diagram artifact set")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = load_config(args.config,
                      {"output.dir": args.output_dir} if args.output_dir else None)
    handlers = {
        "equilibria": cmd_equilibria,
        "fold": cmd_fold,
        "cusp": cmd_cusp,
        "lyapunov": cmd_lyapunov,
        "gh-curve": cmd_gh_curve,
        "hopf-continue": cmd_hopf_continue,
        "cycles": cmd_cycles,
        "pde": cmd_pde,
        "diagram": cmd_diagram,
    }
    try:
        return handlers[args.command](cfg, args)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
