"""Command-line interface.

Subcommands:
    constants   derived stationary constants for a parameter set
    gaussian    closed-form width/spread relaxation curves
    trajectory  one stochastic grid trajectory, moment records
    ensemble    batched ensemble run with summary statistics
    master      closed-form master-equation coefficient flow
    density     ensemble spatial density (exact / expansion / smoothed)
    verify      internal consistency battery (exit code 2 on failure)

Common flags: --config PATH (flat key=value or JSON experiment file),
--seed N (overrides the master seed), --out DIR, --units si|natural,
--format csv|json.  Exit codes: 0 success, 1 run error, 2 verification
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

import numpy as np

from . import gaussian as ge
from . import localization as loc
from . import master as me
from .constants import FundamentalConstants
from .ensemble import ExperimentConfig, _write_csv, compare_to_master, run_ensemble
from .errors import InstabilityError, NormLossError, ResolutionError
from .grid import RECORD_FIELDS, NoiseStream, evolve_trajectory
from .model import derive_constants, scale_parameters, uncertainty_product


def _add_common(sp):
    sp.add_argument("--config", default=None, help="experiment file")
    sp.add_argument("--seed", type=int, default=None, help="master seed override")
    sp.add_argument("--out", default=".", help="output directory")
    sp.add_argument("--units", choices=("si", "natural"), default=None)
    sp.add_argument("--format", choices=("csv", "json"), default="csv")


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if args.units is not None:
        cfg = cfg.replace(units=args.units)
    if args.seed is not None:
        cfg = cfg.replace(master_seed=args.seed)
    return cfg


def _write_table(args, name, schema, cols, body):
    os.makedirs(args.out, exist_ok=True)
    if args.format == "csv":
        path = os.path.join(args.out, f"{name}.csv")
        _write_csv(path, schema, cols, body)
    else:
        path = os.path.join(args.out, f"{name}.json")
        payload = {"schema": schema, "columns": list(cols),
                   "rows": np.atleast_2d(body).tolist()}
        with open(path, "w") as f:
            json.dump(payload, f, sort_keys=True)
            f.write("\n")
    return path


def _record_times(cfg):
    steps = list(range(0, cfg.n_steps + 1, cfg.record_every))
    if steps[-1] != cfg.n_steps:
        steps.append(cfg.n_steps)
    return np.asarray(steps, dtype=float) * cfg.dt


def cmd_constants(args) -> int:
    cfg = _load_config(args)
    if cfg.units == "si":
        # SI mass defaults to the reference nucleon mass unless given
        if args.mass is not None:
            mass = args.mass
        elif cfg.mass != 1.0:
            mass = cfg.mass
        else:
            mass = FundamentalConstants().reference_mass
        p = scale_parameters(mass, FundamentalConstants())
        d = derive_constants(p)
    else:
        p = cfg.params()
        d = derive_constants(p, boltzmann=1.0)
    rows = {
        "mass": p.mass,
        "collapse_rate": p.collapse_rate,
        "momentum_coupling": p.momentum_coupling,
        "hbar": p.hbar,
        "omega": d.omega,
        "theta": d.theta,
        "omega1": d.omega1,
        "omega2": d.omega2,
        "kappa": d.kappa,
        "a_inf_real": d.a_inf.real,
        "a_inf_imag": d.a_inf.imag,
        "sigma_q_bar": d.sigma_q_bar,
        "sigma_p_bar": d.sigma_p_bar,
        "sigma_qp_bar_sq": d.sigma_qp_bar_sq,
        "uncertainty_product": uncertainty_product(d),
        "energy_inf": d.energy_inf,
        "temperature": d.temperature,
    }
    os.makedirs(args.out, exist_ok=True)
    if args.format == "json":
        path = os.path.join(args.out, "constants.json")
        with open(path, "w") as f:
            json.dump({"schema": "constants-v1", **rows}, f, sort_keys=True,
                      indent=1)
            f.write("\n")
    else:
        path = os.path.join(args.out, "constants.csv")
        with open(path, "w") as f:
            f.write("# schema=constants-v1\nname,value\n")
            for k, v in rows.items():
                f.write(f"{k},{v:.17g}\n")
    print(f"constants written to {path}")
    print(f"omega={d.omega:.6g}  theta={d.theta:.6g}  "
          f"sigma_q_bar={d.sigma_q_bar:.6g}  energy_inf={d.energy_inf:.6g}")
    return 0


def cmd_gaussian(args) -> int:
    cfg = _load_config(args)
    p = cfg.params()
    d = derive_constants(p, boltzmann=1.0)
    g0 = cfg.initial_gaussian()
    times = _record_times(cfg)
    a_t = ge.a_closed_form(g0.a, times, p)
    tr = ge.spreads(a_t, p)
    so = loc.sigma_O_sq(tr.sigma_q**2, tr.sigma_p**2, tr.sigma_qp_sq, p, d)
    cov = ge.stationary_covariance(times, p, d)
    body = np.column_stack([
        times, a_t.real, a_t.imag, tr.sigma_q, tr.sigma_p, tr.sigma_qp_sq,
        np.broadcast_to(so, times.shape), cov.qq, cov.qp, cov.pp,
    ])
    cols = ["t", "a_real", "a_imag", "sigma_q", "sigma_p", "sigma_qp_sq",
            "sigma_O_sq", "cov_qq", "cov_qp", "cov_pp"]
    path = _write_table(args, "gaussian", "gaussian-relaxation-v1", cols, body)
    print(f"gaussian relaxation written to {path}")
    return 0


def cmd_trajectory(args) -> int:
    cfg = _load_config(args)
    p = cfg.params()
    grid = cfg.grid()
    psi0 = cfg.initial_psi(grid)
    noise = NoiseStream(cfg.master_seed, 0)
    res = evolve_trajectory(psi0, grid, p, cfg.dt, cfg.n_steps, noise,
                            equation=cfg.equation,
                            record_every=cfg.record_every)
    path = _write_table(args, "trajectory", "trajectory-v1",
                        list(RECORD_FIELDS), res.records)
    print(f"trajectory records written to {path}")
    if res.aborted:
        print("trajectory aborted a validity check", file=sys.stderr)
        return 1
    return 0


def cmd_ensemble(args) -> int:
    cfg = _load_config(args)
    summary = run_ensemble(cfg)
    os.makedirs(args.out, exist_ok=True)
    written = summary.save(args.out, args.format)
    print(f"{cfg.n_trajectories} trajectories, {summary.n_aborted} aborted")
    for w in written:
        print(f"wrote {w}")
    return 0


def cmd_master(args) -> int:
    cfg = _load_config(args)
    p = cfg.params()
    c0 = me.coefficients_from_gaussian(cfg.initial_gaussian(), p)
    times = _record_times(cfg)
    body = []
    for t in times:
        c = me.coeff_flow(c0, float(t), p)
        mom = me.moments_from_coefficients(c, p)
        body.append([t, c.c1, c.c2, c.c3, c.c4, c.c5, c.c6,
                     mom.q_mean, mom.p_mean, mom.var_q, mom.var_p,
                     mom.cov_qp, me.energy_from_coefficients(c, p),
                     me.purity(c, p)])
    cols = ["t", "c1", "c2", "c3", "c4", "c5", "c6", "q_mean", "p_mean",
            "var_q", "var_p", "cov_qp", "energy", "purity"]
    path = _write_table(args, "master", "master-flow-v1", cols,
                        np.asarray(body))
    print(f"master coefficient flow written to {path}")
    return 0


def cmd_density(args) -> int:
    cfg = _load_config(args)
    p = cfg.params()
    g0 = cfg.initial_gaussian()
    t = cfg.dt * cfg.n_steps
    x = cfg.grid().x
    profiles = {}
    for method in ("exact", "expansion", "smoothed", "free"):
        profiles[method] = me.position_density(g0, t, p, x, method=method)
    body = np.column_stack([x] + [profiles[m].density for m in profiles])
    cols = ["x"] + list(profiles)
    path = _write_table(args, "density", "density-v1", cols, body)
    beta = profiles["smoothed"].beta
    print(f"densities at t={t:g} written to {path}")
    print("norms: " + "  ".join(f"{m}={profiles[m].norm:.6f}" for m in profiles)
          + (f"  beta_t={beta:.6g}" if beta is not None else ""))
    return 0


def cmd_verify(args) -> int:
    cfg = _load_config(args)
    p = cfg.params()
    d = derive_constants(p, boltzmann=1.0)
    rng = np.random.default_rng(cfg.master_seed)
    checks = {}

    res = loc.stationarity_residuals(p, d)
    checks["stationary_identities"] = {
        "max_residual": max(abs(res.drift), abs(res.mixed), abs(res.uncertainty)),
        "tol": 1e-9,
    }

    w1, w2, w3 = loc.relaxation_weights(p, d)
    rel12 = abs(w1 - w2) / abs(w1)
    sq2, sp2 = d.sigma_q_bar**2, d.sigma_p_bar**2
    w3_ref = -(2.0 * d.sigma_qp_bar_sq**2 / (sq2 * sp2)) * w1
    checks["relaxation_weights"] = {
        "max_residual": max(rel12, abs(w3 - w3_ref) / abs(w3_ref)),
        "tol": 1e-9,
    }

    t_grid = np.linspace(0.0, 8.0 / d.omega1, 400)
    a0 = (d.a_inf * rng.uniform(0.3, 3.0, size=32)
          + 1j * np.abs(d.a_inf) * rng.uniform(-0.5, 0.5, size=32))
    a0 = np.where(a0.real > 0, a0, a0 - 2 * a0.real)
    rk = ge.integrate_a_ode(a0, t_grid, p, substeps=8)
    closed = ge.a_closed_form(a0[None, :], t_grid[:, None], p)
    checks["width_closed_form"] = {
        "max_residual": float(np.max(np.abs(rk - closed) / np.abs(closed))),
        "tol": 1e-8,
    }

    worst = 0.0
    for _ in range(32):
        c0 = me.CharCoefficients(*rng.uniform(0.2, 2.0, size=3), *rng.uniform(-1.0, 1.0, size=2))
        t = float(rng.uniform(0.05, 6.0))
        a_route = me.coeff_flow(c0, t, p)
        b_route = me.evolve_characteristic(c0, t, p)
        for f in dataclasses.fields(me.CharCoefficients):
            va, vb = getattr(a_route, f.name), getattr(b_route, f.name)
            scale = max(abs(va), abs(vb), 1e-12)
            worst = max(worst, abs(va - vb) / scale)
    checks["coefficient_routes"] = {"max_residual": float(worst), "tol": 1e-10}

    cov_rk = ge.integrate_covariance(lambda t: d.a_inf, np.linspace(0, 5.0, 200),
                                     p, substeps=4)
    cov_cf = ge.stationary_covariance(cov_rk.t[-1], p, d)
    rel = float(max(
        abs(cov_rk.qq[-1] - cov_cf.qq) / abs(cov_cf.qq),
        abs(cov_rk.qp[-1] - cov_cf.qp) / abs(cov_cf.qp),
        abs(cov_rk.pp[-1] - cov_cf.pp) / abs(cov_cf.pp),
    ))
    checks["stationary_covariance"] = {"max_residual": rel, "tol": 1e-6}

    q2, p2, qp2 = loc.random_moment_triples(20000, p, rng, d)
    so = loc.sigma_O_sq(q2, p2, qp2, p, d)
    dr = loc.drift_prediction(q2, p2, qp2, p, d)
    checks["localization_drift"] = {
        "max_residual": float(max(np.max(dr), np.max(-so), 0.0)),
        "tol": 1e-12,
    }

    ver_cfg = cfg.replace(n_trajectories=256, n_steps=100, dt=0.01,
                          record_every=20, n_points=128, initial="gaussian",
                          equation="nonlinear", xbar0=1.0)
    summary, records, aborted = run_ensemble(ver_cfg, return_records=True)
    comp = compare_to_master(ver_cfg, summary, records, aborted)
    checks["ensemble_vs_master"] = {
        "max_residual": comp.max_abs_z,
        "tol": 4.5,
        "l1_density": comp.l1_density,
        "l1_tol": 0.1,
    }
    ens_ok = comp.max_abs_z < 4.5 and comp.l1_density < 0.1

    all_ok = ens_ok
    for name, c in checks.items():
        ok = c["max_residual"] < c["tol"]
        if name == "ensemble_vs_master":
            ok = ens_ok
        c["passed"] = bool(ok)
        all_ok = all_ok and ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: "
              f"residual {c['max_residual']:.3g} (tol {c['tol']:.3g})")

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "verify.json")
    with open(path, "w") as f:
        json.dump({"schema": "verify-v1", "passed": bool(all_ok),
                   "checks": checks}, f, sort_keys=True, indent=1)
        f.write("\n")
    print(f"report written to {path}")
    return 0 if all_ok else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dcollapse",
        description="simulate and verify the dissipative collapse model",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "constants": cmd_constants,
        "gaussian": cmd_gaussian,
        "trajectory": cmd_trajectory,
        "ensemble": cmd_ensemble,
        "master": cmd_master,
        "density": cmd_density,
        "verify": cmd_verify,
    }
    for name, fn in handlers.items():
        sp = sub.add_parser(name)
        _add_common(sp)
        if name == "constants":
            sp.add_argument("--mass", type=float, default=None,
                            help="object mass (kg in SI units)")
        sp.set_defaults(handler=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (InstabilityError, NormLossError, ResolutionError) as exc:
        print(f"run error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
