"""Command-line interface.

Subcommands::

    latdyn simulate   --config cfg.json --out DIR
    latdyn converge   --config cfg.json --out DIR
    latdyn recover    --config cfg.json --out DIR
    latdyn tensor     --model NAME [--dim D] [--param k=v ...]
    latdyn check-model --model NAME [--dim D] [--param k=v ...] [--trials N]
    latdyn audit      --traj FILE [--out DIR]

Config files are JSON; see the README for the documented schema.  Every
subcommand exits 0 iff all of its configured assertions pass.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .cell_energy import check_assumptions, make_model, tensor_for_model
from .convergence import (
    DeltaRule,
    SweepSpec,
    environment_info,
    evaluate_sweep,
    recovery_check,
    recovery_table_csv,
    report_emit,
)
from .discrete_ops import EnergyParams
from .dynamics import (
    SimulationConfig,
    Trajectory,
    apriori_bounds,
    edie_audit,
    simulate,
)
from .fields import LatticeField, project
from .initial_data import initial_field
from .lattice import Box, LatticeSpec, build_lattice


class ConfigError(ValueError):
    pass


def _load_config(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}")


def _require(cfg: dict, key: str, where: str = "config"):
    if key not in cfg:
        raise ConfigError(f"missing '{key}' in {where}")
    return cfg[key]


def _geometry(cfg: dict):
    dim = int(_require(cfg, "dim"))
    A = np.asarray(_require(cfg, "A"), dtype=float)
    omega = Box.from_dict(_require(cfg, "omega"))
    omega_tilde = Box.from_dict(_require(cfg, "omega_tilde"))
    return dim, A, omega, omega_tilde


def _model_from_cfg(cfg: dict, dim: int, A):
    mcfg = _require(cfg, "model")
    return make_model(_require(mcfg, "name", "model"), dim, A,
                      **mcfg.get("params", {}))


def _parse_params(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--param expects name=value, got '{item}'")
        key, val = item.split("=", 1)
        out[key] = float(val)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    dim, A, omega, omega_tilde = _geometry(cfg)
    eps = float(_require(cfg, "epsilon"))
    delta = float(cfg.get("delta", eps))
    lattice = build_lattice(
        LatticeSpec(dim=dim, A=A, epsilon=eps, omega=omega, omega_tilde=omega_tilde)
    )
    model = _model_from_cfg(cfg, dim, A)
    params = EnergyParams(delta=delta, model=model, lattice=lattice)

    phys = _require(cfg, "physics")
    dt = float(cfg["dt"]) if "dt" in cfg else eps / float(cfg.get("dt_divisor", 200.0))
    config = SimulationConfig(
        rho=float(_require(phys, "rho", "physics")),
        nu=float(_require(phys, "nu", "physics")),
        dt=dt,
        t_end=float(_require(phys, "t_end", "physics")),
        integrator=cfg.get(
            "integrator", "rk4" if float(phys["rho"]) > 0 else "viscous_rk4"
        ),
        sample_every=int(cfg.get("sample_every", 1)),
    )
    data = cfg.get("initial_data", {})
    w0 = initial_field(data.get("displacement", "sine_bump"), dim, omega)
    w1 = initial_field(data.get("velocity", "zero"), dim, omega)
    u0 = project(w0.value, lattice) if w0 else LatticeField.zeros(lattice)
    u1 = project(w1.value, lattice) if w1 else LatticeField.zeros(lattice)

    traj = simulate(u0, u1, config, params)
    ledger = edie_audit(traj, config, params)
    tol = cfg.get("tolerances", {})
    report = apriori_bounds(ledger, rtol=float(tol.get("apriori_rtol", 1e-4)))
    edie_rtol = float(tol.get("edie_rtol", 1e-6))
    edie_ok = ledger.max_rel_residual <= edie_rtol

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    traj.save(out / "trajectory.npz")
    traj.export_csv(out / "trajectory.csv", params=params, ledger=ledger)
    ledger.to_csv(out / "ledger.csv")
    summary = {
        "environment": environment_info(),
        "config": cfg,
        "n_points": lattice.n_points,
        "n_cells": lattice.n_cells,
        "edie_max_rel_residual": ledger.max_rel_residual,
        "edie_rtol": edie_rtol,
        "edie_ok": bool(edie_ok),
        "apriori": report.to_dict(),
        "all_passed": bool(edie_ok and report.all_ok),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1))
    print(f"samples: {traj.n_samples}, points: {lattice.n_points}")
    print(f"energy-identity residual: {ledger.max_rel_residual:.3e} "
          f"(tolerance {edie_rtol:g}) -> {'ok' if edie_ok else 'FAIL'}")
    for e in report.entries:
        print(f"  bound {e['name']}: {e['observed']:.6g} <= {e['bound']:.6g} "
              f"-> {'ok' if e['ok'] else 'FAIL'}")
    return 0 if summary["all_passed"] else 1


def _sweep_spec_from_cfg(cfg: dict, keep_states: bool = False) -> SweepSpec:
    dim, A, omega, omega_tilde = _geometry(cfg)
    phys = _require(cfg, "physics")
    sweep = _require(cfg, "sweep")
    mcfg = _require(cfg, "model")
    data = cfg.get("initial_data", {})
    rule = sweep.get("delta_rule", {"kind": "equal"})
    return SweepSpec(
        dim=dim,
        A=A,
        omega=omega,
        omega_tilde=omega_tilde,
        eps_seq=tuple(float(e) for e in _require(sweep, "eps", "sweep")),
        delta_rule=DeltaRule(rule.get("kind", "equal"), float(rule.get("value", 1.0))),
        model_name=_require(mcfg, "name", "model"),
        model_params=mcfg.get("params", {}),
        rho=float(_require(phys, "rho", "physics")),
        nu=float(_require(phys, "nu", "physics")),
        t_end=float(_require(phys, "t_end", "physics")),
        sample_times=tuple(float(t) for t in _require(sweep, "sample_times", "sweep")),
        displacement=data.get("displacement", "sine_bump"),
        velocity=data.get("velocity", "zero"),
        integrator=cfg.get("integrator"),
        dt_divisor=float(sweep.get("dt_divisor", 50.0)),
        sample_every=int(sweep.get("sample_every", 1)),
        reference=cfg.get("reference", {}),
        keep_states=keep_states,
    )


def cmd_converge(args) -> int:
    cfg = _load_config(args.config)
    spec = _sweep_spec_from_cfg(cfg)
    from .convergence import run_sweep

    report = run_sweep(spec)
    tol = cfg.get("tolerances", {})
    assertions = evaluate_sweep(
        report,
        final_ac_fraction=float(tol.get("final_ac_fraction", 0.1)),
        edie_rtol=float(tol.get("edie_rtol", 1e-6)),
    )
    paths = report_emit(report, args.out, assertions=assertions, tolerances=tol)
    for a in assertions:
        print(("ok  " if a["passed"] else "FAIL") + " " + a["name"])
    print(f"wrote {paths['csv']} and {paths['json']}")
    return 0 if paths["summary"]["all_passed"] else 1


def cmd_recover(args) -> int:
    cfg = _load_config(args.config)
    dim, A, omega, omega_tilde = _geometry(cfg)
    model = _model_from_cfg(cfg, dim, A)
    rec = _require(cfg, "recovery")
    eps_seq = [float(e) for e in _require(rec, "eps", "recovery")]
    names = rec.get("fields", ["sine_bump"])
    rule = rec.get("delta_rule", {"kind": "equal"})
    delta_rule = DeltaRule(rule.get("kind", "equal"), float(rule.get("value", 1.0)))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    all_ok = True
    for name in names:
        table = recovery_check(
            name, eps_seq, model, dim, A, omega, omega_tilde, delta_rule
        )
        gaps = table.gaps()
        graderrs = [r.grad_l2_error for r in table.rows]
        fitted = max(r.fitted_c for r in table.rows)
        ok = (
            all(b < a for a, b in zip(gaps, gaps[1:]))
            and all(b < a for a, b in zip(graderrs, graderrs[1:]))
            and fitted <= table.c_bound * (1 + 1e-9)
        )
        all_ok &= ok
        recovery_table_csv(table, out / f"recovery_{name}.csv")
        print(f"{'ok  ' if ok else 'FAIL'} {name}: gaps {gaps}, "
              f"fitted sup constant {fitted:.3g} (bound {table.c_bound:.3g})")
    return 0 if all_ok else 1


def cmd_tensor(args) -> int:
    params = _parse_params(args.param)
    model = make_model(args.model, args.dim, np.asarray(args.A or np.eye(args.dim)),
                       **params)
    tensor = tensor_for_model(model)
    rep = tensor.symmetry_report()
    print(f"model: {args.model}, dim {args.dim}, params {params or '(defaults)'}")
    if tensor.dim == 1:
        print(f"stiffness (scalar): {float(tensor.C.reshape(())):.12g}")
    else:
        print("tensor entries C[i,j,k,l]:")
        d = tensor.dim
        for i in range(d):
            for j in range(d):
                row = " ".join(
                    f"{tensor.C[i, j, k, l]: .6e}"
                    for k in range(d)
                    for l in range(d)
                )
                print(f"  C[{i},{j},:,:] = {row}")
    ok = (
        rep["minor_asymmetry"] <= 1e-10
        and rep["major_asymmetry"] <= 1e-10
        and rep["skew_annihilation_residual"] <= 1e-10
    )
    print(f"symmetry report: {rep} -> {'ok' if ok else 'FAIL'}")
    return 0 if ok else 1


def cmd_check_model(args) -> int:
    params = _parse_params(args.param)
    model = make_model(args.model, args.dim, np.asarray(args.A or np.eye(args.dim)),
                       **params)
    report = check_assumptions(model, trials=args.trials, seed=args.seed)
    print(json.dumps(report.to_dict(), indent=1))
    return 0 if report.all_passed else 1


def cmd_audit(args) -> int:
    traj = Trajectory.load(args.traj)
    from .dynamics import rebuild_params

    params = rebuild_params(traj)
    ledger = edie_audit(traj, traj.config, params)
    report = apriori_bounds(ledger)
    print(f"samples: {traj.n_samples}, horizon: {traj.times[-1]:g}")
    print(f"energy-identity residual (rel): {ledger.max_rel_residual:.3e}")
    for e in report.entries:
        print(f"  bound {e['name']}: {e['observed']:.6g} <= {e['bound']:.6g} "
              f"-> {'ok' if e['ok'] else 'FAIL'}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        ledger.to_csv(out / "ledger.csv")
        print(f"wrote {out / 'ledger.csv'}")
    return 0 if report.all_ok else 1


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latdyn",
        description="Lattice dynamics, the elastodynamic limit, and convergence checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one lattice simulation with audits")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("converge", help="run a spacing sweep against the continuum")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_converge)

    p = sub.add_parser("recover", help="projected-field energy recovery tables")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_recover)

    p = sub.add_parser("tensor", help="print the elasticity tensor of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--param", action="append", metavar="NAME=VALUE")
    p.add_argument("--A", type=json.loads, default=None,
                   help="lattice basis as a JSON matrix")
    p.set_defaults(fn=cmd_tensor)

    p = sub.add_parser("check-model", help="sampled checks of the model assumptions")
    p.add_argument("--model", required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--param", action="append", metavar="NAME=VALUE")
    p.add_argument("--A", type=json.loads, default=None)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_check_model)

    p = sub.add_parser("audit", help="re-audit a saved trajectory")
    p.add_argument("--traj", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_audit)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
