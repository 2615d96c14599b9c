"""Command-line front door: constants, solve, sweep, verify.

Configuration comes from an optional JSON file (flat "exponents" object plus
per-command blocks) with flags overriding file values; unknown keys are
rejected.  Outputs are deterministic: same config and seed give byte-identical
files, and every artifact embeds the config hash and rule id.

Exit codes: 0 ok, 2 configuration/range error, 3 solver failure,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import NoConvergence, RangeError
from .params import validate_exponents
from .quad import build_ball_rule
from .serialize import (atomic_write, canonical_json, config_hash,
                        field_to_csv, sweep_to_csv)
from .solver import SolverOptions, critical_sweep, solve_subcritical
from .special import constant_band
from .suites import SUITE_NAMES, run_suites

_EXPONENT_KEYS = {"n", "m", "lambda", "alpha", "beta", "p", "q"}
_TOP_KEYS = {"exponents", "rule", "solve", "sweep", "verify", "seed", "out"}
_RULE_KEYS = {"dim", "radial_order", "angular_order"}
_SOLVE_KEYS = {"max_iter", "tol", "delta_min"}
_SWEEP_KEYS = {"schedule"}
_VERIFY_KEYS = {"suite", "theta", "kappa", "threads"}


def _load_config(path):
    if path is None:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    _reject_unknown(cfg, _TOP_KEYS, "top level")
    _reject_unknown(cfg.get("exponents", {}), _EXPONENT_KEYS, "exponents")
    _reject_unknown(cfg.get("rule", {}), _RULE_KEYS, "rule")
    _reject_unknown(cfg.get("solve", {}), _SOLVE_KEYS, "solve")
    _reject_unknown(cfg.get("sweep", {}), _SWEEP_KEYS, "sweep")
    _reject_unknown(cfg.get("verify", {}), _VERIFY_KEYS, "verify")
    return cfg


def _reject_unknown(block, allowed, where):
    unknown = set(block) - allowed
    if unknown:
        raise RangeError(f"unknown config keys in {where}: {sorted(unknown)}")


def _add_common(ap):
    ap.add_argument("--config", default=None, help="JSON config file")
    ap.add_argument("--n", type=int, default=None)
    ap.add_argument("--m", type=int, default=None)
    ap.add_argument("--lambda", dest="lam", type=float, default=None)
    ap.add_argument("--alpha", type=float, default=None)
    ap.add_argument("--beta", type=float, default=None)
    ap.add_argument("--p", type=float, default=None)
    ap.add_argument("--q", type=float, default=None)
    ap.add_argument("--dim", type=int, default=None)
    ap.add_argument("--radial-order", type=int, default=None)
    ap.add_argument("--angular-order", type=int, default=None)
    ap.add_argument("--tol", type=float, default=None)
    ap.add_argument("--max-iter", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--out", default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="rhls",
                                 description="Reversed weighted HLS numerics")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("constants", help="two-sided sharp-constant band")
    _add_common(c)

    s = sub.add_parser("solve", help="subcritical extremal pair on the ball")
    _add_common(s)
    s.add_argument("--delta-min", type=float, default=None,
                   help="required subcritical gap (default 1e-3)")

    w = sub.add_parser("sweep", help="subcritical-to-critical limit sweep")
    _add_common(w)
    w.add_argument("--schedule", type=float, nargs="+", default=None)
    w.add_argument("--delta-min", type=float, default=None)

    v = sub.add_parser("verify", help="identity/inequality check suites")
    _add_common(v)
    v.add_argument("--suite", nargs="+", default=None,
                   choices=list(SUITE_NAMES) + ["all"])
    v.add_argument("--theta", type=float, default=None)
    v.add_argument("--kappa", type=float, default=None)
    v.add_argument("--threads", type=int, default=None)
    return ap


def _merged(args, cfg):
    exps = dict(cfg.get("exponents", {}))
    for key, attr in (("n", "n"), ("m", "m"), ("lambda", "lam"), ("alpha", "alpha"),
                      ("beta", "beta"), ("p", "p"), ("q", "q")):
        val = getattr(args, attr, None)
        if val is not None:
            exps[key] = val
    rule_cfg = dict(cfg.get("rule", {}))
    for key, attr in (("dim", "dim"), ("radial_order", "radial_order"),
                      ("angular_order", "angular_order")):
        val = getattr(args, key if key != "radial_order" else "radial_order", None)
        val = getattr(args, attr, None)
        if val is not None:
            rule_cfg[key] = val
    solve_cfg = dict(cfg.get("solve", {}))
    if getattr(args, "tol", None) is not None:
        solve_cfg["tol"] = args.tol
    if getattr(args, "max_iter", None) is not None:
        solve_cfg["max_iter"] = args.max_iter
    if getattr(args, "delta_min", None) is not None:
        solve_cfg["delta_min"] = args.delta_min
    sweep_cfg = dict(cfg.get("sweep", {}))
    if getattr(args, "schedule", None) is not None:
        sweep_cfg["schedule"] = args.schedule
    verify_cfg = dict(cfg.get("verify", {}))
    for key in ("suite", "theta", "kappa", "threads"):
        val = getattr(args, key, None)
        if val is not None:
            verify_cfg[key] = val
    seed = args.seed if args.seed is not None else cfg.get("seed", 12345)
    out = args.out if args.out is not None else cfg.get("out", ".")
    return {"exponents": exps, "rule": rule_cfg, "solve": solve_cfg,
            "sweep": sweep_cfg, "verify": verify_cfg, "seed": seed, "out": out}


def _exponent_set(exps, require_balance=True):
    return validate_exponents(
        n=int(exps.get("n", 1)), m=int(exps.get("m", 1)),
        lam=exps.get("lambda"), alpha=exps.get("alpha", 0.0),
        beta=exps.get("beta", 0.0), p=exps.get("p"), q=exps.get("q"),
        require_balance=require_balance)


def _rule_from(cfg_rule):
    return build_ball_rule(int(cfg_rule.get("dim", 2)),
                           int(cfg_rule.get("radial_order", 64)),
                           int(cfg_rule.get("angular_order", 64)))


def _solver_options(solve_cfg):
    return SolverOptions(max_iter=int(solve_cfg.get("max_iter", 500)),
                         tol=float(solve_cfg.get("tol", 1e-10)),
                         delta_min=float(solve_cfg.get("delta_min", 1e-3)))


def cmd_constants(merged):
    es = _exponent_set(merged["exponents"])
    band = constant_band(es)
    payload = {"config_hash": config_hash(merged), "exponents": es.to_dict(),
               "band": band.to_dict()}
    text = canonical_json(payload)
    sys.stdout.write(text)
    if merged["out"] != ".":
        atomic_write(os.path.join(merged["out"], "constants.json"), text)
    return 0


def cmd_solve(merged):
    es = _exponent_set(merged["exponents"], require_balance=False)
    rule = _rule_from(merged["rule"])
    opts = _solver_options(merged["solve"])
    code = 0
    try:
        report = solve_subcritical(es, rule, opts)
    except NoConvergence as exc:
        report = exc.report
        code = 3
    payload = {"config_hash": config_hash(merged), "rule_id": rule.rule_id,
               "report": report.to_dict()}
    out = merged["out"]
    atomic_write(os.path.join(out, "solve_report.json"), canonical_json(payload))
    atomic_write(os.path.join(out, "f.csv"), field_to_csv(report.f))
    atomic_write(os.path.join(out, "g.csv"), field_to_csv(report.g))
    sys.stdout.write(canonical_json({"c_star": report.c_star,
                                     "converged": report.converged,
                                     "iterations": report.iterations}))
    return code


def cmd_sweep(merged):
    es = _exponent_set(merged["exponents"])
    rule = _rule_from(merged["rule"])
    opts = _solver_options(merged["solve"])
    schedule = merged["sweep"].get("schedule", [0.08, 0.04, 0.02, 0.01])
    try:
        sweep = critical_sweep(es, schedule, rule, opts)
    except NoConvergence:
        return 3
    band = constant_band(es)
    payload = {"config_hash": config_hash(merged), "rule_id": rule.rule_id,
               "sweep": sweep.to_dict(), "band": band.to_dict(),
               "n_est_in_band": bool(band.n_lower <= sweep.n_est <= band.n_upper)}
    out = merged["out"]
    atomic_write(os.path.join(out, "sweep.csv"), sweep_to_csv(sweep))
    atomic_write(os.path.join(out, "n_est.json"), canonical_json(payload))
    sys.stdout.write(canonical_json({"n_est": sweep.n_est, "stable": sweep.stable}))
    return 0 if all(e.converged for e in sweep.entries) else 3


def cmd_verify(merged):
    es = _exponent_set(merged["exponents"])
    rule = _rule_from(merged["rule"])
    vcfg = merged["verify"]
    names = vcfg.get("suite", ["all"])
    reports = run_suites(names, es, rule, seed=merged["seed"],
                         theta=vcfg.get("theta"), kappa=vcfg.get("kappa"),
                         solver_opts=_solver_options(merged["solve"]),
                         threads=int(vcfg.get("threads", 1)))
    payload = {"config_hash": config_hash(merged), "rule_id": rule.rule_id,
               "checks": [r.to_dict() for r in reports]}
    atomic_write(os.path.join(merged["out"], "verify.json"), canonical_json(payload))
    width = max(len(r.name) for r in reports)
    for r in reports:
        status = "PASS" if r.passed else "FAIL"
        sys.stdout.write(f"{r.name:<{width}}  {status}  residual={r.residual:.3e} "
                         f"tol={r.tolerance:.1e}\n")
    failing = [r.name for r in reports if not r.passed]
    if failing:
        sys.stdout.write("failing checks: " + ", ".join(failing) + "\n")
        return 4
    return 0


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _load_config(args.config)
        merged = _merged(args, cfg)
        handler = {"constants": cmd_constants, "solve": cmd_solve,
                   "sweep": cmd_sweep, "verify": cmd_verify}[args.command]
        return handler(merged)
    except RangeError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return 2
    except NoConvergence as exc:
        sys.stderr.write(f"solver failure: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
