"""Command-line entry point: ``eivlasso <subcommand> ...``.

Exit codes: 0 success, 2 configuration error (the offending key is named),
3 solver non-convergence under ``--strict``.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from eivlasso import covariance as cov
from eivlasso.conic import ConicConfig, InfeasibleProblem, solve_conic
from eivlasso.diagnostics import falsify_lower_re, falsify_upper_re
from eivlasso.gd import Diverged, GdConfig, solve
from eivlasso.harness import models
from eivlasso.harness.config import ConfigError, load_config
from eivlasso.harness.sweep import run_sweep
from eivlasso.harness.trace import run_iterate_trace
from eivlasso.simulate import gen_beta, gen_instance, load_instance, save_instance
from eivlasso.surrogate import build_surrogate, estimate_tau_B

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError("argv", message)


def _add_instance_flags(p):
    p.add_argument("--m", type=int, default=64)
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--tau-b", type=float, default=0.3)
    p.add_argument("--rho-a", type=float, default=0.3)
    p.add_argument("--rho-b", type=float, default=0.3)
    p.add_argument("--beta-length", type=float, default=5.0)
    p.add_argument("--sigma-eps", type=float, default=1.0)
    p.add_argument("--entry-dist", choices=("gaussian", "rademacher"), default="gaussian")
    p.add_argument("--seed", type=int, default=0)


def build_parser():
    ap = _Parser(prog="eivlasso", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="write an instance directory")
    _add_instance_flags(p)
    p.add_argument("--out", required=True)

    for name in ("lasso", "conic"):
        p = sub.add_parser(name, help=f"fit the {name} estimator on one instance")
        _add_instance_flags(p)
        p.add_argument("--instance", help="stored instance directory (overrides generation flags)")
        p.add_argument("--f", type=float, default=0.3, help="penalty factor")
        p.add_argument("--strict", action="store_true")
        if name == "lasso":
            p.add_argument("--zeta", default="zeta2")
            p.add_argument("--r-mult", type=float, default=1.0)
            p.add_argument("--lam", type=float, help="explicit penalty (skips the f rule)")
            p.add_argument("--max-iters", type=int, default=5000)
            p.add_argument("--trace-out", help="write the iterate trace CSV here")
        else:
            p.add_argument("--mu", type=float)
            p.add_argument("--omega", type=float)
            p.add_argument("--lambda-conic", type=float, default=1.0)
            p.add_argument("--max-iters", type=int, default=20000)

    for name in ("sweep", "trace"):
        p = sub.add_parser(name, help=f"run a {name} experiment from a config file")
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.add_argument("--workers", type=int)

    p = sub.add_parser("diagnose", help="RE probes on a stored surrogate matrix")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--gamma", help="CSV matrix (optional '# dim=k' header)")
    src.add_argument("--instance", help="instance directory; Gamma_hat is rebuilt")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--smoothness", type=float, help="also probe the upper condition")
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="write the probe report here")
    return ap


def _instance_from_args(args):
    """Return ``(inst, meta)`` with the scalars needed for the penalty rule."""
    if getattr(args, "instance", None):
        inst, meta = load_instance(args.instance)
        for key in ("trace_A", "tau_B", "B_op_norm", "a_max"):
            if meta.get(key) is None:
                raise ConfigError(f"meta.{key}", "missing from the instance directory")
        return inst, meta
    if not 1 <= args.d <= args.m:
        raise ConfigError("d", f"need 1 <= d <= m, got d={args.d}, m={args.m}")
    A = cov.ar1(args.m, args.rho_a)
    B = cov.zeros(args.n) if args.tau_b == 0 else cov.scale_to_trace(
        cov.ar1(args.n, args.rho_b), args.n, args.tau_b)
    beta = gen_beta(args.m, args.d, args.beta_length, seed=args.seed)
    inst = gen_instance(A, B, beta, args.sigma_eps, args.entry_dist, seed=args.seed)
    meta = {"trace_A": A.trace, "tau_B": B.trace / args.n, "B_op_norm": B.op_norm,
            "a_max": A.max_diag, "lambda_max_A": A.lambda_max, "lambda_min_A": A.lambda_min}
    return inst, meta


def _penalties(inst, meta, tau_hat, f):
    n, m = inst.X.shape
    lr = math.sqrt(math.log(m) / n)
    sq_a = math.sqrt(meta["a_max"])
    omega = 0.1 * (math.sqrt(meta["tau_B"]) + sq_a) * lr
    mu = f * (math.sqrt(meta["B_op_norm"]) + sq_a) * math.sqrt(tau_hat) * lr
    return mu * float(np.linalg.norm(inst.beta_star)) + omega, mu, omega


def _report(beta, inst, extra):
    l1, l2 = models.rel_errors(beta, inst.beta_star)
    out = {"rel_l1_error": l1, "rel_l2_error": l2, "nnz": int(np.count_nonzero(beta))}
    out.update(extra)
    for k, v in out.items():
        print(f"{k} = {v}")


def cmd_simulate(args):
    inst, meta = _instance_from_args(args)
    save_instance(inst, args.out, extra_meta={
        "B_op_norm": meta["B_op_norm"], "a_max": meta["a_max"],
        "lambda_max_A": meta["lambda_max_A"], "lambda_min_A": meta["lambda_min_A"],
        "rho_A": args.rho_a, "rho_Bstar": args.rho_b, "beta_length": args.beta_length,
    })
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_lasso(args):
    inst, meta = _instance_from_args(args)
    tau_hat = estimate_tau_B(inst.X, meta["trace_A"])
    pair = build_surrogate(inst.X, inst.y, tau_hat)
    lam = args.lam if args.lam is not None else _penalties(inst, meta, tau_hat, args.f)[0]
    lmax = meta.get("lambda_max_A")
    lmin = meta.get("lambda_min_A")
    if lmax is None:
        raise ConfigError("meta.lambda_max_A", "missing from the instance directory")
    presets = {"zeta1": lmax + 0.5 * (lmin or 0.0), "zeta2": 1.5 * lmax, "zeta3": 2.0 * lmax}
    try:
        zeta = presets[args.zeta] if args.zeta in presets else float(args.zeta) * lmax
    except ValueError:
        raise ConfigError("zeta", f"expected zeta1/zeta2/zeta3 or a multiplier, got {args.zeta!r}") from None
    d = max(int(np.count_nonzero(inst.beta_star)), 1)
    R = args.r_mult * float(np.linalg.norm(inst.beta_star)) * math.sqrt(d)
    try:
        beta, tr = solve(pair, GdConfig(lam=lam, R=R, zeta=zeta, max_iters=args.max_iters,
                                        record_trace=bool(args.trace_out)),
                         beta_star=inst.beta_star)
    except Diverged as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    if args.trace_out:
        tr.to_csv(args.trace_out)
    _report(beta, inst, {"lambda": lam, "zeta": zeta, "R": R, "tau_hat_B": tau_hat,
                         "iterations": tr.iterations_run, "converged": tr.converged,
                         "oscillating": tr.oscillating})
    if args.strict and not tr.converged:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_conic(args):
    inst, meta = _instance_from_args(args)
    tau_hat = estimate_tau_B(inst.X, meta["trace_A"])
    pair = build_surrogate(inst.X, inst.y, tau_hat)
    _, mu, omega = _penalties(inst, meta, tau_hat, args.f)
    mu = args.mu if args.mu is not None else mu
    omega = args.omega if args.omega is not None else omega
    try:
        sol = solve_conic(pair, ConicConfig(mu=mu, omega=omega, lambda_conic=args.lambda_conic,
                                            max_iters=args.max_iters))
    except InfeasibleProblem as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    _report(sol.beta_hat, inst, {"mu": mu, "omega": omega, "t_hat": sol.t_hat,
                                 "objective": sol.objective, "iterations": sol.iterations,
                                 "converged": sol.converged, "feas_residual": sol.feas_residual})
    if args.strict and not sol.converged:
        return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_sweep(args):
    cfg = load_config(args.config)
    rows = run_sweep(cfg, workers=args.workers, out_dir=args.out)
    print(f"{len(rows)} cells written to {os.path.join(args.out or cfg.output_dir, 'sweep.csv')}")
    return EXIT_OK


def cmd_trace(args):
    cfg = load_config(args.config)
    curves, runs = run_iterate_trace(cfg, workers=args.workers, out_dir=args.out)
    flagged = sum(bool(r["oscillating"] or r["diverged"]) for r in runs)
    print(f"{len(runs)} runs ({flagged} oscillating) written to "
          f"{os.path.join(args.out or cfg.output_dir, 'trace.csv')}")
    return EXIT_OK


def _load_matrix(path):
    with open(path) as fh:
        first = fh.readline()
    if first.startswith("#"):
        return cov.load_csv(path).matrix
    M = np.loadtxt(path, delimiter=",", ndmin=2)
    if M.shape[0] != M.shape[1]:
        raise ConfigError("gamma", f"matrix in {path} is not square: {M.shape}")
    return M


def cmd_diagnose(args):
    if args.gamma:
        G = _load_matrix(args.gamma)
    else:
        inst, meta = load_instance(args.instance)
        G = build_surrogate(inst.X, inst.y, estimate_tau_B(inst.X, meta["trace_A"])).Gamma_hat
    reports = [falsify_lower_re(G, args.alpha, args.tau, args.trials, args.seed)]
    if args.smoothness is not None:
        reports.append(falsify_upper_re(G, args.smoothness, args.tau, args.trials, args.seed))
    for r in reports:
        state = "violated" if r.violated else "no violation found"
        print(f"{r.condition}: worst_margin = {r.worst_margin!r} ({state}; "
              f"exact={r.exact}, samples={r.samples_used})")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([r.to_dict() for r in reports], fh, indent=2)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "lasso": cmd_lasso, "conic": cmd_conic,
            "sweep": cmd_sweep, "trace": cmd_trace, "diagnose": cmd_diagnose}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.cmd](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
