"""Command-line front end.

Subcommands: ``decompose`` (model decomposition of a vector), ``certify``
(precertificate and identifiability verdict), ``solve`` (penalized or
equality-constrained recovery), ``experiment`` (Monte-Carlo sweeps, CSV +
JSON sidecar), ``polar`` (polar-calculus identity checks).

Exit codes: 0 success / identifiable; 2 validation failure; 3 not
identifiable; 4 inconclusive certificate; 5 solver non-convergence; 6
identity check failure.  All structured output is JSON with sorted keys.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .gauges import (L1, Linf, GroupL1L2, PolyhedralH, BlockPartition,
                     UnsupportedGaugeError)
from .model import (decompose, decompose_l1, decompose_linf, decompose_group,
                    decompose_polyhedral, tv1d_gauge, DegenerateModelError)
from .certificates import irrepresentability, RestrictedInjectivityError
from .solvers import (solve_penalized, solve_noiseless, SolveOptions,
                      SolverError)
from . import experiments as exp
from . import polytopes as poly

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NOT_IDENTIFIABLE = 3
EXIT_INCONCLUSIVE = 4
EXIT_NO_CONVERGENCE = 5
EXIT_IDENTITY_FAILED = 6


class CliError(Exception):
    def __init__(self, message, code=EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _emit(payload, out=None):
    text = json.dumps(payload, sort_keys=True, indent=2, allow_nan=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _load_json_arg(arg, kind="value"):
    """Inline JSON if the argument looks like JSON, else a file path."""
    if arg is None:
        raise CliError(f"missing {kind}")
    s = arg.strip()
    if s.startswith("[") or s.startswith("{"):
        try:
            return json.loads(s)
        except json.JSONDecodeError as exc:
            raise CliError(f"bad inline JSON for {kind}: {exc}")
    if not os.path.exists(arg):
        raise CliError(f"no such file for {kind}: {arg}")
    with open(arg) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"bad JSON in {arg}: {exc}")


def _vector(arg, kind="vector"):
    data = _load_json_arg(arg, kind)
    v = np.asarray(data, dtype=float)
    if v.ndim != 1:
        raise CliError(f"{kind} must be a flat JSON array")
    if not np.all(np.isfinite(v)):
        raise CliError(f"{kind} has non-finite entries")
    return v


def _matrix(arg, kind="matrix"):
    data = _load_json_arg(arg, kind)
    m = np.asarray(data, dtype=float)
    if m.ndim != 2:
        raise CliError(f"{kind} must be a JSON array of rows")
    if not np.all(np.isfinite(m)):
        raise CliError(f"{kind} has non-finite entries")
    return m


def _build_gauge(args, n):
    reg = args.reg
    if reg == "l1":
        return L1(n)
    if reg == "linf":
        return Linf(n)
    if reg == "group":
        if not args.blocks:
            raise CliError("--reg group needs --blocks")
        blocks = _load_json_arg(args.blocks, "blocks")
        return GroupL1L2(BlockPartition(blocks, n))
    if reg == "tv1d":
        return tv1d_gauge(n)
    if reg == "polyhedral":
        if not args.hmat:
            raise CliError("--reg polyhedral needs --hmat")
        return PolyhedralH(_matrix(args.hmat, "hmat"))
    raise CliError(f"unknown regularizer {reg!r}")


def _subspace_payload(md):
    return {
        "dim_T": md.T.dim,
        "dim_S": md.S.dim,
        "T_basis": md.T.basis.tolist(),
        "S_basis": md.S.basis.tolist(),
        "e": md.e.tolist(),
        "f": md.f.tolist(),
    }


def cmd_decompose(args):
    x = _vector(args.x, "--x")
    n = len(x)
    try:
        if args.reg == "l1":
            md, p = decompose_l1(x, delta=args.delta)
        elif args.reg == "linf":
            md, p = decompose_linf(x, delta=args.delta)
        elif args.reg == "group":
            blocks = _load_json_arg(args.blocks, "blocks") if args.blocks else None
            if blocks is None:
                raise CliError("--reg group needs --blocks")
            md, p = decompose_group(x, BlockPartition(blocks, n),
                                    delta=args.delta)
        elif args.reg == "polyhedral" and args.analysis_domain:
            md, p = decompose_polyhedral(x, mu_choice=args.mu_choice,
                                         delta=args.delta)
        else:
            g = _build_gauge(args, n)
            md = decompose(g, x, delta=args.delta)
            p = None
    except DegenerateModelError as exc:
        raise CliError(f"degenerate input: {exc}")
    payload = _subspace_payload(md)
    if p is not None:
        payload.update({"nu": p.nu, "mu": p.mu, "tau": p.tau, "xi": p.xi})
    _emit(payload, args.out)
    return EXIT_OK


def cmd_certify(args):
    x = _vector(args.x, "--x")
    Phi = _matrix(args.phi, "--phi")
    if Phi.shape[1] != len(x):
        raise CliError("Phi column count must match the length of x")
    try:
        md = decompose(_build_gauge(args, len(x)), x)
    except DegenerateModelError as exc:
        raise CliError(f"degenerate input: {exc}")
    try:
        report = irrepresentability(Phi, md)
    except RestrictedInjectivityError as exc:
        _emit({"ic": None, "identifiable": False,
               "restricted_injective": False, "alpha_f": [],
               "method": "exact", "reason": str(exc)}, args.out)
        return EXIT_INCONCLUSIVE
    _emit(report.to_json_dict(), args.out)
    if report.identifiable:
        return EXIT_OK
    if report.method != "exact":
        return EXIT_INCONCLUSIVE
    return EXIT_NOT_IDENTIFIABLE


def cmd_solve(args):
    x_len = None
    Phi = _matrix(args.phi, "--phi")
    y = _vector(args.y, "--y")
    if Phi.shape[0] != len(y):
        raise CliError("Phi row count must match the length of y")
    g = _build_gauge(args, Phi.shape[1])
    opts = SolveOptions(tol=args.tol, max_iter=args.max_iter,
                        solver=args.solver)
    try:
        if args.mode == "penalized":
            if args.lam is None or args.lam <= 0:
                raise CliError("--lambda must be positive for penalized mode")
            res = solve_penalized(Phi, y, args.lam, g, opts)
        else:
            res = solve_noiseless(Phi, y, g, opts)
    except (ValueError, UnsupportedGaugeError, SolverError) as exc:
        raise CliError(str(exc))
    _emit(res.to_json_dict(), args.out)
    return EXIT_OK if res.converged else EXIT_NO_CONVERGENCE


# -- experiments ------------------------------------------------------------

_CONFIG_SCHEMAS = {
    "cs-linf": {"required": {"kind", "n", "i_size", "trials", "seed"},
                "optional": {"q", "beta"}},
    "phase-transition": {"required": {"kind", "n", "i_size", "trials", "seed",
                                      "q_grid"},
                         "optional": {"mode"}},
    "model-selection": {"required": {"kind", "phi", "x", "noise_levels",
                                     "lambda_grid", "trials", "seed"},
                        "optional": {"reg"}},
}


def _validate_config(cfg):
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise CliError("config must be an object with a 'kind' key")
    kind = cfg["kind"]
    schema = _CONFIG_SCHEMAS.get(kind)
    if schema is None:
        raise CliError(f"unknown experiment kind {kind!r}")
    keys = set(cfg)
    missing = schema["required"] - keys
    unknown = keys - schema["required"] - schema["optional"]
    if missing:
        raise CliError(f"config missing keys: {sorted(missing)}")
    if unknown:
        raise CliError(f"config has unknown keys: {sorted(unknown)}")
    return kind


def _write_sweep(sweep, out_dir, stem):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, stem + ".csv")
    json_path = os.path.join(out_dir, stem + ".json")
    sweep.write_csv(csv_path)
    sweep.write_config_json(json_path, version=__version__)
    return csv_path, json_path


def _run_cs_linf(n, i_size, trials, seed, q=None, beta=2.0, jobs=1):
    if q is None:
        q, _ = exp.cs_linf_bound(n, i_size, beta)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        args = [(seed, n, q, i_size, t, "ic") for t in range(trials)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outs = list(pool.map(_linf_trial_star, args))
        success = sum(bool(o[1]) for o in outs)
        cell = exp.SweepCell({"N": n, "Q": q, "I_size": i_size}, trials,
                             success, beta=beta,
                             bound=exp.cs_linf_bound(n, i_size, beta)[1])
        return exp.SweepResult({"N": n, "Q": q, "I_size": i_size,
                                "trials": trials, "seed": seed,
                                "beta": beta}, [cell])
    return exp.run_linf_cs_trials(n, q, i_size, trials, seed, beta=beta)


def _linf_trial_star(a):
    return exp._linf_trial(*a)


def _run_model_selection(phi_arg, x_arg, noise_levels, lambda_grid, trials,
                         seed):
    from .model import decompose_l1
    from .certificates import stability_constants
    Phi = _matrix(phi_arg, "phi")
    x0 = _vector(x_arg, "x")
    md, p = decompose_l1(x0)
    return exp.model_selection_sweep(Phi, x0, md, p, noise_levels,
                                     lambda_grid, trials, seed)


def cmd_experiment(args):
    jobs = max(1, args.jobs)
    if args.experiment == "from-config":
        cfg = _load_json_arg(args.config, "--config")
        kind = _validate_config(cfg)
        if kind == "cs-linf":
            sweep = _run_cs_linf(cfg["n"], cfg["i_size"], cfg["trials"],
                                 cfg["seed"], q=cfg.get("q"),
                                 beta=cfg.get("beta", 2.0), jobs=jobs)
            stem = "cs_linf"
        elif kind == "model-selection":
            if cfg.get("reg", "l1") != "l1":
                raise CliError("model-selection config supports reg 'l1'")
            try:
                sweep = _run_model_selection(
                    json.dumps(cfg["phi"]) if isinstance(cfg["phi"], list)
                    else cfg["phi"],
                    json.dumps(cfg["x"]) if isinstance(cfg["x"], list)
                    else cfg["x"],
                    cfg["noise_levels"], cfg["lambda_grid"], cfg["trials"],
                    cfg["seed"])
            except ValueError as exc:
                raise CliError(str(exc))
            stem = "model_selection"
        else:
            sweep = exp.phase_transition_sweep(
                cfg["n"], cfg["i_size"], cfg["q_grid"], cfg["trials"],
                cfg["seed"], mode=cfg.get("mode", "ic"))
            stem = "phase_transition"
    elif args.experiment == "cs-linf":
        sweep = _run_cs_linf(args.n, args.i_size, args.trials, args.seed,
                             q=args.q, beta=args.beta, jobs=jobs)
        stem = "cs_linf"
    elif args.experiment == "phase-transition":
        grid = list(range(args.q_min, args.q_max + 1, args.q_step))
        sweep = exp.phase_transition_sweep(args.n, args.i_size, grid,
                                           args.trials, args.seed,
                                           mode=args.mode)
        stem = "phase_transition"
    else:
        raise CliError(f"unknown experiment {args.experiment!r}")
    csv_path, json_path = _write_sweep(sweep, args.out or ".", stem)
    _emit({"csv": csv_path, "json": json_path,
           "cells": [{"params": c.params, "frequency": c.frequency}
                     for c in sweep.cells]})
    return EXIT_OK


# -- polar identities --------------------------------------------------------

def _check_identity(name, P1, P2, seed):
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((200, P1.dim))
    tol = 1e-5

    def close(A, B):
        worst = 0.0
        for u in dirs:
            a, b = A.support(u), B.support(u)
            worst = max(worst, abs(a - b) / (1.0 + abs(b)))
        return worst <= tol, worst

    if name == "bipolar":
        return close(P1.polar().polar(), P1)
    if name == "intersection":
        lhs = poly.polytope_intersection_polar(P1, P2)
        rhs = P1.intersection(P2).polar()
        return close(lhs, rhs)
    if name == "scaling":
        rho = 2.0
        return close(P1.scale(rho).polar(), P1.polar().scale(1.0 / rho))
    if name == "minkowski-gauge":
        S = P1.minkowski_sum(P2)
        worst = 0.0
        for u in dirs[:50]:
            a = poly.minkowski_sum_gauge(P1, P2, u)
            b = S.gauge(u)
            worst = max(worst, abs(a - b) / (1.0 + abs(b)))
        return worst <= tol, worst
    if name == "linear-image":
        D = rng.standard_normal((P1.dim, P1.dim))
        img = P1.linear_image(D)
        worst = 0.0
        for u in dirs[:50]:
            a = poly.linear_image_gauge(P1, D, u)
            b = img.gauge(u)
            worst = max(worst, abs(a - b) / (1.0 + abs(b)))
        return worst <= tol, worst
    if name == "inverse-sum":
        ok, worst = poly.inverse_sum_polar_check(P1, P2, directions=200,
                                                 seed=seed)
        return ok, worst
    if name == "cone-sum":
        return _cone_sum_check(P1, rng)
    raise CliError(f"unknown identity {name!r}")


def _cone_sum_check(D_poly, rng, radii=(16.0, 64.0, 256.0, 1024.0)):
    """(C + D)_polar vs C_polar ∩ D_polar for a cone C truncated at growing
    radii.  The identity is exact only in the untruncated limit, so the
    check asks the discrepancy to shrink with the radius (at least tenfold
    across the sweep, ending below 5e-2) and reports the final gap."""
    d = D_poly.dim
    gens = rng.standard_normal((d + 2, d))
    gens /= np.linalg.norm(gens, axis=1, keepdims=True)
    dirs = rng.standard_normal((100, d))
    gaps = []
    for R in radii:
        C_R = poly.Polytope.from_vertices(
            np.vstack([np.zeros((1, d)), R * gens]))
        lhs = C_R.minkowski_sum(D_poly).polar()
        # RHS: {u: <R g_i, u> <= 1} ∩ D_polar, enumerated jointly
        Dp = D_poly.polar()
        rhs = poly.Polytope.from_halfspaces(
            np.vstack([R * gens, Dp.normals]),
            np.concatenate([np.ones(len(gens)), Dp.offsets]))
        worst = 0.0
        for u in dirs:
            a, b = lhs.support(u), rhs.support(u)
            worst = max(worst, abs(a - b) / (1.0 + abs(b)))
        gaps.append(worst)
    shrinking = all(b <= a * 1.05 for a, b in zip(gaps, gaps[1:]))
    ok = shrinking and gaps[-1] <= 0.05 and gaps[-1] <= gaps[0] / 10.0
    return ok, gaps[-1]


def cmd_polar(args):
    if args.polytope:
        P1 = poly.Polytope.from_json_dict(_load_json_arg(args.polytope,
                                                         "--polytope"))
        P2 = poly.random_polytope(P1.dim, seed=args.seed + 1)
    else:
        P1 = poly.random_polytope(args.dim, seed=args.seed)
        P2 = poly.random_polytope(args.dim, seed=args.seed + 1)
    names = ([args.identity] if args.identity != "all" else
             ["bipolar", "intersection", "scaling", "minkowski-gauge",
              "linear-image", "inverse-sum", "cone-sum"])
    results = {}
    all_ok = True
    for name in names:
        ok, worst = _check_identity(name, P1, P2, args.seed)
        results[name] = {"pass": bool(ok), "worst_gap": float(worst)}
        all_ok = all_ok and ok
    _emit(results, args.out)
    return EXIT_OK if all_ok else EXIT_IDENTITY_FAILED


def build_parser():
    ap = argparse.ArgumentParser(
        prog="gaugerec",
        description="Model subspaces, dual certificates and recovery for "
                    "low-complexity convex regularizers.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_reg(p):
        p.add_argument("--reg", required=True,
                       choices=["l1", "linf", "group", "tv1d", "polyhedral"])
        p.add_argument("--blocks", help="JSON list of index blocks (group)")
        p.add_argument("--hmat", help="JSON matrix of directions (polyhedral)")

    d = sub.add_parser("decompose", help="model decomposition at a point")
    add_reg(d)
    d.add_argument("--x", required=True)
    d.add_argument("--delta", type=float, default=0.5)
    d.add_argument("--mu-choice", type=float, default=0.5)
    d.add_argument("--analysis-domain", action="store_true",
                   help="treat --x as a point of the polyhedral analysis domain")
    d.add_argument("--out")
    d.set_defaults(fn=cmd_decompose)

    c = sub.add_parser("certify", help="identifiability certificate")
    add_reg(c)
    c.add_argument("--x", required=True)
    c.add_argument("--phi", required=True)
    c.add_argument("--out")
    c.set_defaults(fn=cmd_certify)

    s = sub.add_parser("solve", help="penalized or noiseless recovery")
    add_reg(s)
    s.add_argument("--mode", choices=["penalized", "noiseless"],
                   required=True)
    s.add_argument("--phi", required=True)
    s.add_argument("--y", required=True)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--tol", type=float, default=1e-8)
    s.add_argument("--max-iter", type=int, default=200000)
    s.add_argument("--solver", choices=["auto", "fista", "pd", "lp"],
                   default="auto")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_solve)

    e = sub.add_parser("experiment", help="Monte-Carlo sweeps")
    esub = e.add_subparsers(dest="experiment", required=True)
    e1 = esub.add_parser("cs-linf")
    e1.add_argument("--n", type=int, required=True)
    e1.add_argument("--i-size", type=int, required=True)
    e1.add_argument("--beta", type=float, default=2.0)
    e1.add_argument("--q", type=int)
    e1.add_argument("--trials", type=int, default=1000)
    e2 = esub.add_parser("phase-transition")
    e2.add_argument("--n", type=int, required=True)
    e2.add_argument("--i-size", type=int, required=True)
    e2.add_argument("--q-min", type=int, required=True)
    e2.add_argument("--q-max", type=int, required=True)
    e2.add_argument("--q-step", type=int, default=2)
    e2.add_argument("--trials", type=int, default=200)
    e2.add_argument("--mode", choices=["ic", "noiseless_recovery"],
                    default="ic")
    e3 = esub.add_parser("from-config")
    e3.add_argument("--config", required=True)
    for p in (e1, e2, e3):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--out")
    e.set_defaults(fn=cmd_experiment)

    pl = sub.add_parser("polar", help="verify polar-calculus identities")
    pl.add_argument("--identity", default="all",
                    choices=["all", "bipolar", "intersection", "scaling",
                             "minkowski-gauge", "linear-image", "inverse-sum",
                             "cone-sum"])
    pl.add_argument("--dim", type=int, default=3)
    pl.add_argument("--seed", type=int, default=0)
    pl.add_argument("--polytope", help="Polytope JSON file")
    pl.add_argument("--out")
    pl.set_defaults(fn=cmd_polar)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, poly.PolytopeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
