"""Command-line entry point: ``dualsplit {solve,simulate,bench,gen,check-constants}``.

Exit status is 0 on success, 1 when an input file fails to parse or
validate and 2 when a solver or the closed loop fails.
"""

import argparse
import logging
import os
import sys
from dataclasses import asdict, replace

from ..model import time_split
from ..numerics import NoConvergence, NotPositiveDefinite
from ..oracle import Infeasible, MaxIterations
from ..sampling import InvalidParameter
from ..solvers import (NonFiniteIterate, StepTooLarge, compute_constants,
                       compute_rho)
from . import io, runs
from .synthetic import gen_synthetic

log = logging.getLogger("dualsplit")

SOLVER_ERRORS = (StepTooLarge, NonFiniteIterate, runs.StateDiverged, Infeasible,
                 MaxIterations, NoConvergence, NotPositiveDefinite)


def _configure_logging():
    level = os.environ.get("DUALSPLIT_LOG", "WARNING").upper()
    if level.isdigit():
        level = int(level)
    elif not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="dualsplit: %(levelname)s: %(message)s")


def _parse_seeds(text):
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = part.split(":")
            seeds.extend(range(int(lo), int(hi)))
        elif part:
            seeds.append(int(part))
    if not seeds:
        raise argparse.ArgumentTypeError("empty seed list")
    return seeds


def _load(args):
    prob = io.load_problem(args.problem)
    rc = io.load_config(args.config)
    if getattr(args, "seeds", None):
        rc.seeds = list(args.seeds)
    return prob, rc


def _meta_path(out):
    return out + ".meta.json"


def _config_doc(rc):
    doc = asdict(rc.solver)
    doc["seed"] = None
    return {"method": rc.method, "solver": doc, "seeds": rc.seeds,
            "divisor": rc.divisor}


def cmd_solve(args):
    prob, rc = _load(args)
    rows, meta = runs.solve(prob, rc)
    io.write_trace(args.out, rows)
    meta["config"] = _config_doc(rc)
    io.save_json(meta, _meta_path(args.out))
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_simulate(args):
    prob, rc = _load(args)
    if args.oracle:
        rc.oracle_in_loop = True
    if args.steps < 1:
        raise io.ParseError("--steps must be at least 1")
    rows, meta = [], {"seeds": {}, "config": _config_doc(rc)}
    for seed in rc.seeds:
        res = runs.simulate(prob, rc, args.steps, seed)
        rows += res["rows"]
        meta["seeds"][str(seed)] = {
            "cumulative_cost": res["cumulative_cost"],
            "stage_cost": res["stage_cost"].tolist(),
            "states": res["states"].tolist(),
            "inputs": res["inputs"].tolist(),
            "last_inner_inputs": res["last_inner_inputs"],
        }
        print(f"seed {seed}: cumulative cost {res['cumulative_cost']:.17g}")
    io.write_trace(args.out, rows)
    io.save_json(meta, _meta_path(args.out))
    return 0


def cmd_bench(args):
    prob, rc = _load(args)
    os.makedirs(args.out, exist_ok=True)
    scenarios = args.scenarios.split(",") if args.scenarios else runs.SCENARIOS
    unknown = set(scenarios) - set(runs.SCENARIOS)
    if unknown:
        raise io.ParseError(f"unknown scenarios: {sorted(unknown)}")
    traces, summary = runs.bench(prob, rc, scenarios)
    for name, (rows, meta) in traces.items():
        path = os.path.join(args.out, f"{name}.csv")
        io.write_trace(path, rows)
        io.save_json(meta, _meta_path(path))
    io.save_json(summary, os.path.join(args.out, "summary.json"))
    for name in scenarios:
        s = summary[name]
        print(f"{name:9s} final obj_gap {s['final_obj_gap_mean']:.6e} "
              f"+- {s['final_obj_gap_std']:.2e}")
    return 0


def cmd_gen(args):
    doc = gen_synthetic(args.n, args.m, args.horizon, args.kappa, args.seed,
                        p=args.p, q_min=args.q_min, input_gain=args.input_gain,
                        row_scale=args.row_scale)
    text = io.dumps_json(doc)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def cmd_check_constants(args):
    prob = io.load_problem(args.problem)
    split = time_split(prob)
    report = {}
    if args.config:
        rc = io.load_config(args.config)
        solver = rc.solver
        dist = replace(solver, seed=0).make_distribution(prob.N)
    else:
        solver, dist = None, None
    c = compute_constants(split, dist)
    report.update({
        "sigma_f": c.sigma_f, "L_f": c.L_f,
        "eig_max_Hy": c.eig_max_Hy, "eig_min_Hy": c.eig_min_Hy,
        "LgradF": c.LgradF, "L_star": c.L_star, "L_pi_star": c.L_pi_star,
        "L_pi_star_min": c.L_pi_star_min, "L_pi": c.L_pi,
    })
    if solver is not None:
        report["tau"] = solver.tau
        report["T"] = solver.T
        try:
            report["rho_thm2"] = compute_rho(solver.tau, solver.T, c.L_star,
                                             c.L_f, "thm2")
        except StepTooLarge as exc:
            report["rho_thm2"] = None
            report["rho_error"] = str(exc)
    sys.stdout.write(io.dumps_json(report))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dualsplit",
        description="Horizon-split dual solvers for linear MPC.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_help):
        p.add_argument("--problem", required=True, help="ProblemFile JSON")
        p.add_argument("--config", required=True, help="RunConfigFile JSON")
        p.add_argument("--out", required=True, help=out_help)
        p.add_argument("--seeds", type=_parse_seeds,
                       help="override the config seeds, e.g. 0,1,2 or 0:10")

    p = sub.add_parser("solve", help="run the configured solver per seed")
    common(p, "TraceFile CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="closed-loop MPC simulation")
    common(p, "closed-loop TraceFile CSV")
    p.add_argument("--steps", type=int, required=True, help="closed-loop steps")
    p.add_argument("--oracle", action="store_true",
                   help="use the reference QP solver in the loop")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="sampling distribution benchmark")
    common(p, "output directory")
    p.add_argument("--scenarios", help="comma-separated subset of "
                   + ",".join(runs.SCENARIOS))
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="random ill-conditioned ProblemFile")
    p.add_argument("--kappa", type=float, required=True,
                   help="target condition number")
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--horizon", type=int, default=60)
    p.add_argument("--p", type=int, default=None, help="constraint rows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--q-min", type=float, default=1.0)
    p.add_argument("--input-gain", type=float, default=1.0)
    p.add_argument("--row-scale", type=float, default=1.0)
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check-constants",
                       help="print curvature constants and the rate certificate")
    p.add_argument("--problem", required=True)
    p.add_argument("--config", help="RunConfigFile JSON supplying tau, T and pi")
    p.set_defaults(func=cmd_check_constants)
    return parser


def main(argv=None):
    _configure_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (io.ParseError, InvalidParameter) as exc:
        print(f"dualsplit: error: {exc}", file=sys.stderr)
        return 1
    except SOLVER_ERRORS as exc:
        print(f"dualsplit: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"dualsplit: error: {exc}", file=sys.stderr)
        return 1
