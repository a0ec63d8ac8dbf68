"""Solve, closed-loop simulation and distribution benchmark protocols."""

import logging
import math
import time
from dataclasses import replace

import numpy as np

from ..model import primal_objective, time_split
from ..oracle import solve_reference
from ..solvers import ama_solve, svr_ama_split_solve
from .io import OUT_OF_DOMAIN

log = logging.getLogger("dualsplit")

SCENARIOS = ("uniform", "poisson", "pareto", "adaptive", "ama")


class StateDiverged(RuntimeError):
    """The closed-loop state left the configured bound."""


def run_once(split, run_config, seed, method=None, config=None):
    """Run one solver on ``split``; returns ``(primal, duals, trace)``."""
    method = run_config.method if method is None else method
    config = run_config.for_seed(seed) if config is None else config
    if method == "ama":
        return ama_solve(split, config)
    return svr_ama_split_solve(split, config)


def trace_rows(seed, trace, prob, ref=None, with_wall_time=False):
    """TraceFile rows for one seed, one per recorded stage."""
    rows = []
    for s in range(len(trace)):
        dv = trace.dual_value[s]
        row = {
            "seed": seed, "stage": s + 1,
            "dual_surrogate": OUT_OF_DOMAIN if math.isnan(dv) else dv,
            "primal_objective": trace.primal_objective[s],
            "consensus_res": trace.consensus_res[s],
            "ineq_violation": trace.ineq_violation[s],
            "wall_time": trace.wall_time[s] if with_wall_time else None,
        }
        if ref is not None and trace.y:
            y = trace.y[s]
            row["obj_gap"] = primal_objective(prob, y) - ref.objective
            row["primal_dist"] = float(np.sum((y - ref.y_star) ** 2))
        rows.append(row)
    return rows


def _meta(trace):
    return {
        "final_probs": None if trace.probs is None else trace.probs.tolist(),
        "adaptations": [[int(s), [int(i) for i in idx]] for s, idx in trace.adaptations],
        "restarts": [int(s) for s in trace.restarts],
        "wall_time": [float(t) for t in trace.wall_time],
    }


def solve(prob, run_config):
    """Run the configured solver for every seed.

    Returns
    -------
    rows : list of dict
        TraceFile rows ordered by (seed, stage).
    meta : dict
        Final distributions, adaptation and restart logs, timings.
    """
    split = time_split(prob)
    ref = solve_reference(prob) if run_config.reference else None
    rows, meta = [], {"seeds": {}}
    for seed in run_config.seeds:
        started = time.perf_counter()
        _, _, trace = run_once(split, run_config, seed)
        log.info("seed %d: %d stages in %.3f s", seed, len(trace),
                 time.perf_counter() - started)
        rows += trace_rows(seed, trace, prob, ref, run_config.record_wall_time)
        meta["seeds"][str(seed)] = _meta(trace)
    if ref is not None:
        meta["reference_objective"] = ref.objective
    return rows, meta


def simulate(prob, run_config, steps, seed, state_bound=None):
    """Closed-loop MPC from ``prob.x_init`` for ``steps`` sampling instants.

    Each step solves the MPC problem at the current state, applies the
    first input of the returned primal (stage minimizers at the averaged
    multipliers) and propagates ``x+ = A x + B u``. With
    ``run_config.oracle_in_loop`` the reference solver supplies the input.

    Returns
    -------
    dict
        ``states`` (steps+1, n), ``inputs`` (steps, m), ``stage_cost``,
        ``cumulative_cost``, per-step TraceFile rows (last outer stage of
        each solve) and ``last_inner_inputs`` from the final inner iterate.

    Raises
    ------
    StateDiverged
        If ``||x||`` exceeds ``state_bound`` (default ``1e6 ||x_init|| + 1``).
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    bound = state_bound
    if bound is None:
        bound = run_config.state_bound
    if bound is None:
        bound = 1e6 * float(np.linalg.norm(prob.x_init)) + 1.0
    split0 = time_split(prob)
    config = run_config.for_seed(seed, keep_iterates=False)
    x = prob.x_init.copy()
    states, inputs, costs, rows, last_inner = [x.copy()], [], [], [], []
    n = prob.n
    for k in range(steps):
        split = split0.with_initial_state(x)
        if run_config.oracle_in_loop:
            ref = solve_reference(split.problem)
            u = ref.y_star[0, n:].copy()
            last_inner.append(u.tolist())
            rows.append({"seed": seed, "stage": k + 1, "dual_surrogate": ref.objective,
                         "primal_objective": ref.objective, "obj_gap": 0.0,
                         "primal_dist": 0.0, "consensus_res": 0.0,
                         "ineq_violation": 0.0})
        else:
            # a distinct stream per step keeps the seeds' runs independent
            cfg = replace(config, seed=(int(seed), k))
            primal, _, trace = run_once(split, run_config, seed, config=cfg)
            u = primal.y[0, n:].copy()
            if trace.y_last is not None:
                last_inner.append(trace.y_last[0, n:].tolist())
            row = trace_rows(seed, trace, split.problem, None,
                             run_config.record_wall_time)[-1]
            row["stage"] = k + 1
            rows.append(row)
        costs.append(0.5 * float(x @ prob.Q @ x + u @ prob.R @ u))
        inputs.append(u)
        x = prob.A @ x + prob.B @ u
        states.append(x.copy())
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > bound:
            raise StateDiverged(f"state norm exceeded {bound:g} at step {k + 1}")
    return {"states": np.array(states), "inputs": np.array(inputs),
            "stage_cost": np.array(costs),
            "cumulative_cost": float(np.sum(costs)),
            "rows": rows, "last_inner_inputs": last_inner}


def scenario_config(run_config, scenario):
    """Solver configuration for one benchmark scenario."""
    base = run_config.solver
    if scenario == "ama":
        return replace(base, adaptive=False, distribution="uniform")
    if scenario == "adaptive":
        return replace(base, adaptive=True, distribution="uniform",
                       distribution_params=None)
    params = base.distribution_params if base.distribution == scenario else None
    return replace(base, adaptive=False, distribution=scenario,
                   distribution_params=params)


def bench(prob, run_config, scenarios=SCENARIOS):
    """Distribution benchmark: SVR-AMA per sampler plus iteration-matched AMA.

    Returns
    -------
    traces : dict
        Scenario name to (rows, meta).
    summary : dict
        Per scenario, mean and standard deviation over seeds of the final
        ``obj_gap`` and ``primal_dist``.
    """
    split = time_split(prob)
    ref = solve_reference(prob)
    budget = run_config.ama_budget(prob.N)
    traces, summary = {}, {}
    for scenario in scenarios:
        cfg = scenario_config(run_config, scenario)
        rows, meta = [], {"seeds": {}}
        finals = []
        for seed in run_config.seeds:
            if scenario == "ama":
                c = replace(cfg, seed=int(seed))
                _, _, trace = ama_solve(split, c, iterations=budget)
            else:
                _, _, trace = svr_ama_split_solve(split, replace(cfg, seed=int(seed)))
            seed_rows = trace_rows(seed, trace, prob, ref, run_config.record_wall_time)
            rows += seed_rows
            finals.append((seed_rows[-1]["obj_gap"], seed_rows[-1]["primal_dist"]))
            meta["seeds"][str(seed)] = _meta(trace)
        meta["iterations"] = budget if scenario == "ama" else cfg.s_bar
        finals = np.array(finals, dtype=float)
        summary[scenario] = {
            "final_obj_gap_mean": float(finals[:, 0].mean()),
            "final_obj_gap_std": float(finals[:, 0].std()),
            "final_primal_dist_mean": float(finals[:, 1].mean()),
            "final_primal_dist_std": float(finals[:, 1].std()),
            "seeds": [int(s) for s in run_config.seeds],
            "outer_iterations": meta["iterations"],
        }
        traces[scenario] = (rows, meta)
        log.info("scenario %s: mean final gap %.3e", scenario,
                 summary[scenario]["final_obj_gap_mean"])
    summary["reference_objective"] = ref.objective
    return traces, summary

