"""Problem, run-configuration and trace files."""

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..model import build_problem
from ..numerics import DimensionMismatch, NotPositiveDefinite
from ..sampling import InvalidParameter, KINDS
from ..solvers import SolverConfig

TRACE_COLUMNS = ("seed", "stage", "dual_surrogate", "primal_objective",
                 "obj_gap", "primal_dist", "consensus_res", "ineq_violation",
                 "wall_time")
OUT_OF_DOMAIN = "out_of_domain"


class ParseError(ValueError):
    """A problem or config file is malformed; the message names the file."""


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _get(doc, path, key, default=KeyError):
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected an object around {key!r}")
    if key not in doc:
        if default is KeyError:
            raise ParseError(f"{path}: missing key {key!r}")
        return default
    return doc[key]


def _array(value, path, key):
    try:
        a = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{path}: {key} must be numeric nested row arrays") from None
    if a.dtype == object or not np.all(np.isfinite(a)):
        raise ParseError(f"{path}: {key} must contain finite numbers")
    return a


def problem_from_dict(doc, path="<problem>"):
    """Build an :class:`~dualsplit.model.MpcProblem` from a ProblemFile document."""
    system = _get(doc, path, "system")
    cons = _get(doc, path, "constraints")
    weights = _get(doc, path, "weights")
    fields = {
        "A": _get(system, path, "A"), "B": _get(system, path, "B"),
        "C": _get(cons, path, "C"), "D": _get(cons, path, "D"),
        "d": _get(cons, path, "d"),
        "Q": _get(weights, path, "Q"), "R": _get(weights, path, "R"),
        "x_init": _get(doc, path, "x_init"),
    }
    arrays = {k: _array(v, path, k) for k, v in fields.items()}
    terminal = weights.get("P", doc.get("terminal_weight"))
    P = None if terminal is None else _array(terminal, path, "P")
    N = _get(doc, path, "horizon")
    if isinstance(N, bool) or not isinstance(N, int):
        raise ParseError(f"{path}: horizon must be an integer")
    try:
        return build_problem(N=N, P=P, **arrays)
    except (DimensionMismatch, NotPositiveDefinite, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from None


def problem_to_dict(prob):
    doc = {
        "system": {"A": prob.A.tolist(), "B": prob.B.tolist()},
        "constraints": {"C": prob.C.tolist(), "D": prob.D.tolist(),
                        "d": prob.d.tolist()},
        "weights": {"Q": prob.Q.tolist(), "R": prob.R.tolist()},
        "horizon": prob.N,
        "x_init": prob.x_init.tolist(),
    }
    if prob.P is not None:
        doc["weights"]["P"] = prob.P.tolist()
    return doc


def load_problem(path):
    return problem_from_dict(_read_json(path), path)


def dumps_json(doc):
    """Deterministic JSON text (sorted keys, shortest round-trip floats)."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def save_json(doc, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(doc))


@dataclass
class RunConfig:
    """Parsed RunConfigFile.

    ``solver`` is the template :class:`SolverConfig`; its seed is replaced
    per run. ``divisor`` normalizes the synchronous AMA iteration budget,
    ``None`` meaning the horizon N.
    """

    method: str
    solver: SolverConfig
    seeds: list
    divisor: float = None
    oracle_in_loop: bool = False
    reference: bool = True
    state_bound: float = None
    record_wall_time: bool = False
    extra: dict = field(default_factory=dict)

    def for_seed(self, seed, **changes):
        return replace(self.solver, seed=int(seed), **changes)

    def ama_budget(self, N):
        divisor = N if self.divisor is None else self.divisor
        return int(math.floor(self.solver.s_bar * self.solver.T / divisor))


def config_from_dict(doc, path="<config>"):
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected a JSON object")
    method = doc.get("solver", "svr_ama")
    if method not in ("ama", "svr_ama"):
        raise ParseError(f"{path}: solver must be 'ama' or 'svr_ama', got {method!r}")
    dist = doc.get("distribution", {"kind": "uniform"})
    if isinstance(dist, str):
        dist = {"kind": dist}
    kind = _get(dist, path, "kind")
    if kind not in KINDS:
        raise ParseError(f"{path}: unknown distribution kind {kind!r}")
    adaptive = doc.get("adaptive", {})
    if isinstance(adaptive, bool):
        adaptive = {"enabled": adaptive}
    seeds = doc.get("seeds", [0])
    if isinstance(seeds, int) and not isinstance(seeds, bool):
        seeds = [seeds]
    if (not isinstance(seeds, list) or not seeds
            or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds)):
        raise ParseError(f"{path}: seeds must be a nonempty list of integers")
    matching = doc.get("iteration_matching", {})
    divisor = matching.get("divisor") if isinstance(matching, dict) else matching
    sim = doc.get("simulate", {})
    try:
        solver = SolverConfig(
            tau=float(_get(doc, path, "tau")),
            T=int(doc.get("T", 10)),
            s_bar=int(doc.get("s_bar", 100)),
            distribution=kind,
            distribution_params=dist.get("params"),
            adaptive=bool(adaptive.get("enabled", kind == "adaptive")),
            adapt_threshold=float(adaptive.get("threshold", 0.01)),
            prob_floor=float(adaptive.get("floor", 0.0)),
            accelerate=bool(doc.get("accelerate", False)),
            update=doc.get("update", "block"),
            neighbor=doc.get("neighbor", "latest"),
            check_step=bool(doc.get("check_step", True)),
            kkt_tol=float(doc.get("kkt_tol", 1e-8)),
            domain_tol=float(doc.get("domain_tol", 1e-9)),
            keep_iterates=True,
        )
    except (TypeError, ValueError, InvalidParameter) as exc:
        raise ParseError(f"{path}: {exc}") from None
    if divisor is not None and not float(divisor) > 0:
        raise ParseError(f"{path}: iteration_matching divisor must be positive")
    bound = sim.get("state_bound")
    return RunConfig(method=method, solver=solver, seeds=list(seeds),
                     divisor=None if divisor is None else float(divisor),
                     oracle_in_loop=bool(sim.get("oracle_in_loop", False)),
                     reference=bool(doc.get("reference", True)),
                     state_bound=None if bound is None else float(bound),
                     record_wall_time=bool(doc.get("record_wall_time", False)),
                     extra={k: v for k, v in doc.items() if k.startswith("_")})


def load_config(path):
    return config_from_dict(_read_json(path), path)


def fmt(x):
    """17 significant digits; empty for missing values."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_trace(path, rows):
    """Write TraceFile rows (dicts keyed by :data:`TRACE_COLUMNS`)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            writer.writerow([fmt(row.get(c)) for c in TRACE_COLUMNS])


def read_trace(path):
    """Rows of a TraceFile as dicts of strings."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != TRACE_COLUMNS:
            raise ParseError(f"{path}: unexpected header {header}")
        return [dict(zip(header, r)) for r in reader]
