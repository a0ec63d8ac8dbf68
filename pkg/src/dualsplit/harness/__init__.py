"""File formats, experiment protocols and the command-line interface."""

from .io import (OUT_OF_DOMAIN, TRACE_COLUMNS, ParseError, RunConfig,
                 config_from_dict, load_config, load_problem, problem_from_dict,
                 problem_to_dict, read_trace, write_trace)
from .runs import SCENARIOS, StateDiverged, bench, simulate, solve
from .synthetic import gen_synthetic, gen_synthetic_problem

__all__ = [
    "OUT_OF_DOMAIN", "TRACE_COLUMNS", "ParseError", "RunConfig",
    "config_from_dict", "load_config", "load_problem", "problem_from_dict",
    "problem_to_dict", "read_trace", "write_trace",
    "SCENARIOS", "StateDiverged", "bench", "simulate", "solve",
    "gen_synthetic", "gen_synthetic_problem",
]
