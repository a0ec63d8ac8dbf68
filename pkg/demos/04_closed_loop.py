"""Closed-loop MPC with a fixed per-step iteration budget.

At every sampling instant the controller solves the MPC problem from the
measured state with a few outer stages of SVR-AMA, applies the first
input of the averaged primal and moves the plant. The oracle-in-the-loop
run gives the cost of exact optimization.
"""

import numpy as np

from dualsplit.harness import io, runs
from dualsplit.harness.synthetic import gen_synthetic_problem

prob = gen_synthetic_problem(n=4, m=2, N=20, target_kappa=1e3, seed=5,
                             q_min=10.0, input_gain=0.5)
steps = 15
base = {"tau": 0.05, "T": 10, "s_bar": 60, "check_step": False}

exact = runs.simulate(prob, io.config_from_dict({**base, "simulate": {"oracle_in_loop": True}}),
                      steps, seed=0)
print(f"oracle in the loop: cost {exact['cumulative_cost']:.6f}")

for name, extra in (("uniform", {}), ("poisson", {"distribution": "poisson"}),
                    ("adaptive", {"adaptive": True})):
    rc = io.config_from_dict({**base, **extra})
    costs = [runs.simulate(prob, rc, steps, seed)["cumulative_cost"] for seed in range(3)]
    print(f"{name:8s}: median cost {np.median(costs):.6f}")
