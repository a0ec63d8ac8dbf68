"""Split a small MPC problem along the horizon and inspect its dual.

The horizon-split problem has one decision block per stage, coupled only
through the consensus rows. Its dual is concave and, for each stage, the
minimizer over y_t has a closed form, which is what the solvers exploit.
"""

import numpy as np

from dualsplit import build_problem, solve_reference, time_split
from dualsplit.solvers import (DualVars, certified_step, compute_constants,
                               dual_surrogate, init_duals)

# a lightly damped oscillator with an input box and a state bound
A = np.array([[1.0, 0.1], [-0.2, 0.95]])
B = np.array([[0.0], [0.1]])
C = np.vstack([np.eye(2), np.zeros((2, 2))])
D = np.vstack([np.zeros((2, 1)), [[1.0], [-1.0]]])
d = np.array([2.0, 2.0, 0.2, 0.2])
prob = build_problem(A, B, C, D, d, Q=np.diag([4.0, 1.0]), R=[[1.0]], N=8,
                     x_init=[1.5, 0.0])

split = time_split(prob)
print("Hy:", split.Hy.shape, " Hz:", split.Hz.shape)
print("rows per stage:", [s.stop - s.start for s in split.row_slices])

c = compute_constants(split)
print(f"sigma_f = {c.sigma_f:.3g}, L_f = {c.L_f:.3g}, L(grad F) = {c.LgradF:.3g}")

ref = solve_reference(prob)
print(f"optimal cost {ref.objective:.6f}, active rows {int(np.sum(ref.lam > 1e-8))}")

# weak duality at the origin, strong duality at the optimal multipliers
print(f"D(0)   = {dual_surrogate(split, init_duals(split)):.6f}")
mu_star = DualVars.from_stacked(split, ref.mu_star())
print(f"D(mu*) = {dual_surrogate(split, mu_star):.6f}")

for T in (10, 100, 1000):
    tau, rho = certified_step(T, c.L_star, c.L_f)
    print(f"T = {T:5d}: certified tau = {tau:.3e}, rho = {rho:.3f}")
