"""Stage-sampling distributions and the adaptive redistribution rule.

Uniform, truncated Poisson and truncated Pareto weights over the N+1
stages, then a few adaptation passes: a stage whose multipliers barely
moved between snapshots gives half its probability to its neighbours.
"""

import numpy as np

from dualsplit import Rng, adapt, make_distribution, sample

N = 12
for kind in ("uniform", "poisson", "pareto"):
    dist = make_distribution(kind, N=N)
    print(f"{kind:8s}", np.array2string(dist.probs, precision=3, max_line_width=120))

counts = np.bincount(sample(make_distribution("poisson", N=N), Rng(0), size=10**5),
                     minlength=N + 1)
print("poisson draws", counts)

# stages 0-3 have settled; the rest still move
dist = make_distribution("uniform", N=N)
change = np.r_[np.zeros(4), np.ones(N - 3)]
for k in range(4):
    dist = adapt(dist, change, threshold=0.01)
    print(f"pass {k + 1}", np.array2string(dist.probs, precision=3, max_line_width=120))
