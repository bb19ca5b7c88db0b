"""Stopping at a statistically justified gap.

With tau = lambda^2 * m(m-1)/4 the search stops once the bounds are that
close. The estimate barely changes while fewer nodes are explored;
multiplying tau by m goes too far.
"""

import math

from dagmip import SolveConfig, branch_and_bound, build_problem, evaluate, gap_target
from dagmip.model import generate_data, moral_graph, random_dag, random_sem, sample_covariance

m, n = 15, 400
lam = 4 * math.log(m) / n
print(f"lambda^2 = {lam:.4f}, tau = {gap_target('theorem1', lam, m):.4f}")
print("seed   target      status       nodes  gap      d_cpdag")
for seed in range(4):
    dag = random_dag(m, m, seed=seed)
    S = sample_covariance(generate_data(random_sem(dag, seed=seed), n, seed=seed))
    problem = build_problem(S, moral_graph(dag), lam)
    for label, factor in (("exact", 0), ("tau", 1), ("m*tau", m)):
        cfg = SolveConfig(gap_target=factor * gap_target("theorem1", lam, m))
        rep = branch_and_bound(problem, cfg)
        print(f"{seed:4d}   {label:10s}  {rep.status:11s} {rep.nodes_explored:6d}  "
              f"{rep.gap:7.4f}  {evaluate(dag, rep.dag)['d_cpdag']}")
