"""Why accuracy is measured on CPDAGs.

Markov-equivalent DAGs have the same penalized likelihood, so the
solver can only identify the equivalence class. The brute-force oracle
on four nodes shows the tie, and the CPDAG shows what is identified.
"""

import numpy as np

from dagmip import Dag, dag_mle, dag_to_cpdag, mec_equal
from dagmip.scoring import brute_force_solutions

chain = Dag(3, frozenset({(0, 1), (1, 2)}))
reversed_chain = Dag(3, frozenset({(2, 1), (1, 0)}))
collider = Dag(3, frozenset({(0, 1), (2, 1)}))

rng = np.random.default_rng(0)
A = rng.standard_normal((3, 3))
S = A @ A.T / 3 + 0.5 * np.eye(3)
for name, g in [("0->1->2", chain), ("2->1->0", reversed_chain), ("0->1<-2", collider)]:
    print(f"{name}: objective {dag_mle(S, g, 0.05).objective:.12f}")
print("chain ~ reversed chain:", mec_equal(chain, reversed_chain))
print("chain ~ collider:      ", mec_equal(chain, collider))

print("\nCPDAG adjacency of the chain (undirected edges set both entries):")
print(dag_to_cpdag(chain).adjacency.astype(int))
print("CPDAG adjacency of the collider:")
print(dag_to_cpdag(collider).adjacency.astype(int))

# every optimum on a random 4-node problem, ties included
A = rng.standard_normal((4, 4))
S = A @ A.T / 4 + 0.2 * np.eye(4)
optima, value = brute_force_solutions(S, 0.05)
print(f"\n4 nodes: {len(optima)} DAGs attain the optimum {value:.6f}")
cp = {dag_to_cpdag(d) for d in optima}
print(f"they form {len(cp)} equivalence class(es)")
