"""
Checking identifiability conditions
===================================

The pairwise criteria need the views to be correlated in a "diverse" way;
the ICA estimator needs view noise that is not proportional to the shared
scales.  ``check_assumptions`` evaluates both on the generating model.
"""

import numpy as np

from limvam import AdjacencySet, GroundTruth, check_assumptions, simulate
from limvam.synth import generate_dag, generate_independent, make_rng

# a Figure-1 style model satisfies everything
_, truth = simulate("figure1-gaussian", n=10, seed=1)
print(check_assumptions(truth).as_dict())

# independent views carry no cross-view information
order, adj = generate_dag(4, 1.0, m=3, rng=make_rng(0))
_, truth = generate_independent(adj, 1.0, 10, cross_view_corr="identity", ordering=order)
rep = check_assumptions(truth)
print("\nindependent views, correlation diversity:", rep.correlation_diversity)

# view 2 is view 1 plus an independent copy: both correlations equal 1/sqrt(2)
B = np.array([[0.0, 0.0], [0.6, 0.0]])
cov = np.array([[1.0, 1.0], [1.0, 2.0]])
truth = GroundTruth(np.array([0, 1]), AdjacencySet(np.stack([B, B])), np.stack([cov, cov]))
print("summed copies, violations:", check_assumptions(truth).correlation_diversity_violations)

# equalizing the scaled noise in all five views breaks noise diversity
for k in (0, 4, 5):
    _, truth = simulate("noise-diversity", n=10, seed=2, noise_diversity_violations=k)
    print(f"{k} equalized views -> noise diversity {check_assumptions(truth).noise_diversity}")
