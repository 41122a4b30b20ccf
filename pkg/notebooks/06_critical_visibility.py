"""
Critical visibility from the local polytope
===========================================

Mix the state with white noise and find the largest weight at which the
full behavior still lies in the local polytope. The search over settings
is short here; the CLI default uses 50 restarts.
"""
import numpy as np

from lhvcompat import states
from lhvcompat.polytope import critical_visibility, local_decomposition, mixed_behavior, visibility_for_settings
from lhvcompat.seesaw import paper_settings

rho = states.dicke_mixture((5, 2))

fixed = visibility_for_settings(rho, paper_settings())
print(f"at fixed settings: p = {fixed.p_crit:.6f} with {len(fixed.nonzero_weights())} vertices in the model")
err = np.abs(fixed.reconstruct().probabilities - mixed_behavior(rho, paper_settings(), fixed.p_crit).probabilities).max()
print("reconstruction error:", err)

over = local_decomposition(mixed_behavior(rho, paper_settings(), fixed.p_crit + 0.01))
print("one percent more signal:", over.status)

res = critical_visibility(rho, 2, seed=0, restarts=2)
print(f"optimized settings: p_cr = {res.p_crit:.6f} after {res.probes} LP solves")
print("shared Bloch vectors:\n", np.round(res.settings[0], 4))
