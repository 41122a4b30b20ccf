"""
Maximal quantum violation by seesaw
===================================
"""
import numpy as np

from lhvcompat import states
from lhvcompat.bell import build_ineq5, chsh, evaluate_quantum
from lhvcompat.correlations import full_tensor
from lhvcompat.seesaw import paper_settings, seesaw_maximize

expr = build_ineq5()
T = full_tensor(states.dicke_mixture((5, 2)))

# shared settings in the xz plane, 90 degrees apart
s = paper_settings()
print("settings of party 1:\n", np.round(s[0], 5))
print("value at these settings:", evaluate_quantum(expr, T, s))

best = seesaw_maximize(expr, T, restarts=30, seed=0, record=True)
print(f"seesaw optimum {best.value:.6f} after {best.sweeps} sweeps (start {best.restart_index})")
print("parties share settings:", best.symmetric)
print("first and last trace values:", best.trace[0], best.trace[-1])
print("predicted critical visibility 6/value =", 6 / best.value)

singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
res = seesaw_maximize(chsh(), full_tensor(states.projector(singlet)), restarts=5)
print("CHSH on the singlet:", res.value, "2 sqrt2 =", 2 * np.sqrt(2))
