"""
Dicke states and their spin-flipped mixtures
============================================

Build |D_5^2>, mix it evenly with its flipped partner, and check that
tracing one qubit out of |D_6^3> gives the same mixture.
"""
import numpy as np

from lhvcompat import states

psi = states.dicke_state(5, 2)
support = np.flatnonzero(psi)
print("basis states in |D_5^2>:", [format(b, "05b") for b in support])

rho = states.dicke_mixture((5, 2))
print("eigenvalues above 1e-12:", np.round(np.linalg.eigvalsh(rho)[-2:], 12))

# the mixture is a marginal of a pure six-qubit Dicke state
six = states.projector(states.dicke_state(6, 3))
print("max |Tr_1 D_6^3 - rho_5^2| =", np.abs(states.partial_trace(six, 1) - rho).max())

noisy = states.mix_with_white_noise(rho, 0.75)
print("purity at p = 0.75:", np.trace(noisy @ noisy).real)
