"""
Pauli correlation tensor
========================
"""
from itertools import product

import numpy as np

from lhvcompat import states
from lhvcompat.correlations import contract, full_tensor, order, reconstruct, tensor_to_json

rho = states.dicke_mixture((5, 2))
T = full_tensor(rho)
print("tensor shape:", T.shape)

# odd orders vanish for the even mixture
odd = [idx for idx in product(range(4), repeat=5) if order(idx) % 2]
print("largest odd-order entry:", max(abs(T[idx]) for idx in odd))

print("<Z Z 1 1 1> =", T[3, 3, 0, 0, 0])
print("<X X Y Y 1> =", T[1, 1, 2, 2, 0])

n = np.array([1.0, 0.0, 1.0]) / np.sqrt(2)
print("two parties along (x+z)/sqrt2:", contract(T, [n, n, None, None, None]))

print("nonzero entries:", len(tensor_to_json(T)))
print("round trip error:", np.abs(reconstruct(T) - rho).max())
