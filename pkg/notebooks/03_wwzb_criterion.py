"""
Two-setting LHV sufficiency test
================================

C_k sums the squared k-party correlations over one plane per party,
maximized over the planes. C_k <= 1 means the k-party two-setting
correlations admit a local model.
"""
from lhvcompat import states
from lhvcompat.correlations import full_tensor
from lhvcompat.wwzb import closed_form_C2, maximize_C_k

for spec in [(5, 1), (5, 2), (7, 1), (7, 2), (7, 3)]:
    T = full_tensor(states.dicke_mixture(spec))
    cells = []
    for k in range(2, spec[0], 2):
        res = maximize_C_k(T, k, restarts=50)
        cells.append(f"C_{k}={res.value:.4f}{'' if res.admits_model else '*'}")
    print(f"rho_{spec[0]}^{spec[1]}:", "  ".join(cells))
print("(* marks C_k > 1: no model from this test)")

# The rational formula for C_2 is the xy-plane value. For rho_7^1 the
# ZZ correlation is larger than XX and the optimum moves to an xz plane.
print("closed form C_2(7,1) =", closed_form_C2(7, 1), "vs maximum 13/49")
