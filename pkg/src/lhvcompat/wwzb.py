"""Two-setting sufficient condition for LHV models of k-party correlations.

C_k is the maximum, over one measurement plane per party, of the sum of the
squared correlation components obtained by contracting the k-party sector
of the tensor with an orthonormal basis (u, v) of every plane. C_k <= 1
guarantees an explicit LHV model for the two-setting correlation functions.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .correlations import sector_array
from .exceptions import ParameterError
from .states import DickeSpec

ADMIT_TOL = 1e-9
COARSE_SWEEPS = 200
REFINE_SWEEPS = 20_000
REFINE_TOP = 2


@dataclass
class WwzbResult:
    k: int
    value: float
    planes: np.ndarray  # shape (k, 2, 3): rows u, v per party
    admits_model: bool
    sweeps: int = 0

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "value": self.value,
            "admits_model": self.admits_model,
            "planes": self.planes.tolist(),
        }


def _check_planes(planes: np.ndarray, k: int) -> np.ndarray:
    planes = np.asarray(planes, dtype=float)
    if planes.shape != (k, 2, 3):
        raise ParameterError(f"planes must have shape ({k}, 2, 3), got {planes.shape}")
    gram = np.einsum("kai,kbi->kab", planes, planes)
    if not np.allclose(gram, np.eye(2), atol=1e-10, rtol=0):
        raise ParameterError("every plane basis must be orthonormal")
    return planes


def _project(block: np.ndarray, planes, skip=None) -> np.ndarray:
    """Contract each axis of ``block`` with its 2x3 plane basis, leaving ``skip`` open."""
    x = block
    for axis, basis in enumerate(planes):
        if axis != skip:
            x = np.moveaxis(np.tensordot(basis, x, axes=([1], [axis])), 0, axis)
    return x


def sum_squares_in_planes(tensor: np.ndarray, parties, planes) -> float:
    """Sum over the 2**k choices of u or v per party of the squared correlation."""
    parties = sorted(parties)
    planes = _check_planes(planes, len(parties))
    block = sector_array(tensor, parties)
    return float(np.sum(_project(block, planes) ** 2))


def _random_planes(rng, k):
    q = [np.linalg.qr(rng.normal(size=(3, 2)))[0].T for _ in range(k)]
    return np.array(q)


def _ascend(block, planes, max_sweeps=10_000, tol=1e-14):
    """Block-coordinate ascent: each party's plane becomes the top-2 eigenspace of its Gram matrix."""
    k = block.ndim
    planes = planes.copy()
    prev = -np.inf
    value = 0.0
    for sweep in range(1, max_sweeps + 1):
        for n in range(k):
            x = np.moveaxis(_project(block, planes, skip=n), n, 0).reshape(3, -1)
            w, vecs = np.linalg.eigh(x @ x.T)
            planes[n] = vecs[:, [2, 1]].T
            value = w[2] + w[1]
        if value - prev < tol:
            break
        prev = value
    return float(value), planes, sweep


def maximize_C_k(tensor: np.ndarray, k: int, restarts: int = 200, seed: int = 0) -> WwzbResult:
    """Maximize the sum of squares over planes for the sector on parties 1..k.

    The tensor is assumed permutation symmetric, so the first ``k`` parties
    stand for every k-subset. Each restart ascends by replacing one party's
    plane at a time with the optimal plane given the others (the top-two
    eigenspace of a 3x3 Gram matrix); the best few are then run to
    convergence. A shared xy-plane start is always included.
    """
    n = tensor.ndim
    if not 1 <= k <= n:
        raise ParameterError(f"k must be in 1..{n}, got {k}")
    if restarts < 1:
        raise ParameterError("restarts must be >= 1")
    block = sector_array(tensor, range(1, k + 1))
    rng = np.random.default_rng(seed)
    starts = [np.tile(np.array([[1.0, 0, 0], [0, 1.0, 0]]), (k, 1, 1))]
    starts += [_random_planes(rng, k) for _ in range(restarts)]
    # short ascent from every start, long refinement only for the leaders;
    # degenerate maxima converge sublinearly and would dominate the runtime
    coarse = [_ascend(block, start, max_sweeps=COARSE_SWEEPS) for start in starts]
    ranked = sorted(range(len(coarse)), key=lambda i: (-coarse[i][0], i))
    best = None
    for i in ranked[:REFINE_TOP]:
        value, planes, sweeps = _ascend(block, coarse[i][1], max_sweeps=REFINE_SWEEPS)
        if best is None or value > best[0]:
            best = (value, planes, coarse[i][2] + sweeps)
    value, planes, sweeps = best
    value = max(value, 0.0)
    return WwzbResult(k=k, value=value, planes=planes, admits_model=value <= 1 + ADMIT_TOL, sweeps=sweeps)


def closed_form_C2(N: int, e: int) -> Fraction:
    """Exact C_2 of rho_N^e: 8 e^2 (N-e)^2 / ((N-1)^2 N^2)."""
    DickeSpec(N, e)
    return Fraction(8 * e**2 * (N - e) ** 2, (N - 1) ** 2 * N**2)
