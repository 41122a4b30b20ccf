"""Extended correlation tensor T_{mu_1...mu_N} = Tr[rho sigma_mu_1 x ... x sigma_mu_N].

A full tensor is a real numpy array of shape ``(4,) * N``; index 0 is the
identity slot and 1, 2, 3 are x, y, z. Sectors are materialized as sparse
dicts keyed by full-length index tuples.
"""
from __future__ import annotations

from functools import reduce
from itertools import product

import numpy as np

from .exceptions import ParameterError, SizeError
from .states import MAX_QUBITS, PAULIS, num_qubits

IMAG_TOL = 1e-10
IDENTITY = None  # marker for an unmeasured party in a direction tuple


def _as_density(state):
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        state = np.outer(state, state.conj())
    return state


def tensor_component(state, indices) -> float:
    """One tensor component, computed as the trace against a Kronecker product of Paulis."""
    rho = _as_density(state)
    n = num_qubits(rho)
    indices = tuple(indices)
    if len(indices) != n:
        raise ParameterError(f"index tuple has length {len(indices)}, state has {n} qubits")
    if any(m not in (0, 1, 2, 3) for m in indices):
        raise ParameterError(f"indices must be in 0..3, got {indices}")
    op = reduce(np.kron, (PAULIS[m] for m in indices))
    value = np.trace(rho @ op)
    if abs(value.imag) >= IMAG_TOL:
        raise AssertionError(f"component {indices} has imaginary part {value.imag:.3g}")
    return float(value.real)


def full_tensor(state) -> np.ndarray:
    """All 4**N components as an array of shape ``(4,) * N``.

    Each qubit's (row, column) index pair is contracted with the stack of
    Pauli matrices in turn, which is equivalent to the trace against every
    Kronecker product but costs O(N 4**N) instead of O(16**N).
    """
    rho = _as_density(state)
    n = num_qubits(rho)
    if n > MAX_QUBITS:
        raise SizeError(f"{n} qubits exceeds cap {MAX_QUBITS}")
    x = rho.reshape((2,) * (2 * n))
    # Tr[rho sigma] = sum_{ij} rho[i, j] sigma[j, i]; contract the leading row/column
    # pair each step and append the new Pauli axis at the end.
    for step in range(n):
        x = np.tensordot(x, PAULIS, axes=([0, n - step], [2, 1]))
    if np.abs(x.imag).max() >= IMAG_TOL:
        raise AssertionError("correlation tensor has a non-negligible imaginary part")
    return np.ascontiguousarray(x.real)


def reconstruct(tensor: np.ndarray) -> np.ndarray:
    """Inverse of :func:`full_tensor`: rho = 2**-N sum_mu T_mu sigma_mu1 x ... x sigma_muN."""
    tensor = np.asarray(tensor, dtype=float)
    n = tensor.ndim
    x = tensor.astype(complex)
    # each step maps the leading mu axis to a trailing (row, col) pair
    for _ in range(n):
        x = np.tensordot(x, PAULIS, axes=([0], [0]))
    # axes now: r1 c1 r2 c2 ... -> r1..rN c1..cN
    order = [2 * k for k in range(n)] + [2 * k + 1 for k in range(n)]
    return x.transpose(order).reshape(2**n, 2**n) / 2**n


def order(indices) -> int:
    """Number of non-identity slots in an index tuple."""
    return sum(1 for m in indices if m != 0)


def sector(tensor: np.ndarray, k: int, parties) -> dict[tuple[int, ...], float]:
    """Components whose non-identity slots are exactly ``parties`` (1-based, size ``k``)."""
    n = tensor.ndim
    parties = sorted(parties)
    if len(parties) != k or len(set(parties)) != k:
        raise ParameterError(f"need {k} distinct parties, got {parties}")
    if k > n or any(not 1 <= p <= n for p in parties):
        raise ParameterError(f"parties {parties} invalid for {n} qubits")
    out = {}
    for js in product((1, 2, 3), repeat=k):
        idx = [0] * n
        for p, j in zip(parties, js):
            idx[p - 1] = j
        idx = tuple(idx)
        out[idx] = float(tensor[idx])
    return out


def sector_array(tensor: np.ndarray, parties) -> np.ndarray:
    """Dense ``(3,) * k`` block T_{j_1..j_k} on ``parties`` (1-based), identity elsewhere."""
    n = tensor.ndim
    parties = sorted(parties)
    if len(set(parties)) != len(parties) or any(not 1 <= p <= n for p in parties):
        raise ParameterError(f"parties {parties} invalid for {n} qubits")
    sl = tuple(slice(1, 4) if q + 1 in parties else 0 for q in range(n))
    return np.array(tensor[sl])


def _extended(direction) -> np.ndarray:
    if direction is IDENTITY:
        return np.array([1.0, 0.0, 0.0, 0.0])
    v = np.asarray(direction, dtype=float)
    if v.shape != (3,):
        raise ParameterError(f"direction must be a 3-vector, got shape {v.shape}")
    if abs(np.linalg.norm(v) - 1) > 1e-12:
        raise ParameterError(f"direction {v} is not a unit vector")
    return np.concatenate(([0.0], v))


def contract(tensor: np.ndarray, directions, check_norm: bool = True) -> float:
    """Correlation for Bloch ``directions`` (``None`` marks an unmeasured party).

    Sums T over x, y, z in every measured slot weighted by the direction
    components; equals :func:`tensor_component` on coordinate axes.
    """
    directions = list(directions)
    if len(directions) != tensor.ndim:
        raise ParameterError(f"{len(directions)} directions for a {tensor.ndim}-party tensor")
    x = tensor
    for d in directions:
        if check_norm:
            vec = _extended(d)
        else:
            vec = np.array([1.0, 0, 0, 0]) if d is IDENTITY else np.concatenate(([0.0], d))
        x = np.tensordot(vec, x, axes=([0], [0]))
    return float(x)


def tensor_to_json(tensor: np.ndarray, threshold: float = 1e-12) -> list[dict]:
    """Nonzero components as ``[{"indices": [...], "value": v}]`` sorted by indices."""
    out = []
    for idx in zip(*np.nonzero(np.abs(tensor) > threshold)):
        out.append({"indices": [int(i) for i in idx], "value": float(tensor[idx])})
    out.sort(key=lambda item: item["indices"])
    return out


def tensor_from_json(items, num_qubits: int) -> np.ndarray:
    tensor = np.zeros((4,) * num_qubits)
    for item in items:
        idx = tuple(item["indices"])
        if len(idx) != num_qubits:
            raise ParameterError(f"entry {item} has wrong length")
        tensor[idx] = item["value"]
    return tensor
