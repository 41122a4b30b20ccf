"""N-qubit states: Dicke states, their even mixtures, white noise, partial traces.

States are plain numpy arrays. A pure state is a complex vector of length
``2**N``; a mixed state is a complex ``2**N x 2**N`` matrix.

Basis index ``b`` stores qubit ``n`` (1-based, qubit 1 leftmost) in bit
``N - n`` of ``b``. Bit value 0 is ``|0>``, the +1 eigenstate of sigma_z.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .exceptions import ParameterError, SizeError

MAX_QUBITS = 8

PAULI_LABELS = ("I", "X", "Y", "Z")

#: sigma_mu for mu = 0, 1, 2, 3 (identity, x, y, z), stacked as a (4, 2, 2) array.
PAULIS = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
PAULIS.setflags(write=False)


def pauli(label) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``label`` in {0,1,2,3} or {'I','X','Y','Z'}."""
    if isinstance(label, str):
        try:
            label = PAULI_LABELS.index(label.upper())
        except ValueError:
            raise ParameterError(f"unknown Pauli label {label!r}") from None
    if label not in (0, 1, 2, 3):
        raise ParameterError(f"Pauli index must be in 0..3, got {label!r}")
    return PAULIS[label]


@dataclass(frozen=True)
class DickeSpec:
    """Parameters (N, e) of the even Dicke mixture rho_N^e: N odd, 1 <= e <= (N-1)/2."""

    num_qubits: int
    excitations: int

    def __post_init__(self):
        n, e = self.num_qubits, self.excitations
        if not isinstance(n, (int, np.integer)) or n < 1 or n % 2 == 0:
            raise ParameterError(f"num_qubits must be an odd positive integer, got {n!r}")
        if not isinstance(e, (int, np.integer)) or not 1 <= e <= (n - 1) // 2:
            raise ParameterError(f"excitations must satisfy 1 <= e <= {(n - 1) // 2}, got {e!r}")

    def __str__(self):
        return f"rho_{self.num_qubits}^{self.excitations}"


def num_qubits(state: np.ndarray) -> int:
    """Number of qubits of a state vector or density matrix."""
    dim = state.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ParameterError(f"dimension {dim} is not a power of two")
    if state.ndim == 2 and state.shape != (dim, dim):
        raise ParameterError(f"density matrix must be square, got shape {state.shape}")
    if state.ndim not in (1, 2):
        raise ParameterError(f"expected a vector or matrix, got ndim={state.ndim}")
    return n


def validate_density_matrix(rho: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; return ``rho`` as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2:
        raise ParameterError("density matrix must be two-dimensional")
    num_qubits(rho)
    if not np.allclose(rho, rho.conj().T, atol=atol, rtol=0):
        raise ParameterError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ParameterError(f"density matrix trace is {np.trace(rho).real}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -1e-10:
        raise ParameterError("density matrix has a negative eigenvalue")
    return rho


def dicke_state(N: int, e: int) -> np.ndarray:
    """Dicke state |D_N^e>: uniform superposition of basis states of Hamming weight ``e``.

    >>> dicke_state(2, 1).round(4)
    array([0.    +0.j, 0.7071+0.j, 0.7071+0.j, 0.    +0.j])
    """
    if not 1 <= N <= MAX_QUBITS:
        raise ParameterError(f"N must be in 1..{MAX_QUBITS}, got {N}")
    if not 0 <= e <= N:
        raise ParameterError(f"e must be in 0..{N}, got {e}")
    weights = np.array([bin(b).count("1") for b in range(2**N)])
    psi = np.where(weights == e, 1.0, 0.0).astype(complex)
    return psi / np.sqrt(comb(N, e))


def flip_all(state: np.ndarray) -> np.ndarray:
    """Apply sigma_x to every qubit of a state vector (bit complement of the index)."""
    state = np.asarray(state)
    num_qubits(state)
    return state[::-1].copy()


def projector(psi: np.ndarray) -> np.ndarray:
    """|psi><psi|."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def dicke_mixture(spec: DickeSpec) -> np.ndarray:
    """Even mixture rho_N^e = (|D_N^e><D_N^e| + |D_N^{N-e}><D_N^{N-e}|) / 2."""
    if not isinstance(spec, DickeSpec):
        spec = DickeSpec(*spec)
    n, e = spec.num_qubits, spec.excitations
    if n > MAX_QUBITS:
        raise SizeError(f"num_qubits={n} exceeds cap {MAX_QUBITS}")
    return 0.5 * (projector(dicke_state(n, e)) + projector(dicke_state(n, n - e)))


def white_noise(N: int) -> np.ndarray:
    """Maximally mixed N-qubit state."""
    if not 1 <= N <= MAX_QUBITS:
        raise ParameterError(f"N must be in 1..{MAX_QUBITS}, got {N}")
    return np.eye(2**N, dtype=complex) / 2**N


def mix_with_white_noise(state: np.ndarray, p: float) -> np.ndarray:
    """Return ``p * state + (1 - p) * identity / 2**N``."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    state = np.asarray(state, dtype=complex)
    return p * state + (1.0 - p) * white_noise(num_qubits(state))


def partial_trace(state: np.ndarray, qubit: int) -> np.ndarray:
    """Trace out ``qubit`` (1-based) from a density matrix."""
    state = np.asarray(state, dtype=complex)
    n = num_qubits(state)
    if state.ndim != 2:
        raise ParameterError("partial_trace expects a density matrix")
    if n < 2:
        raise ParameterError("cannot trace out the only qubit")
    if not 1 <= qubit <= n:
        raise ParameterError(f"qubit must be in 1..{n}, got {qubit}")
    t = state.reshape((2,) * (2 * n))
    out = np.trace(t, axis1=qubit - 1, axis2=n + qubit - 1)
    return out.reshape(2 ** (n - 1), 2 ** (n - 1))


def permute_qubits(state: np.ndarray, order) -> np.ndarray:
    """Reorder qubits: new qubit ``i`` is old qubit ``order[i]`` (0-based)."""
    state = np.asarray(state)
    n = num_qubits(state)
    order = list(order)
    if sorted(order) != list(range(n)):
        raise ParameterError(f"{order} is not a permutation of 0..{n - 1}")
    if state.ndim == 1:
        return state.reshape((2,) * n).transpose(order).reshape(-1)
    axes = order + [n + k for k in order]
    return state.reshape((2,) * (2 * n)).transpose(axes).reshape(2**n, 2**n)
