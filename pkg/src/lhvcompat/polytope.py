"""Local-polytope membership and critical white-noise visibility.

Layout conventions
------------------
A behavior is an array ``P`` of shape ``(S**N, 2**N)``. Row ``r`` encodes
the settings tuple (0-based, base ``S``, party 1 most significant); column
``c`` encodes outcomes with bit ``N - n`` of ``c`` for party ``n``, bit 0
meaning +1. A local deterministic strategy of one party is an integer
``d`` in ``[0, 2**S)`` whose bit ``S - 1 - j`` is the outcome bit for setting
``j``. The joint vertex index concatenates the parties' ``d`` big-endian, so
it coincides with the strategy bit mask used in :mod:`lhvcompat.bell`.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog, minimize

from .exceptions import LPError, ParameterError, SizeError
from .states import num_qubits, permute_qubits

VERTEX_CAP = 1 << 21
DENSE_VERTEX_CAP = 1 << 20
FEAS_TOL = 1e-8
SEARCH_CAP = 100.0
_CHUNK = 1 << 15


# --------------------------------------------------------------------------- #
# Behaviors                                                                   #
# --------------------------------------------------------------------------- #


@dataclass
class Behavior:
    num_parties: int
    num_settings: int
    probabilities: np.ndarray

    def __post_init__(self):
        self.probabilities = np.asarray(self.probabilities, dtype=float)
        shape = (self.num_settings**self.num_parties, 2**self.num_parties)
        if self.probabilities.shape != shape:
            raise ParameterError(f"probabilities must have shape {shape}, got {self.probabilities.shape}")

    def probability(self, settings, outcomes) -> float:
        """P(outcomes | settings) with 1-based settings and +-1 outcomes."""
        return float(self.probabilities[_settings_row(settings, self.num_settings), _outcome_col(outcomes)])

    def correlator(self, pattern) -> float:
        """Expectation of the product of outcomes of the parties measured in ``pattern``.

        ``pattern`` follows the Bell-expression convention: 0 marks an
        unmeasured party (its first setting is used and its outcome summed out).
        """
        pattern = tuple(pattern)
        if len(pattern) != self.num_parties:
            raise ParameterError("pattern length does not match the number of parties")
        n = self.num_parties
        row = self.probabilities[_settings_row([max(p, 1) for p in pattern], self.num_settings)]
        cols = np.arange(2**n)
        sign = np.ones(2**n)
        for party, p in enumerate(pattern):
            if p:
                sign *= 1 - 2 * ((cols >> (n - 1 - party)) & 1)
        return float(sign @ row)

    def is_normalized(self, tol=1e-10) -> bool:
        return bool(np.allclose(self.probabilities.sum(axis=1), 1, atol=tol, rtol=0))

    def is_no_signaling(self, tol=1e-9) -> bool:
        """Marginals of every party subset are independent of the other parties' settings."""
        n, s = self.num_parties, self.num_settings
        p = self.probabilities.reshape((s,) * n + (2,) * n)
        for party in range(n):
            # sum over this party's outcome; result must not depend on its setting
            marg = p.sum(axis=n + party)
            ref = np.take(marg, 0, axis=party)
            for j in range(1, s):
                if not np.allclose(np.take(marg, j, axis=party), ref, atol=tol, rtol=0):
                    return False
        return True


def _settings_row(settings, s) -> int:
    row = 0
    for j in settings:
        if not 1 <= j <= s:
            raise ParameterError(f"setting index {j} outside 1..{s}")
        row = row * s + (j - 1)
    return row


def _outcome_col(outcomes) -> int:
    col = 0
    for a in outcomes:
        if a not in (1, -1):
            raise ParameterError(f"outcomes must be +-1, got {a}")
        col = 2 * col + (a < 0)
    return col


def _local_basis(vec) -> np.ndarray:
    """Unitary whose rows are the +1 and -1 eigenvectors (bras) of vec . sigma."""
    x, y, z = vec
    obs = np.array([[z, x - 1j * y], [x + 1j * y, -z]])
    w, v = np.linalg.eigh(obs)
    return v[:, ::-1].conj().T


def _settings_tuples(n, s):
    return np.array(np.unravel_index(np.arange(s**n), (s,) * n)).T


def _check_settings_array(settings, n):
    settings = np.asarray(settings, dtype=float)
    if settings.ndim != 3 or settings.shape[0] != n or settings.shape[2] != 3:
        raise ParameterError(f"settings must have shape ({n}, S, 3), got {settings.shape}")
    if not np.allclose(np.linalg.norm(settings, axis=2), 1, atol=1e-12, rtol=0):
        raise ParameterError("every setting must be a unit Bloch vector")
    return settings


def _outcome_distribution(rho, bases):
    u = bases[0]
    for b in bases[1:]:
        u = np.kron(u, b)
    return np.real(np.sum((u @ rho) * u.conj(), axis=1))


def quantum_behavior(state, settings, rows=None) -> Behavior:
    """Born-rule behavior: P(a|j) = Tr[rho (x)_n (1 + a_n s_{n,j_n} . sigma) / 2].

    ``rows`` restricts the computation to a subset of settings rows (others stay zero).
    """
    rho = np.asarray(state, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    n = num_qubits(rho)
    settings = _check_settings_array(settings, n)
    s = settings.shape[1]
    bases = [[_local_basis(settings[p, j]) for j in range(s)] for p in range(n)]
    tuples = _settings_tuples(n, s)
    probs = np.zeros((s**n, 2**n))
    for r in range(s**n) if rows is None else rows:
        dist = _outcome_distribution(rho, [bases[p][j] for p, j in enumerate(tuples[r])])
        probs[r] = dist / dist.sum()
    return Behavior(n, s, probs)


def noise_behavior(num_parties: int, num_settings: int) -> Behavior:
    return Behavior(num_parties, num_settings, np.full((num_settings**num_parties, 2**num_parties), 2.0**-num_parties))


# --------------------------------------------------------------------------- #
# Deterministic vertices                                                      #
# --------------------------------------------------------------------------- #


def local_outcome_bits(num_settings: int) -> np.ndarray:
    """(2**S, S) table: outcome bit of local strategy d at setting j."""
    d = np.arange(2**num_settings)[:, None]
    j = np.arange(num_settings)[None, :]
    return (d >> (num_settings - 1 - j)) & 1


def vertex_digits(num_parties: int, num_settings: int, indices=None) -> np.ndarray:
    """Per-party local strategies of joint vertices, shape (V, N)."""
    base = 2**num_settings
    if indices is None:
        indices = np.arange(base**num_parties, dtype=np.int64)
    shifts = num_settings * np.arange(num_parties - 1, -1, -1)
    return (indices[:, None] >> shifts) & (base - 1)


def _vertex_columns(n, s, indices):
    """Row-major behavior positions (one per settings row) of the given vertices."""
    obits = local_outcome_bits(s)
    digits = vertex_digits(n, s, indices)
    tuples = _settings_tuples(n, s)
    col = np.zeros((len(indices), s**n), dtype=np.int64)
    for party in range(n):
        col = 2 * col + obits[digits[:, party]][:, tuples[:, party]]
    return np.arange(s**n)[None, :] * 2**n + col


def deterministic_behaviors(num_parties: int, num_settings: int):
    """All local deterministic vertices as a sparse 0/1 matrix.

    Column ``i`` is the flattened behavior of vertex ``i``; there are
    ``2**(N*S)`` columns, each with exactly ``S**N`` unit entries.
    """
    n, s = num_parties, num_settings
    count = 2 ** (n * s)
    if count > DENSE_VERTEX_CAP:
        raise SizeError(f"{count} vertices exceeds cap {DENSE_VERTEX_CAP}; use the symmetric reduction")
    rows = _vertex_columns(n, s, np.arange(count, dtype=np.int64))
    data = np.ones(rows.size)
    cols = np.repeat(np.arange(count), s**n)
    return sp.csc_array((data, (rows.ravel(), cols)), shape=(s**n * 2**n, count))


def deterministic_behavior(index: int, num_parties: int, num_settings: int) -> Behavior:
    n, s = num_parties, num_settings
    probs = np.zeros(s**n * 2**n)
    probs[_vertex_columns(n, s, np.array([index]))[0]] = 1.0
    return Behavior(n, s, probs.reshape(s**n, 2**n))


# --------------------------------------------------------------------------- #
# Linear programming                                                          #
# --------------------------------------------------------------------------- #


@dataclass
class LinearProgram:
    """minimize c . x subject to A_eq x = b_eq and x >= lower."""

    objective: np.ndarray
    a_eq: object
    b_eq: np.ndarray
    lower: np.ndarray | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.b_eq = np.asarray(self.b_eq, dtype=float)
        if not sp.issparse(self.a_eq):
            self.a_eq = np.atleast_2d(np.asarray(self.a_eq, dtype=float))
        m, k = self.a_eq.shape
        if k != self.objective.size or m != self.b_eq.size:
            raise ParameterError(f"inconsistent LP dimensions: A {self.a_eq.shape}, c {self.objective.size}, b {self.b_eq.size}")
        if self.lower is None:
            self.lower = np.zeros(k)
        self.lower = np.asarray(self.lower, dtype=float)
        if self.lower.size != k:
            raise ParameterError("lower bounds have the wrong length")


@dataclass
class LPSolution:
    status: str  # "optimal", "infeasible" or "unbounded"
    value: float | None = None
    x: np.ndarray | None = None
    certificate: np.ndarray | None = None
    message: str = ""


def _farkas(lp: LinearProgram):
    """y with A^T y >= 0 and b'^T y < 0 (b' = b - A lower), proving infeasibility."""
    a = lp.a_eq
    b = lp.b_eq - a @ lp.lower
    m = b.size
    a_t = a.T if not sp.issparse(a) else a.T.tocsr()
    a_ub = sp.vstack([-a_t, sp.csr_array(-b[None, :])]) if sp.issparse(a) else np.vstack([-a_t, -b[None, :]])
    b_ub = np.concatenate([np.zeros(a.shape[1]), [1.0]])
    res = linprog(b, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * m, method="highs")
    if res.status == 0 and res.fun < -0.5:
        return res.x
    return None


def lp_solve(lp: LinearProgram) -> LPSolution:
    """Solve with HiGHS; infeasible programs come back with a Farkas certificate."""
    bounds = [(lo, None) for lo in lp.lower]
    res = linprog(lp.objective, A_eq=lp.a_eq, b_eq=lp.b_eq, bounds=bounds, method="highs")
    if res.status == 0:
        return LPSolution("optimal", float(res.fun), np.asarray(res.x), message=res.message)
    if res.status == 2:
        return LPSolution("infeasible", certificate=_farkas(lp), message=res.message)
    if res.status == 3:
        return LPSolution("unbounded", message=res.message)
    raise LPError(f"linear program failed: {res.message}")


# --------------------------------------------------------------------------- #
# Symmetric reduction                                                         #
# --------------------------------------------------------------------------- #


@dataclass
class _SymmetricModel:
    """Orbit-averaged vertices evaluated on orbit-representative behavior rows."""

    rows: np.ndarray  # representative flattened behavior indices, shape (R,)
    settings_rows: np.ndarray  # distinct settings rows among them
    columns: np.ndarray  # (R, C) averaged vertex values
    orbit_of_vertex: np.ndarray  # (V,)
    orbit_size: np.ndarray  # (C,)
    orbit_reps: list


_SYM_CACHE: dict = {}


def _symmetric_model(n, s) -> _SymmetricModel:
    key = (n, s)
    if key in _SYM_CACHE:
        return _SYM_CACHE[key]
    base = 2**s
    if base**n > VERTEX_CAP:
        raise SizeError(f"{base ** n} vertices exceeds cap {VERTEX_CAP}")
    # row representatives: multisets of per-party (setting, outcome-bit) codes
    codes = np.array(list(combinations_with_replacement(range(2 * s), n)))
    js, bits = codes // 2, codes % 2
    weights_s = s ** np.arange(n - 1, -1, -1)
    weights_2 = 2 ** np.arange(n - 1, -1, -1)
    settings_rows = js @ weights_s
    rows = settings_rows * 2**n + bits @ weights_2
    # column orbits: multisets of local strategies
    reps = list(combinations_with_replacement(range(base), n))
    rep_keys = np.array([sum(d * base ** (n - 1 - i) for i, d in enumerate(r)) for r in reps])
    order = np.argsort(rep_keys)
    obits = local_outcome_bits(s)
    total = base**n
    orbit_of_vertex = np.empty(total, dtype=np.int64)
    sums = np.zeros((len(reps), len(rows)))
    pows = base ** np.arange(n - 1, -1, -1)
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        digits = vertex_digits(n, s, idx)
        keys = np.sort(digits, axis=1) @ pows
        orb = order[np.searchsorted(rep_keys[order], keys)]
        orbit_of_vertex[idx] = orb
        match = np.ones((len(idx), len(rows)), dtype=bool)
        for party in range(n):
            match &= obits[digits[:, party]][:, js[:, party]] == bits[:, party]
        np.add.at(sums, orb, match.astype(float))
    size = np.bincount(orbit_of_vertex, minlength=len(reps))
    model = _SymmetricModel(rows, np.unique(settings_rows), (sums / size[:, None]).T, orbit_of_vertex, size, reps)
    _SYM_CACHE[key] = model
    return model


def is_permutation_symmetric(state, tol=1e-10) -> bool:
    """True if the state is invariant under every permutation of its qubits."""
    rho = np.asarray(state, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    n = num_qubits(rho)
    if n < 2:
        return True
    swap = [1, 0] + list(range(2, n))
    cycle = list(range(1, n)) + [0]
    # a transposition and an n-cycle generate the full symmetric group
    return all(np.allclose(permute_qubits(rho, g), rho, atol=tol, rtol=0) for g in (swap, cycle))


def _shared(settings) -> bool:
    return bool(np.allclose(settings, settings[0], atol=1e-12, rtol=0))


# --------------------------------------------------------------------------- #
# Visibility                                                                  #
# --------------------------------------------------------------------------- #


@dataclass
class VisibilityResult:
    p_crit: float
    weights: np.ndarray  # over all 2**(N*S) vertices
    settings: np.ndarray
    symmetric: bool = False
    probes: int = 0
    trace: list = field(default_factory=list, repr=False)
    timed_out: bool = False

    def nonzero_weights(self, tol=1e-12) -> dict[int, float]:
        idx = np.nonzero(self.weights > tol)[0]
        return {int(i): float(self.weights[i]) for i in idx}

    def reconstruct(self) -> Behavior:
        """Behavior sum_i weight_i D_i built from the certificate."""
        n, s = self.settings.shape[:2]
        idx = np.nonzero(self.weights)[0]
        flat = np.zeros(s**n * 2**n)
        positions = _vertex_columns(n, s, idx.astype(np.int64))
        np.add.at(flat, positions.ravel(), np.repeat(self.weights[idx], s**n))
        return Behavior(n, s, flat.reshape(s**n, 2**n))

    def to_json(self) -> dict:
        n, s = self.settings.shape[:2]
        digits = vertex_digits(n, s, np.array(sorted(self.nonzero_weights())))
        return {
            "p_crit": self.p_crit,
            "settings": self.settings.tolist(),
            "weights": [
                {"vertex": int(i), "strategies": d.tolist(), "weight": w}
                for (i, w), d in zip(sorted(self.nonzero_weights().items()), digits)
            ],
        }


def _visibility_lp(columns, target, noise, cap=1.0):
    """max v s.t. columns . lam = v target + (1 - v) noise, sum lam = 1, lam >= 0, 0 <= v <= cap.

    Variables are [lam..., v, slack] with v + slack = cap.
    """
    r, c = columns.shape
    a = np.zeros((r + 2, c + 2))
    a[:r, :c] = columns
    a[:r, c] = -(target - noise)
    a[r, :c] = 1.0
    a[r + 1, c] = a[r + 1, c + 1] = 1.0
    b = np.concatenate([noise, [1.0, cap]])
    obj = np.zeros(c + 2)
    obj[c] = -1.0
    return LinearProgram(obj, a, b)


def visibility_for_settings(state, settings, symmetric: bool | None = None, cap: float = 1.0) -> VisibilityResult:
    """Largest v with v P_state + (1 - v) P_noise inside the local polytope.

    ``symmetric=None`` uses the permutation-orbit reduction whenever the
    settings are shared and the state is permutation symmetric.
    """
    rho = np.asarray(state, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    n = num_qubits(rho)
    settings = _check_settings_array(settings, n)
    s = settings.shape[1]
    can_reduce = _shared(settings) and is_permutation_symmetric(rho)
    if symmetric is None:
        symmetric = can_reduce
    elif symmetric and not can_reduce:
        raise ParameterError("symmetric reduction needs shared settings and a permutation-symmetric state")
    noise = 2.0**-n
    if symmetric:
        model = _symmetric_model(n, s)
        behavior = quantum_behavior(rho, settings, rows=model.settings_rows)
        target = behavior.probabilities.ravel()[model.rows]
        lp = _visibility_lp(model.columns, target, np.full(target.size, noise), cap)
    else:
        if 2 ** (n * s) > DENSE_VERTEX_CAP:
            raise SizeError("too many vertices for the unreduced LP; use shared settings")
        target = quantum_behavior(rho, settings).probabilities.ravel()
        cols = deterministic_behaviors(n, s)
        lp = _visibility_lp_sparse(cols, target, np.full(target.size, noise), cap)
    sol = lp_solve(lp)
    if sol.status != "optimal":
        raise LPError(f"visibility LP ended with status {sol.status}: {sol.message}")
    x = np.clip(sol.x, 0.0, None)
    ncol = lp.objective.size - 2
    lam, v = x[:ncol], float(min(max(x[ncol], 0.0), cap))
    if symmetric:
        weights = (lam / model.orbit_size)[model.orbit_of_vertex]
    else:
        weights = lam
    return VisibilityResult(v, weights, settings, symmetric)


def _visibility_lp_sparse(cols, target, noise, cap=1.0):
    r, c = cols.shape
    v_col = sp.csc_array((-(target - noise))[:, None])
    top = sp.hstack([cols, v_col, sp.csc_array((r, 1))])
    norm = sp.csc_array(np.concatenate([np.ones(c), [0.0, 0.0]])[None, :])
    cap_row = sp.csc_array(np.concatenate([np.zeros(c), [1.0, 1.0]])[None, :])
    a = sp.vstack([top, norm, cap_row]).tocsc()
    b = np.concatenate([noise, [1.0, cap]])
    obj = np.zeros(c + 2)
    obj[c] = -1.0
    return LinearProgram(obj, a, b)


def local_decomposition(behavior: Behavior) -> LPSolution:
    """Feasibility LP: find weights lam >= 0 with sum_i lam_i D_i = P."""
    n, s = behavior.num_parties, behavior.num_settings
    cols = deterministic_behaviors(n, s)
    r, c = cols.shape
    a = sp.vstack([cols, sp.csc_array(np.ones((1, c)))]).tocsc()
    b = np.concatenate([behavior.probabilities.ravel(), [1.0]])
    return lp_solve(LinearProgram(np.zeros(c), a, b))


def mixed_behavior(state, settings, v: float) -> Behavior:
    """Behavior of v state + (1 - v) white noise (v may exceed 1 as an affine extension)."""
    q = quantum_behavior(state, settings)
    probs = v * q.probabilities + (1 - v) * 2.0**-q.num_parties
    return Behavior(q.num_parties, q.num_settings, probs)


# --------------------------------------------------------------------------- #
# Outer search over settings                                                  #
# --------------------------------------------------------------------------- #


def angles_to_vectors(angles) -> np.ndarray:
    """(..., 2) polar/azimuthal angles to unit Bloch vectors (..., 3)."""
    angles = np.asarray(angles, dtype=float)
    th, ph = angles[..., 0], angles[..., 1]
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)


def _params_to_settings(x, n, s, shared):
    vecs = angles_to_vectors(np.asarray(x).reshape(-1, 2))
    if shared:
        return np.tile(vecs.reshape(1, s, 3), (n, 1, 1))
    return vecs.reshape(n, s, 3)


def planar_start(num_settings: int) -> np.ndarray:
    """Angles of settings spread evenly over half of the xz great circle.

    The set is tilted by pi/8 so no vector sits on the z axis: for states
    invariant under rotations about z that point is stationary and traps the
    simplex.
    """
    th = np.pi / 2 - np.pi * np.arange(num_settings) / num_settings - np.pi / 8
    return np.stack([th, np.zeros(num_settings)], axis=1)


def critical_visibility(
    state,
    num_settings: int = 2,
    seed: int = 0,
    restarts: int = 50,
    shared: bool = True,
    initial_settings=None,
    maxiter: int = 2000,
    time_budget: float | None = None,
) -> VisibilityResult:
    """Minimum over measurement settings of :func:`visibility_for_settings`.

    Nelder-Mead over polar/azimuthal angles from a planar symmetric start and
    ``restarts`` random starts; with ``initial_settings`` the search is
    skipped and that point is evaluated directly. Parties share settings
    unless ``shared`` is False. Once ``time_budget`` seconds have passed no
    further restarts are launched and the result is flagged ``timed_out``.
    """
    rho = np.asarray(state, dtype=complex)
    n = num_qubits(rho)
    if num_settings not in (2, 3):
        raise ParameterError("num_settings must be 2 or 3")
    if n > 7:
        raise SizeError("critical_visibility supports at most 7 parties")
    if initial_settings is not None:
        result = visibility_for_settings(rho, initial_settings)
        result.probes = 1
        return result
    s = num_settings
    rng = np.random.default_rng(seed)
    k = s if shared else n * s
    starts = [np.tile(planar_start(s), (1 if shared else n, 1)).ravel()]
    for _ in range(restarts):
        th = np.arccos(rng.uniform(-1, 1, size=k))
        ph = rng.uniform(0, 2 * np.pi, size=k)
        starts.append(np.stack([th, ph], axis=1).ravel())
    probes = 0

    def objective(x):
        nonlocal probes
        probes += 1
        # uncapped so that local regions still have a slope to follow
        return visibility_for_settings(rho, _params_to_settings(x, n, s, shared), cap=SEARCH_CAP).p_crit

    best_val, best_x, trace = np.inf, None, []
    clock = time.perf_counter()
    timed_out = False
    for start in starts:
        if time_budget is not None and best_x is not None and time.perf_counter() - clock > time_budget:
            timed_out = True
            break
        res = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"xatol": 1e-7, "fatol": 1e-10, "maxiter": maxiter, "adaptive": True},
        )
        trace.append((float(res.fun), res.x.tolist()))
        if res.fun < best_val:
            best_val, best_x = float(res.fun), res.x
    result = visibility_for_settings(rho, _params_to_settings(best_x, n, s, shared))
    result.probes = probes
    result.trace = trace
    result.timed_out = timed_out
    return result


def visibility_to_json(result: VisibilityResult) -> str:
    return json.dumps(result.to_json())
