"""Seesaw maximization of a correlation Bell expression over local Bloch vectors.

The quantum value is multilinear in the settings: fixing everything except
the vector of one (party, setting) slot leaves ``v . s + rest``. Replacing
``s`` by ``v / |v|`` therefore never decreases the value, and cycling
through all slots converges to a point where every vector is parallel to
its effective vector.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .bell import BellExpression, _extended_settings, check_settings, evaluate_quantum
from .exceptions import ParameterError

SWEEP_TOL = 1e-12
MAX_SWEEPS = 10_000
MONOTONE_TOL = 1e-12

#: Setting vectors as printed alongside the hybrid inequality: (cos a, sin a, 0), a = -pi/5 and pi/20.
PRINTED_SETTINGS = np.array(
    [
        [np.cos(np.pi / 5), -np.sin(np.pi / 5), 0.0],
        [np.cos(np.pi / 20), np.sin(np.pi / 20), 0.0],
    ]
)


def printed_to_bloch(vec) -> np.ndarray:
    """Map a printed setting (cos a, sin a, 0) to the Bloch vector (cos 2a, 0, sin 2a).

    The printed pairs are qubit-space angles; the measured observable has its
    Bloch vector at twice the angle, in a plane containing the z axis. Read
    literally as xy-plane Bloch vectors, every symmetric setting gives -6 on
    rho_5^2, which cannot be the reported violation.
    """
    a = np.arctan2(vec[1], vec[0])
    return np.array([np.cos(2 * a), 0.0, np.sin(2 * a)])


def paper_settings(num_parties: int = 5) -> np.ndarray:
    """Shared near-optimal two-setting Bloch vectors for every party, shape (N, 2, 3)."""
    pair = np.array([printed_to_bloch(v) for v in PRINTED_SETTINGS])
    return np.tile(pair, (num_parties, 1, 1))


def settings_to_json(settings) -> list:
    return np.asarray(settings).tolist()


def settings_from_json(data) -> np.ndarray:
    if isinstance(data, str):
        data = json.loads(data)
    if isinstance(data, dict):
        data = data["settings"]
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ParameterError(f"settings JSON must be an N x S x 3 nested list, got shape {arr.shape}")
    return arr / np.linalg.norm(arr, axis=2, keepdims=True)


def effective_vectors(expr: BellExpression, tensor: np.ndarray, settings, party: int) -> np.ndarray:
    """Effective vectors of every setting of ``party`` (0-based), shape (S, 3).

    The value of ``expr`` equals ``sum_s v_s . settings[party, s]`` plus terms
    that do not measure ``party``.
    """
    settings = check_settings(settings, expr.num_parties, expr.num_settings)
    if not 0 <= party < expr.num_parties:
        raise ParameterError(f"party must be in 0..{expr.num_parties - 1}, got {party}")
    g = _gradient(tensor, expr.coefficient_tensor(), _extended_settings(settings), party)
    return g[1:, 1:].T.copy()


def effective_vector(expr, tensor, settings, party: int, setting: int) -> np.ndarray:
    """Effective vector of one (party, setting) slot, both 0-based."""
    if not 0 <= setting < expr.num_settings:
        raise ParameterError(f"setting must be in 0..{expr.num_settings - 1}, got {setting}")
    return effective_vectors(expr, tensor, settings, party)[setting]


def _gradient(tensor, coeffs, mats, party):
    n = tensor.ndim
    letters = "abcdefghijklmnop"
    tidx, cidx = letters[:n], letters[n : 2 * n].upper()
    ops, subs = [tensor, coeffs], [tidx, cidx]
    for m, mat in enumerate(mats):
        if m != party:
            ops.append(mat)
            subs.append(tidx[m] + cidx[m])
    spec = ",".join(subs) + "->" + tidx[party] + cidx[party]
    key = (spec, coeffs.shape)
    path = _PATHS.get(key)
    if path is None:
        path = _PATHS[key] = np.einsum_path(spec, *ops, optimize="greedy")[0]
    return np.einsum(spec, *ops, optimize=path)


_PATHS: dict = {}


@dataclass
class SeesawResult:
    value: float
    settings: np.ndarray
    sweeps: int
    restarts_used: int
    converged: bool = True
    symmetric: bool = False
    restart_index: int = 0
    trace: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "settings": settings_to_json(self.settings),
            "sweeps": self.sweeps,
            "restarts_used": self.restarts_used,
            "converged": self.converged,
            "symmetric": self.symmetric,
        }


def _random_settings(rng, n, s):
    v = rng.normal(size=(n, s, 3))
    return v / np.linalg.norm(v, axis=2, keepdims=True)


def symmetric_start(num_parties: int, num_settings: int) -> np.ndarray:
    """All parties share settings spread evenly over half of the xz great circle."""
    angles = np.pi * np.arange(num_settings) / num_settings
    pair = np.stack([np.cos(angles), np.zeros_like(angles), np.sin(angles)], axis=1)
    return np.tile(pair, (num_parties, 1, 1))


def seesaw_run(expr, tensor, start, record: bool = False):
    """One seesaw run from ``start``; returns (value, settings, sweeps, converged, trace).

    Raises AssertionError if any single-vector update lowers the objective.
    """
    n, s = expr.num_parties, expr.num_settings
    coeffs = expr.coefficient_tensor()
    settings = np.array(start, dtype=float)
    mats = _extended_settings(settings)
    value = float(np.sum(_gradient(tensor, coeffs, mats, 0) * mats[0]))
    trace = [value] if record else []
    prev = value
    converged = False
    for sweep in range(1, MAX_SWEEPS + 1):
        for party in range(n):
            g = _gradient(tensor, coeffs, mats, party)
            # slots of one party never share a term, so they decouple
            for k in range(s):
                v = g[1:, k + 1]
                norm = np.linalg.norm(v)
                if norm < 1e-12:
                    continue
                old = mats[party][1:, k + 1].copy()
                new = v / norm
                delta = float(v @ (new - old))
                if delta < -MONOTONE_TOL:
                    raise AssertionError(f"seesaw update decreased the value by {-delta:.3g}")
                mats[party][1:, k + 1] = new
                settings[party, k] = new
                value += delta
                if record:
                    trace.append(value)
        # re-evaluate from scratch to stop drift from accumulated deltas
        value = float(np.sum(_gradient(tensor, coeffs, mats, 0) * mats[0]))
        if value - prev < SWEEP_TOL:
            converged = True
            break
        prev = value
    return value, settings, sweep, converged, trace


def _is_symmetric(settings, tol=1e-6):
    return bool(np.all(np.abs(settings - settings[0]) < tol))


def seesaw_maximize(
    expr: BellExpression,
    tensor: np.ndarray,
    restarts: int = 100,
    seed: int = 0,
    initial=None,
    include_symmetric_start: bool = True,
    record: bool = False,
) -> SeesawResult:
    """Best seesaw optimum over random starts (plus a symmetric start and an optional warm start)."""
    if restarts < 1:
        raise ParameterError("restarts must be >= 1")
    if tensor.ndim != expr.num_parties:
        raise ParameterError("tensor and expression disagree on the number of parties")
    n, s = expr.num_parties, expr.num_settings
    rng = np.random.default_rng(seed)
    starts = []
    if initial is not None:
        starts.append(check_settings(initial, n, s))
    if include_symmetric_start:
        starts.append(symmetric_start(n, s))
    starts += [_random_settings(rng, n, s) for _ in range(restarts)]
    best = None
    for index, start in enumerate(starts):
        value, settings, sweeps, converged, trace = seesaw_run(expr, tensor, start, record)
        if best is None or value > best.value:
            best = SeesawResult(value, settings, sweeps, len(starts), converged, _is_symmetric(settings), index, trace)
    best.value = evaluate_quantum(expr, tensor, best.settings)
    return best
