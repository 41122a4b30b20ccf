"""Correlation Bell expressions with terms of mixed order.

A term is a pattern of length N over {0, 1, ..., S}: 0 means the party is
not measured, ``s >= 1`` selects its ``s``-th setting. Deterministic LHV
strategies are bit masks of length N*S; bit ``N*S - 1 - (n*S + s)`` holds
party ``n``'s outcome for setting ``s`` (both 0-based), 0 for +1 and 1 for -1.
So the most significant bit is party 1, setting 1.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .exceptions import ParameterError, SizeError

ENUMERATION_CAP = 30  # N*S bits
_CHUNK_BITS = 16
FLOAT_DEDUP_TOL = 1e-9


@dataclass(frozen=True)
class CorrelationTerm:
    pattern: tuple[int, ...]
    coefficient: float = 1

    def __post_init__(self):
        object.__setattr__(self, "pattern", tuple(int(p) for p in self.pattern))
        if not any(self.pattern):
            raise ParameterError("a correlation term must measure at least one party")
        if min(self.pattern) < 0:
            raise ParameterError(f"negative setting index in {self.pattern}")

    @property
    def order(self) -> int:
        return sum(1 for p in self.pattern if p)


@dataclass(frozen=True)
class BellExpression:
    num_parties: int
    num_settings: int
    terms: tuple[CorrelationTerm, ...] = field(default_factory=tuple)
    name: str = ""

    def __post_init__(self):
        # validate in input order so error indices point into the caller's list
        seen = set()
        for i, t in enumerate(self.terms):
            if len(t.pattern) != self.num_parties:
                raise ParameterError(
                    f"term {i} pattern {list(t.pattern)} has length {len(t.pattern)}, "
                    f"expected {self.num_parties}"
                )
            if max(t.pattern) > self.num_settings:
                raise ParameterError(
                    f"term {i} pattern {list(t.pattern)} uses a setting above {self.num_settings}"
                )
            if t.pattern in seen:
                raise ParameterError(f"term {i} pattern {list(t.pattern)} repeats an earlier term")
            seen.add(t.pattern)
        object.__setattr__(self, "terms", tuple(sorted(self.terms, key=lambda t: t.pattern)))

    def __len__(self):
        return len(self.terms)

    def __neg__(self):
        return BellExpression(
            self.num_parties,
            self.num_settings,
            tuple(CorrelationTerm(t.pattern, -t.coefficient) for t in self.terms),
        )

    def count_by_order(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for t in self.terms:
            counts[t.order] = counts.get(t.order, 0) + 1
        return dict(sorted(counts.items()))

    @property
    def integer_coefficients(self) -> bool:
        return all(float(t.coefficient).is_integer() for t in self.terms)

    def coefficient_tensor(self) -> np.ndarray:
        """Coefficients as a dense array of shape ``(S + 1,) * N`` indexed by pattern."""
        c = np.zeros((self.num_settings + 1,) * self.num_parties)
        for t in self.terms:
            c[t.pattern] = t.coefficient
        return c

    def to_json(self) -> dict:
        def num(c):
            return int(c) if float(c).is_integer() else float(c)

        return {
            "parties": self.num_parties,
            "settings": self.num_settings,
            "terms": [{"pattern": list(t.pattern), "coeff": num(t.coefficient)} for t in self.terms],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data) -> "BellExpression":
        if isinstance(data, str):
            data = json.loads(data)
        try:
            n, s, raw = int(data["parties"]), int(data["settings"]), data["terms"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ParameterError(f"malformed expression document: {exc!r}") from None
        terms = []
        for i, item in enumerate(raw):
            try:
                terms.append(CorrelationTerm(tuple(item["pattern"]), item["coeff"]))
            except (KeyError, TypeError) as exc:
                raise ParameterError(f"term {i}: malformed entry {item!r} ({exc!r})") from None
            except ParameterError as exc:
                raise ParameterError(f"term {i}: {exc}") from None
        return cls(n, s, tuple(terms))


def permutation_sum(base_pattern, coefficient=1) -> list[CorrelationTerm]:
    """One term per distinct permutation of ``base_pattern``, all with ``coefficient``."""
    distinct = sorted(set(permutations(tuple(base_pattern))))
    return [CorrelationTerm(p, coefficient) for p in distinct]


def build_ineq5() -> BellExpression:
    """Five-party, two-setting hybrid inequality mixing 2- and 4-party correlations.

    E_pi(11110) + E_pi(22220) + E_pi(12220) - E_pi(21110) - E_pi(11000) - E_pi(22000) <= 6
    """
    terms = []
    for base, c in [
        ((1, 1, 1, 1, 0), 1),
        ((2, 2, 2, 2, 0), 1),
        ((1, 2, 2, 2, 0), 1),
        ((2, 1, 1, 1, 0), -1),
        ((1, 1, 0, 0, 0), -1),
        ((2, 2, 0, 0, 0), -1),
    ]:
        terms += permutation_sum(base, c)
    return BellExpression(5, 2, tuple(terms), name="ineq5")


def chsh() -> BellExpression:
    """E11 + E12 + E21 - E22."""
    return BellExpression(
        2,
        2,
        (
            CorrelationTerm((1, 1), 1),
            CorrelationTerm((1, 2), 1),
            CorrelationTerm((2, 1), 1),
            CorrelationTerm((2, 2), -1),
        ),
        name="chsh",
    )


BUILTIN_EXPRESSIONS = {"ineq5": build_ineq5, "chsh": chsh}


@dataclass
class DeterministicStrategy:
    outcomes: np.ndarray  # shape (N, S), entries +-1

    def __post_init__(self):
        self.outcomes = np.asarray(self.outcomes, dtype=np.int64)
        if self.outcomes.ndim != 2 or not np.all(np.abs(self.outcomes) == 1):
            raise ParameterError("outcomes must be an (N, S) array of +-1")

    @classmethod
    def from_mask(cls, mask: int, num_parties: int, num_settings: int) -> "DeterministicStrategy":
        return cls(_mask_outcomes(np.array([mask]), num_parties, num_settings)[0])

    def to_mask(self) -> int:
        bits = (self.outcomes.reshape(-1) < 0).astype(int)
        return int("".join(map(str, bits)), 2)


def _mask_outcomes(masks: np.ndarray, n: int, s: int) -> np.ndarray:
    """Outcome arrays of shape (len(masks), n, s) for strategy bit masks."""
    shifts = np.arange(n * s - 1, -1, -1, dtype=np.int64)
    bits = (masks[:, None] >> shifts) & 1
    return (1 - 2 * bits).reshape(len(masks), n, s)


def evaluate_deterministic(expr: BellExpression, strategy: DeterministicStrategy):
    """Sum of coefficient times the product of predetermined outcomes for each term."""
    out = strategy.outcomes
    if out.shape != (expr.num_parties, expr.num_settings):
        raise ParameterError(
            f"strategy shape {out.shape} does not match ({expr.num_parties}, {expr.num_settings})"
        )
    exact = expr.integer_coefficients
    total = 0 if exact else 0.0
    for t in expr.terms:
        prod = 1
        for party, setting in enumerate(t.pattern):
            if setting:
                prod *= int(out[party, setting - 1])
        total += (int(t.coefficient) if exact else float(t.coefficient)) * prod
    return total


@dataclass
class LhvBoundResult:
    max_value: float
    min_value: float
    value_set: list
    argmax: DeterministicStrategy
    num_strategies: int


def _term_arrays(expr):
    """(coefficients, party index arrays, setting index arrays) padded per term."""
    coeffs = np.array([t.coefficient for t in expr.terms])
    if expr.integer_coefficients:
        coeffs = coeffs.astype(np.int64)
    slots = [[(p, s - 1) for p, s in enumerate(t.pattern) if s] for t in expr.terms]
    return coeffs, slots


def lhv_bound(expr: BellExpression) -> LhvBoundResult:
    """Exact LHV range of ``expr`` by enumerating all 2**(N*S) deterministic strategies."""
    n, s = expr.num_parties, expr.num_settings
    bits = n * s
    if bits > ENUMERATION_CAP:
        raise SizeError(f"N*S = {bits} exceeds enumeration cap {ENUMERATION_CAP}")
    exact = expr.integer_coefficients
    coeffs, slots = _term_arrays(expr)
    total = 1 << bits
    chunk = 1 << min(bits, _CHUNK_BITS)
    best_val, best_mask, worst_val = None, None, None
    values: set = set()
    for start in range(0, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.int64)
        out = _mask_outcomes(masks, n, s).reshape(len(masks), bits)
        acc = np.zeros(len(masks), dtype=np.int64 if exact else float)
        for c, slot in zip(coeffs, slots):
            cols = [p * s + k for p, k in slot]
            acc += c * np.prod(out[:, cols], axis=1)
        i = int(np.argmax(acc))
        if best_val is None or acc[i] > best_val:
            best_val, best_mask = acc[i], int(masks[i])
        lo = acc.min()
        worst_val = lo if worst_val is None else min(worst_val, lo)
        values.update(np.unique(acc).tolist())
    if exact:
        value_set = sorted(int(v) for v in values)
        best_val, worst_val = int(best_val), int(worst_val)
    else:
        value_set = []
        for v in sorted(values):
            if not value_set or v - value_set[-1] > FLOAT_DEDUP_TOL:
                value_set.append(float(v))
        best_val, worst_val = float(best_val), float(worst_val)
    argmax = DeterministicStrategy.from_mask(best_mask, n, s)
    if evaluate_deterministic(expr, argmax) != best_val and exact:
        raise AssertionError("argmax does not reproduce the maximum")
    return LhvBoundResult(best_val, worst_val, value_set, argmax, total)


def _extended_settings(settings: np.ndarray) -> list[np.ndarray]:
    """Per party a (4, S+1) matrix: column 0 selects identity, column s the Bloch vector of setting s."""
    mats = []
    for party in settings:
        m = np.zeros((4, party.shape[0] + 1))
        m[0, 0] = 1.0
        m[1:, 1:] = party.T
        mats.append(m)
    return mats


def check_settings(settings, num_parties: int, num_settings: int) -> np.ndarray:
    """Validate a settings array of shape (N, S, 3) with unit Bloch vectors."""
    settings = np.asarray(settings, dtype=float)
    if settings.ndim != 3 or settings.shape[0] != num_parties or settings.shape[2] != 3:
        raise ParameterError(f"settings must have shape ({num_parties}, S, 3), got {settings.shape}")
    if settings.shape[1] < num_settings:
        raise ParameterError(
            f"settings provide {settings.shape[1]} vectors per party, expression needs {num_settings}"
        )
    norms = np.linalg.norm(settings, axis=2)
    if not np.allclose(norms, 1, atol=1e-12, rtol=0):
        raise ParameterError("every setting must be a unit Bloch vector")
    return settings[:, :num_settings]


def correlation_table(tensor: np.ndarray, settings: np.ndarray) -> np.ndarray:
    """E[j_1..j_N] for every pattern, array of shape ``(S + 1,) * N``."""
    x = tensor
    for m in _extended_settings(settings):
        x = np.tensordot(x, m, axes=([0], [0]))
    return x


def evaluate_quantum(expr: BellExpression, tensor: np.ndarray, settings) -> float:
    """Quantum value of ``expr``: each term's correlation is the tensor contracted with its Bloch vectors."""
    if tensor.ndim != expr.num_parties:
        raise ParameterError("tensor and expression disagree on the number of parties")
    settings = check_settings(settings, expr.num_parties, expr.num_settings)
    return float(np.sum(correlation_table(tensor, settings) * expr.coefficient_tensor()))
