import json

import numpy as np
import pytest

from lhvcompat import states
from lhvcompat.bell import BellExpression, CorrelationTerm, chsh, evaluate_quantum
from lhvcompat.correlations import full_tensor
from lhvcompat.exceptions import ParameterError
from lhvcompat.seesaw import (
    PRINTED_SETTINGS,
    effective_vector,
    effective_vectors,
    paper_settings,
    printed_to_bloch,
    seesaw_maximize,
    seesaw_run,
    settings_from_json,
    settings_to_json,
    symmetric_start,
)

from .conftest import random_density_matrix, random_unit_vectors

SINGLET = np.array([0, 1, -1, 0]) / np.sqrt(2)


@pytest.fixture(scope="module")
def best52(ineq5, tensor52):
    return seesaw_maximize(ineq5, tensor52, restarts=100, seed=0, record=True)


def finite_difference(expr, tensor, settings, party, setting, h=1e-6):
    """Gradient of evaluate_quantum in the raw (unnormalized) vector, by central differences."""
    grad = np.zeros(3)
    for axis in range(3):
        plus, minus = settings.copy(), settings.copy()
        plus[party, setting, axis] += h
        minus[party, setting, axis] -= h
        # evaluate_quantum requires unit vectors, so evaluate the multilinear form directly
        grad[axis] = (_raw_value(expr, tensor, plus) - _raw_value(expr, tensor, minus)) / (2 * h)
    return grad


def _raw_value(expr, tensor, settings):
    total = 0.0
    n = expr.num_parties
    for term in expr.terms:
        x = tensor
        for party in reversed(range(n)):
            s = term.pattern[party]
            vec = np.array([1.0, 0, 0, 0]) if s == 0 else np.concatenate([[0.0], settings[party, s - 1]])
            x = x @ vec
        total += term.coefficient * x
    return total


class TestReferenceSettings:
    def test_printed_components(self):
        assert PRINTED_SETTINGS[0] == pytest.approx([0.80902, -0.58779, 0], abs=1e-5)
        assert PRINTED_SETTINGS[1] == pytest.approx([np.cos(np.pi / 20), np.sin(np.pi / 20), 0])

    def test_unit_and_shared(self):
        s = paper_settings()
        assert s.shape == (5, 2, 3)
        assert np.allclose(np.linalg.norm(s, axis=2), 1, atol=1e-12)
        assert np.all(s == s[0])

    def test_half_angle_mapping(self):
        a = -np.pi / 5
        assert printed_to_bloch(PRINTED_SETTINGS[0]) == pytest.approx([np.cos(2 * a), 0, np.sin(2 * a)])

    def test_value(self, ineq5, tensor52):
        assert evaluate_quantum(ineq5, tensor52, paper_settings()) == pytest.approx(7.7831, abs=1e-4)

    def test_literal_reading_does_not_violate(self, ineq5, tensor52):
        literal = np.tile(PRINTED_SETTINGS, (5, 1, 1))
        assert evaluate_quantum(ineq5, tensor52, literal) == pytest.approx(-6, abs=1e-9)


class TestEffectiveVector:
    def test_untouched_slot_is_zero(self, rng):
        expr = BellExpression(3, 2, (CorrelationTerm((1, 1, 0)),))
        t = full_tensor(random_density_matrix(rng, 3))
        assert np.all(effective_vector(expr, t, random_unit_vectors(rng, (3, 2)), 2, 1) == 0)

    def test_single_term(self, rng):
        expr = BellExpression(2, 1, (CorrelationTerm((1, 1)),))
        t = full_tensor(random_density_matrix(rng, 2))
        s = random_unit_vectors(rng, (2, 1))
        assert effective_vector(expr, t, s, 0, 0) == pytest.approx(t[1:, 1:] @ s[1, 0], abs=1e-12)

    def test_finite_difference(self, ineq5, tensor52, rng):
        for _ in range(5):
            s = random_unit_vectors(rng, (5, 2))
            party, setting = rng.integers(0, 5), rng.integers(0, 2)
            fd = finite_difference(ineq5, tensor52, s, party, setting)
            assert effective_vector(ineq5, tensor52, s, party, setting) == pytest.approx(fd, abs=1e-6)

    def test_linearity_identity(self, ineq5, tensor52, rng):
        s = random_unit_vectors(rng, (5, 2))
        v = effective_vector(ineq5, tensor52, s, 2, 1)
        flipped = s.copy()
        flipped[2, 1] *= -1
        plus, minus = evaluate_quantum(ineq5, tensor52, s), evaluate_quantum(ineq5, tensor52, flipped)
        assert plus - minus == pytest.approx(2 * v @ s[2, 1], abs=1e-12)

    def test_all_slots(self, ineq5, tensor52, rng):
        s = random_unit_vectors(rng, (5, 2))
        vs = effective_vectors(ineq5, tensor52, s, 4)
        assert vs.shape == (2, 3)
        assert vs[1] == pytest.approx(effective_vector(ineq5, tensor52, s, 4, 1))

    def test_bad_indices(self, ineq5, tensor52):
        with pytest.raises(ParameterError):
            effective_vector(ineq5, tensor52, paper_settings(), 5, 0)
        with pytest.raises(ParameterError):
            effective_vector(ineq5, tensor52, paper_settings(), 0, 2)


class TestSeesaw:
    def test_ineq5_maximum(self, best52):
        assert best52.value == pytest.approx(7.8217, abs=1e-3)

    def test_value_reproduced(self, best52, ineq5, tensor52):
        assert evaluate_quantum(ineq5, tensor52, best52.settings) == pytest.approx(best52.value, abs=1e-10)
        assert best52.restarts_used == 101 and best52.converged

    def test_dominates_reference_settings(self, best52, ineq5, tensor52):
        assert best52.value >= evaluate_quantum(ineq5, tensor52, paper_settings()) - 1e-9

    def test_fixed_point(self, best52, ineq5, tensor52):
        for party in range(5):
            vs = effective_vectors(ineq5, tensor52, best52.settings, party)
            for k in range(2):
                norm = np.linalg.norm(vs[k])
                if norm < 1e-12:
                    continue
                cos = np.clip(vs[k] @ best52.settings[party, k] / norm, -1, 1)
                assert np.arccos(cos) < 1e-6

    def test_trace_monotone(self, best52):
        trace = np.array(best52.trace)
        assert len(trace) > 1
        assert np.all(np.diff(trace) >= -1e-12)

    def test_chsh_singlet(self):
        t = full_tensor(states.projector(SINGLET))
        res = seesaw_maximize(chsh(), t, restarts=10, seed=1)
        assert res.value == pytest.approx(2 * np.sqrt(2), abs=1e-6)

    def test_white_noise(self, ineq5):
        t = full_tensor(states.white_noise(5))
        assert seesaw_maximize(ineq5, t, restarts=3).value == 0

    def test_seed_determinism(self, ineq5, tensor52):
        a = seesaw_maximize(ineq5, tensor52, restarts=5, seed=9)
        b = seesaw_maximize(ineq5, tensor52, restarts=5, seed=9)
        assert a.value == b.value
        np.testing.assert_array_equal(a.settings, b.settings)

    def test_warm_start(self, ineq5, tensor52):
        res = seesaw_maximize(ineq5, tensor52, restarts=1, initial=paper_settings(), include_symmetric_start=False)
        assert res.value >= 7.7831

    def test_symmetric_start_shape(self):
        s = symmetric_start(5, 2)
        assert s.shape == (5, 2, 3)
        assert np.allclose(np.linalg.norm(s, axis=2), 1)

    def test_run_reports_sweeps(self, ineq5, tensor52):
        value, settings, sweeps, converged, trace = seesaw_run(ineq5, tensor52, paper_settings(), record=True)
        assert converged and sweeps >= 1
        assert trace[0] == pytest.approx(7.7831, abs=1e-4)
        assert value >= trace[0]

    def test_bad_restarts(self, ineq5, tensor52):
        with pytest.raises(ParameterError):
            seesaw_maximize(ineq5, tensor52, restarts=0)

    def test_json(self, best52):
        doc = json.loads(json.dumps(best52.to_json()))
        assert doc["value"] == best52.value
        np.testing.assert_allclose(settings_from_json(doc), best52.settings, atol=1e-15)
        assert settings_to_json(best52.settings) == doc["settings"]
