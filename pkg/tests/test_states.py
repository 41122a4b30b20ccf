from itertools import combinations
from math import comb

import numpy as np
import pytest
from numpy.testing import assert_allclose

from lhvcompat import states
from lhvcompat.correlations import tensor_component
from lhvcompat.exceptions import ParameterError

from .conftest import TABLE_SPECS, random_density_matrix


def swap_matrix(n, i, j):
    """Permutation matrix exchanging qubits i and j (0-based) by direct bit manipulation."""
    dim = 2**n
    m = np.zeros((dim, dim))
    for b in range(dim):
        bi, bj = (b >> (n - 1 - i)) & 1, (b >> (n - 1 - j)) & 1
        c = b
        if bi != bj:
            c ^= (1 << (n - 1 - i)) | (1 << (n - 1 - j))
        m[c, b] = 1
    return m


def partial_trace_oracle(rho, qubit, n):
    """Sum_k (<k| x 1) rho (|k> x 1) with the traced qubit moved via explicit Kronecker products."""
    out = 0
    for k in range(2):
        ket = np.zeros((2, 1))
        ket[k] = 1
        left = np.eye(2 ** (qubit - 1))
        right = np.eye(2 ** (n - qubit))
        proj = np.kron(np.kron(left, ket), right)
        out = out + proj.conj().T @ rho @ proj
    return out


class TestDickeState:
    def test_two_qubits(self):
        psi = states.dicke_state(2, 1)
        assert_allclose(psi, [0, 1 / np.sqrt(2), 1 / np.sqrt(2), 0], atol=1e-15)

    def test_five_two(self):
        psi = states.dicke_state(5, 2)
        nz = np.nonzero(np.abs(psi) > 0)[0]
        assert len(nz) == 10
        assert_allclose(psi[nz], 1 / np.sqrt(10))
        assert all(bin(b).count("1") == 2 for b in nz)

    def test_no_excitations(self):
        psi = states.dicke_state(3, 0)
        assert psi[0] == 1 and np.count_nonzero(psi) == 1

    @pytest.mark.parametrize("n", range(1, 9))
    def test_normalized(self, n):
        for e in range(n + 1):
            psi = states.dicke_state(n, e)
            assert abs(np.vdot(psi, psi) - 1) < 1e-12
            assert np.count_nonzero(psi) == comb(n, e)

    @pytest.mark.parametrize("n, e", [(0, 0), (9, 1), (3, 4), (3, -1)])
    def test_out_of_range(self, n, e):
        with pytest.raises(ParameterError):
            states.dicke_state(n, e)


class TestFlipAll:
    def test_dicke(self):
        assert_allclose(states.flip_all(states.dicke_state(3, 1)), states.dicke_state(3, 2))

    def test_basis_state(self):
        zero = np.zeros(8)
        zero[0] = 1
        assert states.flip_all(zero)[7] == 1

    def test_matches_sigma_x_product(self):
        x = states.pauli("X")
        op = np.kron(np.kron(x, x), np.kron(x, x))
        psi = states.dicke_state(4, 1)
        assert_allclose(states.flip_all(psi), op @ psi)

    def test_involution_random(self, rng):
        for _ in range(100):
            n = rng.integers(1, 7)
            psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
            psi /= np.linalg.norm(psi)
            assert_allclose(states.flip_all(states.flip_all(psi)), psi, atol=1e-15)


class TestDickeMixture:
    def test_rank_two(self):
        rho = states.dicke_mixture(states.DickeSpec(5, 2))
        w = np.linalg.eigvalsh(rho)
        assert_allclose(sorted(w)[-2:], [0.5, 0.5], atol=1e-12)
        assert_allclose(sorted(w)[:-2], 0, atol=1e-12)

    @pytest.mark.parametrize("n, e", [(5, 1), (7, 3)])
    def test_components(self, n, e):
        rho = states.dicke_mixture(states.DickeSpec(n, e))
        a, b = states.dicke_state(n, e), states.dicke_state(n, n - e)
        assert_allclose(rho @ a, a / 2, atol=1e-12)
        assert_allclose(rho @ b, b / 2, atol=1e-12)

    @pytest.mark.parametrize("spec", TABLE_SPECS)
    def test_valid_and_symmetric(self, spec):
        n, _ = spec
        rho = states.dicke_mixture(states.DickeSpec(*spec))
        states.validate_density_matrix(rho)
        for i, j in combinations(range(n), 2):
            sw = swap_matrix(n, i, j)
            assert_allclose(sw @ rho @ sw.T, rho, atol=1e-12)

    @pytest.mark.parametrize("n, e", [(4, 1), (5, 0), (5, 3), (7, 4), (-1, 1)])
    def test_invalid_spec(self, n, e):
        with pytest.raises(ParameterError):
            states.DickeSpec(n, e)


class TestWhiteNoise:
    def test_extremes(self, rho52):
        assert_allclose(states.mix_with_white_noise(rho52, 1.0), rho52)
        noise = states.mix_with_white_noise(rho52, 0.0)
        assert_allclose(noise, np.eye(32) / 32)

    def test_half_halves_correlations(self, rho52):
        mixed = states.mix_with_white_noise(rho52, 0.5)
        for idx in [(3, 3, 0, 0, 0), (1, 1, 0, 0, 0), (1, 1, 2, 2, 0), (3, 3, 3, 3, 0), (1, 0, 1, 0, 0)]:
            assert_allclose(tensor_component(mixed, idx), 0.5 * tensor_component(rho52, idx), atol=1e-14)

    def test_affine(self, rho52):
        f = states.mix_with_white_noise
        assert_allclose(f(rho52, 0.3), 0.6 * f(rho52, 0.5) + 0.4 * f(rho52, 0.0), atol=1e-12)

    @pytest.mark.parametrize("p", [-0.1, 1.5])
    def test_bad_p(self, rho52, p):
        with pytest.raises(ParameterError):
            states.mix_with_white_noise(rho52, p)


class TestPartialTrace:
    def test_six_qubit_dicke(self):
        full = states.projector(states.dicke_state(6, 3))
        assert_allclose(states.partial_trace(full, 1), states.dicke_mixture(states.DickeSpec(5, 2)), atol=1e-12)

    def test_product_state(self, rng):
        tau = random_density_matrix(rng, 2)
        zero = np.diag([1.0, 0.0])
        assert_allclose(states.partial_trace(np.kron(zero, tau), 1), tau, atol=1e-15)
        assert_allclose(states.partial_trace(np.kron(tau, zero), 3), tau, atol=1e-15)

    def test_against_oracle(self, rng):
        rho = random_density_matrix(rng, 4)
        for q in range(1, 5):
            out = states.partial_trace(rho, q)
            assert_allclose(out, partial_trace_oracle(rho, q, 4), atol=1e-14)
            assert abs(np.trace(out) - 1) < 1e-12

    @pytest.mark.parametrize("q", [0, 6])
    def test_bad_index(self, q):
        with pytest.raises(ParameterError):
            states.partial_trace(np.eye(32) / 32, q)


class TestHelpers:
    def test_pauli_z_eigenstate(self):
        assert_allclose(states.pauli("Z") @ [1, 0], [1, 0])
        assert_allclose(states.pauli(3), states.pauli("z"))
        with pytest.raises(ParameterError):
            states.pauli("Q")

    def test_permute_qubits_matches_swap(self, rng):
        rho = random_density_matrix(rng, 3)
        sw = swap_matrix(3, 0, 2)
        assert_allclose(states.permute_qubits(rho, [2, 1, 0]), sw @ rho @ sw.T, atol=1e-15)

    def test_validate_rejects(self):
        with pytest.raises(ParameterError):
            states.validate_density_matrix(np.diag([1.0, 1.0]))
        with pytest.raises(ParameterError):
            states.validate_density_matrix(np.diag([1.5, -0.5]))
        with pytest.raises(ParameterError):
            states.validate_density_matrix(np.ones((3, 3)) / 3)
