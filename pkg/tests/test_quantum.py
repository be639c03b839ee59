import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import random_density, random_state, uhlmann_via_svd
from qris_vqc.quantum import (Gate, X, Z, apply_gate, basis_state, check_density_matrix,
                              check_state_vector, cnot_gate, density, factor_fidelity,
                              fidelity, lift_operator, measure_probabilities, ry_gate,
                              rz_gate, tensor_product, uhlmann_fidelity)

S2 = 1 / np.sqrt(2)


class TestTensorProduct:
    def test_basis_compositions(self):
        zero, one = np.array([1, 0]), np.array([0, 1])
        assert np.array_equal(tensor_product(zero, zero), [1, 0, 0, 0])
        assert np.array_equal(tensor_product(one, zero), [0, 0, 1, 0])

    def test_plus_with_one(self):
        out = tensor_product([S2, S2], [0, 1])
        assert np.allclose(out, [0, S2, 0, S2], atol=1e-15)

    def test_index_rule_and_norm(self, rng):
        a, b = random_state(rng, 4), random_state(rng, 8)
        out = tensor_product(a, b)
        for i in range(4):
            for j in range(8):
                assert abs(out[i * 8 + j] - a[i] * b[j]) <= 1e-15
        check_state_vector(out)

    def test_associative(self, rng):
        a, b, c = (random_state(rng, 2) for _ in range(3))
        left = tensor_product(tensor_product(a, b), c)
        right = tensor_product(a, tensor_product(b, c))
        assert np.max(np.abs(left - right)) <= 1e-12


class TestGates:
    def test_ry_values(self):
        assert np.allclose(ry_gate(0.0).matrix, np.eye(2))
        assert np.allclose(ry_gate(np.pi).matrix @ [1, 0], [0, 1])
        assert np.allclose(ry_gate(np.pi / 2).matrix @ [1, 0], [S2, S2], atol=1e-15)

    @pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
    def test_non_finite_angle_rejected(self, bad):
        with pytest.raises(ValueError):
            ry_gate(bad)
        with pytest.raises(ValueError):
            rz_gate(bad)

    def test_gate_validation(self):
        with pytest.raises(ValueError, match="unitary"):
            Gate(np.array([[1, 1], [0, 1]]), (0,))
        with pytest.raises(ValueError, match="distinct"):
            Gate(np.eye(4), (1, 1))
        with pytest.raises(ValueError):
            Gate(np.eye(2), (0, 1))

    def test_apply_pauli_examples(self):
        rho0 = density([1, 0])
        assert np.allclose(apply_gate(rho0, Gate(X, (0,))), density([0, 1]))
        assert np.allclose(apply_gate(rho0, Gate(Z, (0,))), rho0)

    def test_ry_half_turn_gives_uniform_matrix(self):
        out = apply_gate(density([1, 0]), ry_gate(np.pi / 2))
        assert np.allclose(out, np.full((2, 2), 0.5), atol=1e-15)

    def test_apply_matches_padded_matrix(self, rng):
        rho = random_density(rng, 8)
        u = cnot_gate(2, 0)
        full = lift_operator(u.matrix, u.targets, 3)
        # control 2 (LSB) flips target 0 (MSB): |001> <-> |101>
        assert full[0b101, 0b001] == 1 and full[0b001, 0b001] == 0
        assert np.allclose(apply_gate(rho, u), full @ rho @ full.conj().T, atol=1e-14)

    def test_apply_preserves_trace(self, rng):
        for _ in range(50):
            rho = random_density(rng, 8)
            out = apply_gate(rho, ry_gate(rng.uniform(-4, 4), int(rng.integers(3))))
            assert abs(np.trace(out) - np.trace(rho)) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            apply_gate(np.eye(2) / 2, cnot_gate(0, 1))
        with pytest.raises(ValueError):
            apply_gate(np.eye(3) / 3, ry_gate(0.1))


class TestFidelity:
    def test_examples(self, rng):
        rho = random_density(rng, 4)
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)
        assert fidelity(density([1, 0]), density([0, 1])) == pytest.approx(0.0, abs=1e-12)
        assert fidelity(density([1, 0]), np.eye(2) / 2) == pytest.approx(0.5, abs=1e-12)

    def test_pure_fast_path_agrees_with_general(self, rng):
        for _ in range(30):
            psi = random_state(rng, 16)
            b = random_density(rng, 16)
            fast = fidelity(density(psi), b)
            assert abs(fast - uhlmann_fidelity(density(psi), b)) <= 1e-9
            assert abs(fast - uhlmann_via_svd(density(psi), b)) <= 1e-9

    def test_mixed_matches_svd_oracle_and_is_symmetric(self, rng):
        for _ in range(30):
            a, b = random_density(rng, 8), random_density(rng, 8, rank=3)
            assert abs(fidelity(a, b) - uhlmann_via_svd(a, b)) <= 1e-9
            assert abs(fidelity(a, b) - fidelity(b, a)) <= 1e-9

    def test_factor_form(self, rng):
        f = (rng.normal(size=(16, 2)) + 1j * rng.normal(size=(16, 2)))
        f /= np.linalg.norm(f)
        rho = random_density(rng, 16)
        assert abs(factor_fidelity(f, rho) - uhlmann_via_svd(f @ f.conj().T, rho)) <= 1e-9

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            fidelity(np.eye(2) / 2, np.eye(4) / 4)


class TestMeasure:
    def test_examples(self):
        assert np.allclose(measure_probabilities(density([1, 0]), [0]), [1, 0])
        assert np.allclose(measure_probabilities(np.eye(2) / 2, [0]), [0.5, 0.5])
        bell = density([S2, 0, 0, S2])
        assert np.allclose(measure_probabilities(bell, [0]), [0.5, 0.5])

    def test_order_and_marginal_consistency(self, rng):
        rho = random_density(rng, 16)
        joint = measure_probabilities(rho, [1, 3]).reshape(2, 2)
        swapped = measure_probabilities(rho, [3, 1]).reshape(2, 2)
        assert np.allclose(joint, swapped.T, atol=1e-15)
        assert np.allclose(joint.sum(axis=1), measure_probabilities(rho, [1]), atol=1e-10)
        assert abs(joint.sum() - 1) <= 1e-10

    def test_basis_state(self):
        rho = density(basis_state(0b1011, 4))
        assert np.allclose(measure_probabilities(rho, [0, 2]), [0, 0, 0, 1])

    @pytest.mark.parametrize("qubits", [[], [0, 0], [5]])
    def test_bad_qubits(self, qubits):
        with pytest.raises(ValueError):
            measure_probabilities(np.eye(4) / 4, qubits)


class TestValidation:
    def test_state_vector(self):
        with pytest.raises(ValueError):
            check_state_vector([1, 1])
        with pytest.raises(ValueError):
            check_state_vector([1, 0, 0])

    def test_density_matrix(self):
        check_density_matrix(np.eye(4) / 4)
        with pytest.raises(ValueError, match="Hermitian"):
            check_density_matrix(np.array([[0.5, 1], [0, 0.5]]))
        with pytest.raises(ValueError, match="trace"):
            check_density_matrix(np.eye(2))
        with pytest.raises(ValueError, match="negative"):
            check_density_matrix(np.diag([1.5, -0.5]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_purity_bounds_after_gates(n, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(rng, 1 << n)
    for k in range(n):
        rho = apply_gate(rho, ry_gate(rng.uniform(-np.pi, np.pi), k))
    purity = np.trace(rho @ rho).real
    assert 1 / (1 << n) - 1e-9 <= purity <= 1 + 1e-9
