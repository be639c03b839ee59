import numpy as np
import pytest

from oracles import (PAULI_X, brute_local_noise, dephase_closed_form, depolarize_closed_form,
                     pad, random_density)
from qris_vqc.channels import (NoiseModel, QuantumChannel, apply_local, apply_to_all_qubits,
                               compose, dephasing_channel, depolarizing_channel,
                               effective_state, identity_channel, lift_to_register, qris_gate)
from qris_vqc.quantum import Gate, X, density

PLUS = density(np.array([1, 1]) / np.sqrt(2))
ZERO = density([1, 0])


def test_kraus_set_shapes():
    dep = depolarizing_channel(0.05)
    assert len(dep.kraus_ops) == 4 and dep.arity == 1
    assert len(dephasing_channel(0.03).kraus_ops) == 2
    assert len(compose(dephasing_channel(0.03), dep).kraus_ops) == 8


@pytest.mark.parametrize("bad", [-0.1, 1.5, np.nan])
def test_probability_range(bad):
    for make in (depolarizing_channel, dephasing_channel):
        with pytest.raises(ValueError):
            make(bad)


def test_non_trace_preserving_rejected():
    with pytest.raises(ValueError, match="trace preserving"):
        QuantumChannel((0.5 * np.eye(2),))
    with pytest.raises(ValueError):
        QuantumChannel(())


class TestDepolarizing:
    def test_zero_is_identity(self, rng):
        rho = random_density(rng, 2)
        assert np.allclose(depolarizing_channel(0.0)(rho), rho, atol=1e-15)

    def test_maximally_mixed_fixed(self):
        for p in (0.1, 0.5, 1.0):
            assert np.allclose(depolarizing_channel(p)(np.eye(2) / 2), np.eye(2) / 2)

    def test_worked_value(self):
        out = depolarizing_channel(0.05)(ZERO)
        assert np.max(np.abs(out - np.diag([1 - 0.1 / 3, 0.1 / 3]))) <= 1e-12
        assert out[0, 0].real == pytest.approx(0.966667, abs=1e-6)

    def test_matches_closed_form(self, rng):
        for _ in range(200):
            rho, p = random_density(rng, 2), rng.uniform()
            assert np.max(np.abs(depolarizing_channel(p)(rho) - depolarize_closed_form(rho, p))) <= 1e-12


class TestDephasing:
    def test_examples(self):
        assert np.allclose(dephasing_channel(0.4)(ZERO), ZERO)
        assert np.allclose(dephasing_channel(0.5)(PLUS), np.eye(2) / 2, atol=1e-15)
        assert np.allclose(dephasing_channel(0.03)(PLUS), [[0.5, 0.47], [0.47, 0.5]], atol=1e-15)

    def test_matches_closed_form(self, rng):
        for _ in range(200):
            rho, q = random_density(rng, 2), rng.uniform()
            assert np.max(np.abs(dephasing_channel(q)(rho) - dephase_closed_form(rho, q))) <= 1e-12


class TestCompose:
    def test_identity_outer(self, rng):
        rho = random_density(rng, 2)
        dep = depolarizing_channel(0.2)
        assert np.allclose(compose(identity_channel(), dep)(rho), dep(rho), atol=1e-15)

    def test_diagonal_and_coherence_examples(self):
        ch = compose(dephasing_channel(0.03), depolarizing_channel(0.05))
        assert np.allclose(ch(ZERO), np.diag([1 - 0.1 / 3, 0.1 / 3]), atol=1e-15)
        expected = 0.5 * (1 - 4 * 0.05 / 3) * (1 - 2 * 0.03)
        assert abs(ch(PLUS)[0, 1] - expected) <= 1e-15

    def test_equals_sequential(self, rng):
        outer, inner = dephasing_channel(0.13), depolarizing_channel(0.27)
        ch = compose(outer, inner)
        for _ in range(100):
            rho = random_density(rng, 2)
            assert np.max(np.abs(ch(rho) - outer(inner(rho)))) <= 1e-12

    def test_arity_mismatch(self):
        with pytest.raises(ValueError):
            compose(identity_channel(2), identity_channel(1))


class TestLift:
    def test_identity_lifts_to_identity(self):
        lifted = lift_to_register(identity_channel(), 2, 3)
        assert np.allclose(lifted.kraus_ops[0], np.eye(8))

    def test_two_qubit_example(self):
        p = 0.05
        out = lift_to_register(depolarizing_channel(p), 0, 2)(density([1, 0, 0, 0]))
        assert np.allclose(out, np.diag([1 - 2 * p / 3, 0, 2 * p / 3, 0]), atol=1e-15)

    def test_matches_kronecker_padding(self, rng):
        ch = compose(dephasing_channel(0.1), depolarizing_channel(0.2))
        rho = random_density(rng, 8)
        for k in range(3):
            lifted = lift_to_register(ch, k, 3)
            brute = sum(pad(K, k, 3) @ rho @ pad(K, k, 3).conj().T for K in ch.kraus_ops)
            assert np.allclose(lifted(rho), brute, atol=1e-14)
            assert np.allclose(apply_local(rho, ch, k), brute, atol=1e-14)
            assert lifted.completeness_error() <= 1e-10

    def test_mixed_fixed_point(self):
        lifted = lift_to_register(depolarizing_channel(0.7), 1, 4)
        assert np.allclose(lifted(np.eye(16) / 16), np.eye(16) / 16)

    def test_bad_targets(self):
        with pytest.raises(ValueError):
            lift_to_register(depolarizing_channel(0.1), 3, 3)
        with pytest.raises(ValueError):
            lift_to_register(identity_channel(2), 0, 3)


class TestRegisterNoise:
    def test_pauli_weights(self):
        w = compose(dephasing_channel(0.03), depolarizing_channel(0.05)).pauli_weights
        p, q = 0.05, 0.03
        assert np.allclose(w, [(1 - p) * (1 - q) + p / 3 * q, p / 3, p / 3,
                               (1 - p) * q + p / 3 * (1 - q)], atol=1e-15)
        non_pauli = QuantumChannel((np.diag([1, np.sqrt(0.5)]), np.array([[0, np.sqrt(0.5)], [0, 0]])))
        assert non_pauli.pauli_weights is None

    def test_all_qubits_matches_brute_force(self, rng):
        rho = random_density(rng, 16)
        ch = compose(dephasing_channel(0.07), depolarizing_channel(0.11))
        assert np.allclose(apply_to_all_qubits(rho, ch), brute_local_noise(rho, 0.11, 0.07),
                           atol=1e-14)

    def test_non_pauli_channel_path(self, rng):
        # amplitude-damping style Kraus set exercises the generic superoperator route
        g = 0.3
        ch = QuantumChannel((np.diag([1, np.sqrt(1 - g)]), np.array([[0, np.sqrt(g)], [0, 0]])))
        rho = random_density(rng, 4)
        expect = rho
        for k in range(2):
            expect = sum(pad(K, k, 2) @ expect @ pad(K, k, 2).conj().T for K in ch.kraus_ops)
        assert np.allclose(apply_to_all_qubits(rho, ch), expect, atol=1e-14)

    def test_trace_and_hermiticity(self, rng):
        ch = compose(dephasing_channel(0.03), depolarizing_channel(0.05))
        for _ in range(100):
            rho = random_density(rng, 8)
            out = apply_to_all_qubits(rho, ch)
            assert abs(np.trace(out) - 1) <= 1e-12
            assert np.max(np.abs(out - out.conj().T)) <= 1e-10


class TestEffectiveState:
    def test_noiseless_direct_path(self, rng):
        rho = random_density(rng, 8)
        out = effective_state(rho, NoiseModel(p=0, q=0, alpha=1.0))
        assert np.allclose(out, rho, atol=1e-15)

    def test_pure_reflection(self):
        flip = Gate(np.kron(X, np.eye(4)), (0, 1, 2))
        out = effective_state(density([1] + [0] * 7), NoiseModel(p=0, q=0, alpha=0.0, u_qris=flip))
        assert np.allclose(out, density(np.eye(8)[0b100]))

    def test_identical_branches(self):
        p = 0.05
        out = effective_state(ZERO, NoiseModel(p=p, q=0.03, alpha=0.5, u_qris=Gate(np.eye(2), (0,)),
                                               scope="qubit"))
        assert np.allclose(out, np.diag([1 - 2 * p / 3, 2 * p / 3]), atol=1e-15)

    def test_convexity_against_independent_branches(self, rng):
        rho = random_density(rng, 8)
        model = NoiseModel(p=0.09, q=0.04, alpha=0.3, qris_phase=0.7, scope="qubit")
        u = qris_gate(3, 0.7).matrix
        direct = brute_local_noise(rho, 0.09, 0.04)
        turned = brute_local_noise(u @ rho @ u.conj().T, 0.09, 0.04)
        assert np.max(np.abs(effective_state(rho, model) - (0.3 * direct + 0.7 * turned))) <= 1e-12

    def test_distinct_link_rates(self, rng):
        rho = random_density(rng, 4)
        model = NoiseModel(p=0.1, q=0.02, alpha=0.6, p_rq=0.3, q_rq=0.0, scope="qubit")
        u = qris_gate(2).matrix
        expect = 0.6 * brute_local_noise(rho, 0.1, 0.02) + 0.4 * brute_local_noise(
            u @ rho @ u.conj().T, 0.3, 0.0)
        assert np.allclose(effective_state(rho, model), expect, atol=1e-14)

    def test_register_scope_splits_budget(self, rng):
        rho = random_density(rng, 8)
        model = NoiseModel(p=0.09, q=0.06, alpha=1.0)
        assert np.allclose(effective_state(rho, model), brute_local_noise(rho, 0.03, 0.02),
                           atol=1e-14)

    def test_per_sample_alpha_and_validity(self, rng):
        model = NoiseModel()
        for _ in range(20):
            rho = random_density(rng, 8, rank=1)
            out = effective_state(rho, model, alpha=rng.uniform())
            assert np.linalg.eigvalsh(out).min() >= -1e-9
            assert abs(np.trace(out) - 1) <= 1e-12
        with pytest.raises(ValueError):
            effective_state(rho, model, alpha=1.2)

    def test_model_validation(self):
        with pytest.raises(ValueError):
            NoiseModel(p=1.2)
        with pytest.raises(ValueError):
            NoiseModel(scope="global")
        with pytest.raises(ValueError):
            NoiseModel(u_qris=Gate(PAULI_X, (0,))).surface_gate(3)
