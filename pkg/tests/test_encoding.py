import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qris_vqc.encoding import (HybridEncoder, amplitude_encode_damped, encode_channel_state,
                               hybrid_encode, normalize_image, rate_to_theta)
from qris_vqc.errors import ConstraintViolation, DegenerateInputError

RESIDUAL = np.sqrt(1 - 0.85 ** 2)


class TestNormalize:
    def test_examples(self):
        assert np.allclose(normalize_image([3, 4], 2), [0.6, 0.8])
        assert np.allclose(normalize_image([1, 0, 0, 0], 4), [1, 0, 0, 0])
        assert np.allclose(normalize_image(np.ones(8), 4), np.full(4, 0.5))

    def test_zero_padding(self):
        out = normalize_image([2.0, 0.0], 4)
        assert np.allclose(out, [1, 0, 0, 0])

    def test_subnormal_entries(self):
        assert np.allclose(normalize_image([5e-324] + [0.0] * 15), np.eye(16)[0])

    def test_two_dimensional_input_is_flattened(self):
        img = np.arange(1, 17, dtype=float).reshape(4, 4)
        assert np.allclose(normalize_image(img), img.ravel() / np.linalg.norm(img))

    def test_rejects_degenerate(self):
        with pytest.raises(DegenerateInputError):
            normalize_image(np.zeros(16))
        with pytest.raises(DegenerateInputError):
            normalize_image([])
        with pytest.raises(ValueError):
            normalize_image([1.0, np.nan])
        with pytest.raises(ValueError):
            normalize_image([1.0, 2.0], 3)


class TestDampedEncoding:
    def test_worked_examples(self):
        assert np.allclose(amplitude_encode_damped([1, 0], 0.85), [0.85, 0, RESIDUAL, 0])
        assert RESIDUAL == pytest.approx(0.5268, abs=1e-4)
        out = amplitude_encode_damped([0.6, 0.8], 0.85)
        assert np.allclose(out, [0.51, 0.68, RESIDUAL, 0])
        assert np.linalg.norm(out) == pytest.approx(1.0, abs=1e-12)

    def test_near_one_limit(self):
        out = amplitude_encode_damped([1, 0], 0.999999, gamma_max=0.9999999)
        assert abs(out[0] - 1) < 1e-5 and abs(out[2]) < 2e-3

    @pytest.mark.parametrize("gamma", [0.0, -0.1, 1.0, 0.9])
    def test_gamma_bounds(self, gamma):
        with pytest.raises(ConstraintViolation):
            amplitude_encode_damped([1, 0], gamma, gamma_max=0.85)

    def test_feature_checks(self):
        with pytest.raises(ValueError):
            amplitude_encode_damped([1, 0, 0], 0.5)
        with pytest.raises(ValueError):
            amplitude_encode_damped([1, 1], 0.5)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=16, max_size=16), st.floats(1e-3, 0.85))
    def test_norm_and_block(self, raw, gamma):
        if not np.any(raw):
            raw[0] = 1.0
        x = normalize_image(raw)
        psi = amplitude_encode_damped(x, gamma, gamma_max=0.85)
        assert abs(np.linalg.norm(psi) - 1) <= 1e-10
        assert np.max(np.abs(psi[:16] - gamma * x)) <= 1e-12
        assert np.all(psi[17:] == 0)


class TestRate:
    def test_edges_and_midpoint(self):
        assert rate_to_theta(2.0, 2.0, 6.0) == 0.0
        assert rate_to_theta(6.0, 2.0, 6.0) == pytest.approx(np.pi)
        assert rate_to_theta(4.0, 2.0, 6.0) == pytest.approx(np.pi / 2)

    def test_clamp_and_monotone(self):
        rates = np.linspace(-5, 15, 201)
        th = [rate_to_theta(r, 0.0, 10.0) for r in rates]
        assert np.all(np.diff(th) >= 0)
        assert th[0] == 0.0 and th[-1] == np.pi

    def test_errors(self):
        with pytest.raises(ValueError):
            rate_to_theta(np.inf, 0, 1)
        with pytest.raises(ValueError):
            rate_to_theta(0.5, 1, 1)

    def test_channel_state(self):
        assert np.allclose(encode_channel_state(0), [1, 0])
        assert np.allclose(encode_channel_state(np.pi), [0, 1])
        assert np.allclose(encode_channel_state(np.pi / 2), [2 ** -0.5, 2 ** -0.5])
        with pytest.raises(ValueError):
            encode_channel_state(4.0)


class TestHybrid:
    def test_index_arithmetic(self):
        e0 = np.eye(16)[0]
        inp = hybrid_encode(e0, 10.0, (0.0, 10.0), 0.85)
        amps = np.abs(inp.state)
        assert inp.num_qubits == 6 and inp.theta_used == pytest.approx(np.pi)
        assert amps[1] == pytest.approx(0.85, abs=1e-12)
        assert amps[16 * 2 + 1] == pytest.approx(RESIDUAL, abs=1e-12)
        assert np.count_nonzero(amps > 1e-15) == 2

    def test_basis_state_dominant(self):
        inp = hybrid_encode(np.eye(16)[0], 0.0, (0.0, 1.0), 0.999, gamma_max=0.9999)
        assert np.argmax(np.abs(inp.state)) == 0

    def test_matches_explicit_kron(self, rng):
        for _ in range(20):
            x = normalize_image(rng.uniform(0, 1, 16))
            rate, gamma = rng.uniform(0, 10), rng.uniform(0.1, 0.85)
            inp = hybrid_encode(x, rate, (0, 10), gamma)
            theta = np.pi * rate / 10
            image = np.concatenate([gamma * x, [np.sqrt(1 - gamma ** 2)], np.zeros(15)])
            expect = np.kron(image, [np.cos(theta / 2), np.sin(theta / 2)])
            assert np.allclose(inp.state, expect, atol=1e-12)
            assert abs(np.linalg.norm(inp.state) - 1) <= 1e-10

    def test_ablation_modes(self):
        x = normalize_image(np.arange(1, 17))
        img_only = hybrid_encode(x, 7.0, (0, 10), 0.8, mode="image-only")
        assert img_only.theta_used == 0.0 and np.allclose(img_only.state[1::2], 0)
        ch_only = hybrid_encode(x, 7.0, (0, 10), 0.8, mode="channel-only")
        assert np.allclose(ch_only.state[2:], 0)
        base = hybrid_encode(x, 7.0, (0, 10), 0.8, mode="no-qris-baseline")
        assert np.array_equal(base.state, hybrid_encode(x, 7.0, (0, 10), 0.8).state)
        with pytest.raises(ValueError):
            hybrid_encode(x, 7.0, (0, 10), 0.8, mode="classical")


def test_transformer_learns_bounds(rng):
    X = np.column_stack([rng.uniform(0.1, 1, (5, 16)), [2, 4, 6, 8, 3]])
    enc = HybridEncoder(gamma=0.7).fit(X)
    assert enc.rate_bounds_ == (2.0, 8.0)
    states = enc.transform(X)
    assert states.shape == (5, 64)
    assert np.allclose(np.linalg.norm(states, axis=1), 1)
    assert enc.get_params()["gamma"] == 0.7
