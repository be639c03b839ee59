"""Six-qubit layered ansatz, noisy forward pass and three-class readout."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Optional

import numpy as np

from .channels import NoiseModel, effective_state
from .encoding import HybridInput
from .quantum import (Y, Z, cnot_gate, density, factor_fidelity, fidelity, lift_operator,
                      measure_probabilities)

N_QUBITS = 6
READOUT_QUBITS = (4, 5)
LABELS = (-1, 0, 1)
SHIFT = np.pi / 2


@dataclass(frozen=True)
class Ansatz:
    """``num_layers`` x (R_y then R_z on every qubit, then a CNOT ring k -> k+1 mod n).

    Parameters are indexed ``(layer * n_qubits + qubit) * 2 + axis`` with
    axis 0 for R_y and 1 for R_z.
    """

    num_layers: int = 2
    n_qubits: int = N_QUBITS
    rotation_axes: tuple = ("y", "z")

    @property
    def num_params(self) -> int:
        return self.num_layers * self.n_qubits * len(self.rotation_axes)

    @property
    def entangler(self) -> tuple:
        return tuple((k, (k + 1) % self.n_qubits) for k in range(self.n_qubits))


def build_ansatz(num_layers: int = 2, n_qubits: int = N_QUBITS) -> Ansatz:
    if int(num_layers) != num_layers or num_layers < 1:
        raise ValueError(f"num_layers must be a positive integer, got {num_layers!r}")
    return Ansatz(int(num_layers), n_qubits)


@dataclass
class VqcParams:
    gamma: float
    thetas: np.ndarray

    def __post_init__(self):
        self.thetas = np.array(self.thetas, dtype=float)
        if not np.all(np.isfinite(self.thetas)):
            raise ValueError("rotation angles must be finite")

    def copy(self) -> "VqcParams":
        return VqcParams(self.gamma, self.thetas.copy())


@dataclass(frozen=True)
class ForwardResult:
    probs: np.ndarray
    rho_ideal: np.ndarray
    rho_noisy: np.ndarray
    fidelity: float


@lru_cache(maxsize=8)
def ring_unitary(ansatz: Ansatz) -> np.ndarray:
    n = ansatz.n_qubits
    mats = [lift_operator(cnot_gate(c, t).matrix, [c, t], n) for c, t in ansatz.entangler]
    # first CNOT acts first, so it sits rightmost in the product
    return reduce(lambda acc, m: m @ acc, mats, np.eye(1 << n, dtype=complex))


def qubit_rotations(thetas: np.ndarray, ansatz: Ansatz) -> np.ndarray:
    """Per-(layer, qubit) 2x2 gates R_z(theta_z) @ R_y(theta_y), shape (L, n, 2, 2)."""
    t = np.asarray(thetas, dtype=float)
    if t.shape != (ansatz.num_params,):
        raise ValueError(f"expected {ansatz.num_params} angles, got shape {t.shape}")
    t = t.reshape(ansatz.num_layers, ansatz.n_qubits, 2)
    return _rz_batch(t[..., 1]) @ _ry_batch(t[..., 0])


def _ry_batch(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2).astype(complex)


def _rz_batch(theta: np.ndarray) -> np.ndarray:
    out = np.zeros(np.shape(theta) + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def _kron2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # np.kron without its generic-shape bookkeeping
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(a.shape[0] * b.shape[0], -1)


def _kron_all(mats) -> np.ndarray:
    return reduce(_kron2, mats)


def ansatz_unitary(thetas, ansatz: Ansatz) -> np.ndarray:
    """Full ``2**n x 2**n`` circuit unitary."""
    ring = ring_unitary(ansatz)
    u = np.eye(1 << ansatz.n_qubits, dtype=complex)
    for layer in qubit_rotations(thetas, ansatz):
        u = ring @ _kron_all(layer) @ u
    return u


def readout_marginal(rho) -> np.ndarray:
    """Distribution of (q4, q5) outcomes 00, 01, 10, 11."""
    return measure_probabilities(rho, READOUT_QUBITS)


def probs_from_marginal(marginal) -> np.ndarray:
    """Renormalize outcomes 00/01/10 into class probabilities for labels (-1, 0, 1)."""
    m = np.clip(np.asarray(marginal, dtype=float)[:3], 0.0, None)
    mass = m.sum()
    if mass < 1e-9:
        return np.full(3, 1.0 / 3.0)
    return m / mass


def class_readout(rho) -> np.ndarray:
    """Class probabilities (b_1, b_2, b_3) for labels (-1, 0, 1)."""
    return probs_from_marginal(readout_marginal(rho))


def ideal_factor(state: np.ndarray, alpha: float, model: NoiseModel) -> np.ndarray:
    """Factor ``A`` with ``A A^dagger`` the noiseless received mixture.

    The noiseless mixture of the direct and surface-reflected paths has rank
    at most two: alpha |psi><psi| + (1 - alpha) U|psi><psi|U^dagger.
    """
    n = int(state.shape[0]).bit_length() - 1
    cols = []
    if alpha > 0.0:
        cols.append(np.sqrt(alpha) * state)
    if alpha < 1.0:
        cols.append(np.sqrt(1.0 - alpha) * (model.surface_gate(n).matrix @ state))
    return np.stack(cols, axis=1)


def received_states(state: np.ndarray, model: NoiseModel, alpha: Optional[float] = None):
    """(ideal factor, noisy density matrix) of the state reaching the classifier."""
    a = model.alpha if alpha is None else float(alpha)
    return ideal_factor(state, a, model), effective_state(density(state), model, alpha=a)


def forward(inp: HybridInput, params: VqcParams, noise: NoiseModel, ansatz: Ansatz,
            alpha: Optional[float] = None) -> ForwardResult:
    """Run the circuit on the ideal and the noisy received state.

    ``rho_ideal`` is the circuit output for the noiseless path mixture (pure
    when alpha is 0 or 1); ``rho_noisy`` is the output for the noisy mixture.
    Probabilities are read from ``rho_noisy``.
    """
    if inp.num_qubits != ansatz.n_qubits:
        raise ValueError(f"input has {inp.num_qubits} qubits, ansatz expects {ansatz.n_qubits}")
    u = ansatz_unitary(params.thetas, ansatz)
    factor, rho_in = received_states(inp.state, noise, alpha)
    out_factor = u @ factor
    rho_ideal = out_factor @ out_factor.conj().T
    rho_noisy = u @ rho_in @ u.conj().T
    rho_noisy = 0.5 * (rho_noisy + rho_noisy.conj().T)
    f = fidelity(rho_ideal, rho_noisy)
    return ForwardResult(class_readout(rho_noisy), rho_ideal, rho_noisy, f)


class PreparedCircuit:
    """Ansatz with cached Heisenberg-picture readout observables.

    For a fixed angle vector this evaluates readout marginals of many input
    states and their exact angle derivatives without re-multiplying full
    circuit unitaries per shifted angle. For a rotation ``exp(-i t P / 2)``
    the two-term shift difference ``0.5 [m(t + pi/2) - m(t - pi/2)]``
    collapses to ``Im Tr(O_c P' sigma)``, where ``sigma`` is the state right
    after the rotation layer, ``O_c`` the readout projector pulled back to
    that point and ``P'`` the rotation generator moved past any later gate
    on the same qubit.
    """

    def __init__(self, thetas, ansatz: Ansatz):
        self.ansatz = ansatz
        self.thetas = np.array(thetas, dtype=float)
        n, dim = ansatz.n_qubits, 1 << ansatz.n_qubits
        gates = qubit_rotations(self.thetas, ansatz)
        ring = ring_unitary(ansatz)
        # through[l] maps the input to the state right after layer l's rotations
        self.through = []
        acc = np.eye(dim, dtype=complex)
        for g in gates:
            rot = _kron_all(g)
            self.through.append(rot @ acc)
            acc = ring @ self.through[-1]
        self.unitary = acc
        idx = np.arange(dim)
        outcome = ((idx >> (n - 1 - READOUT_QUBITS[0])) & 1) * 2 + ((idx >> (n - 1 - READOUT_QUBITS[1])) & 1)
        rows = [outcome == c for c in range(4)]
        # Tr(O rho) = sum(O^T * rho), so observables are stored transposed and flat
        full = np.stack([acc[r].conj().T @ acc[r] for r in rows])
        self.readout = full.transpose(0, 2, 1).reshape(4, -1)
        self.observables = []
        for l in range(ansatz.num_layers):
            after = acc @ self.through[l].conj().T
            # outcome 11 carries no class mass, so derivatives skip it
            obs = np.stack([after[r].conj().T @ after[r] for r in rows[:3]])
            self.observables.append(obs.transpose(0, 2, 1).reshape(3, -1))
        # G = R_z(tz) R_y(ty): d/dty has generator R_z Y R_z^dagger, d/dtz has Z
        tz = self.thetas.reshape(ansatz.num_layers, n, 2)[..., 1]
        rz = _rz_batch(tz)
        self.generators = np.empty((ansatz.num_layers, n, 2, 2, 2), dtype=complex)
        self.generators[:, :, 0] = rz @ Y @ rz.conj().swapaxes(-1, -2)
        self.generators[:, :, 1] = Z

    def marginal(self, rho: np.ndarray) -> np.ndarray:
        """Readout distribution of outcomes 00, 01, 10, 11 for input ``rho``."""
        return (self.readout @ rho.reshape(-1)).real

    def shift_gradients(self, rho: np.ndarray) -> np.ndarray:
        """d(marginal)/d(theta_i) for outcomes 00/01/10, shape (num_params, 3).

        Equal to the two-term shift rule ``0.5 [m(t + pi/2) - m(t - pi/2)]``.
        """
        n = self.ansatz.n_qubits
        grads = np.empty((self.ansatz.num_layers, n, 2, 3))
        c = np.empty((3, 2, 2), dtype=complex)
        for l in range(self.ansatz.num_layers):
            t = self.through[l]
            sigma = t @ rho @ t.conj().T
            for k in range(n):
                obs = self.observables[l].reshape(3, 1 << k, 2, -1)
                sig = sigma.reshape(1 << k, 2, -1)
                # c[:, a, b] = Tr over everything but row qubit k of O_c (|b><a| on k) sigma
                for a in range(2):
                    oa = obs[:, :, a].reshape(3, -1)
                    for b in range(2):
                        c[:, a, b] = oa @ sig[:, b].reshape(-1)
                grads[l, k] = np.einsum("gab,cab->gc", self.generators[l, k], c).imag
        return grads.reshape(-1, 3)


def received_fidelity(factor: np.ndarray, rho_noisy_in: np.ndarray) -> float:
    """Fidelity of the noisy received state against the noiseless mixture.

    The ansatz is unitary and noiseless, so this equals the output fidelity.
    """
    return min(max(factor_fidelity(factor, rho_noisy_in), 0.0), 1.0)
