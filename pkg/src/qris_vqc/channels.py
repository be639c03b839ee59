"""Kraus-operator channels: depolarizing, dephasing, composition and the
direct/reflected mixture received by the user node."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Optional, Sequence

import numpy as np

from .quantum import (ATOL, Gate, I2, X, Y, Z, _apply_on_axes, lift_operator,
                      num_qubits, rz_matrix)

NOISE_SCOPES = ("register", "qubit")


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """CPTP map ``rho -> sum_m K_m rho K_m^dagger`` on ``arity`` qubits."""

    kraus_ops: tuple
    label: str = ""

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        num_qubits(dim)
        if any(k.shape != (dim, dim) for k in ops):
            raise ValueError("Kraus operators must share one square shape")
        completeness = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(completeness - np.eye(dim))) > ATOL:
            raise ValueError(f"Kraus set of {self.label!r} is not trace preserving")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    @property
    def arity(self) -> int:
        return num_qubits(self.dim)

    @cached_property
    def superoperator(self) -> np.ndarray:
        """Matrix acting on row-major vec(rho): ``sum_m K_m (x) conj(K_m)``."""
        return sum(np.kron(k, k.conj()) for k in self.kraus_ops)

    @cached_property
    def pauli_weights(self) -> Optional[np.ndarray]:
        """(w_I, w_X, w_Y, w_Z) if this one-qubit map is ``sum_P w_P P rho P``, else None."""
        if self.dim != 2:
            return None
        basis = [np.kron(P, P.conj()) for P in (I2, X, Y, Z)]
        # the four P (x) conj(P) are orthogonal with squared Frobenius norm 4
        w = np.array([np.vdot(b, self.superoperator) / 4.0 for b in basis])
        if np.max(np.abs(w.imag)) > ATOL:
            return None
        w = w.real
        if np.max(np.abs(sum(wi * b for wi, b in zip(w, basis)) - self.superoperator)) > ATOL:
            return None
        return w

    def completeness_error(self) -> float:
        total = sum(k.conj().T @ k for k in self.kraus_ops)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def __call__(self, rho) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.dim, self.dim):
            raise ValueError(f"channel of dim {self.dim} cannot act on shape {rho.shape}")
        return sum(k @ rho @ k.conj().T for k in self.kraus_ops)


def identity_channel(arity: int = 1) -> QuantumChannel:
    return QuantumChannel((np.eye(1 << arity),), label="identity")


def _check_probability(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    return value


def depolarizing_channel(p: float) -> QuantumChannel:
    """(1 - p) rho + p/3 (X rho X + Y rho Y + Z rho Z)."""
    p = _check_probability("p", p)
    a, b = np.sqrt(1.0 - p), np.sqrt(p / 3.0)
    return QuantumChannel((a * I2, b * X, b * Y, b * Z), label=f"dep({p:g})")


def dephasing_channel(q: float) -> QuantumChannel:
    """(1 - q) rho + q Z rho Z; off-diagonals shrink by 1 - 2q."""
    q = _check_probability("q", q)
    return QuantumChannel((np.sqrt(1.0 - q) * I2, np.sqrt(q) * Z), label=f"phase({q:g})")


def compose(outer: QuantumChannel, inner: QuantumChannel) -> QuantumChannel:
    """Channel that applies ``inner`` first, then ``outer``."""
    if outer.arity != inner.arity:
        raise ValueError(f"cannot compose arities {outer.arity} and {inner.arity}")
    ops = tuple(ko @ ki for ko in outer.kraus_ops for ki in inner.kraus_ops)
    return QuantumChannel(ops, label=f"{outer.label}∘{inner.label}")


def lift_to_register(channel: QuantumChannel, target: int, n: int) -> QuantumChannel:
    """Identity-pad every Kraus operator of a one-qubit channel to ``n`` qubits."""
    if channel.arity != 1:
        raise ValueError(f"only single-qubit channels can be lifted, got arity {channel.arity}")
    if not 0 <= target < n:
        raise ValueError(f"target {target} out of range for {n} qubits")
    ops = tuple(lift_operator(k, [target], n) for k in channel.kraus_ops)
    return QuantumChannel(ops, label=f"{channel.label}@q{target}/{n}")


def apply_local(rho: np.ndarray, channel: QuantumChannel, qubit: int) -> np.ndarray:
    """Apply a one-qubit channel to ``qubit`` of ``rho`` without building lifted Kraus ops.

    Equivalent to ``lift_to_register(channel, qubit, n)(rho)``.
    """
    dim = rho.shape[0]
    n = num_qubits(dim)
    t = np.asarray(rho, dtype=complex).reshape((2,) * (2 * n))
    t = _apply_on_axes(t, channel.superoperator, [qubit, n + qubit])
    return t.reshape(dim, dim)


_SIGN = np.array([[1.0, -1.0], [-1.0, 1.0]]).reshape(1, 2, 1, 2, 1)


def _pauli_local(rho: np.ndarray, weights: np.ndarray, k: int, n: int) -> np.ndarray:
    # X rho X flips bit k of both indices, Z rho Z multiplies by (-1)^(b_row + b_col),
    # and Y rho Y = X Z rho Z X
    w_i, w_x, w_y, w_z = weights
    left, right = 1 << k, 1 << (n - 1 - k)
    t = rho.reshape(left, 2, right * left, 2, right)
    out = (w_i + w_z * _SIGN) * t
    out += ((w_x + w_y * _SIGN) * t)[:, ::-1, :, ::-1, :]
    return out.reshape(rho.shape)


def apply_to_all_qubits(rho: np.ndarray, channel: QuantumChannel) -> np.ndarray:
    """i.i.d. local noise: the same one-qubit channel on every register qubit."""
    dim = rho.shape[0]
    n = num_qubits(dim)
    weights = channel.pauli_weights
    if weights is not None:
        rho = np.asarray(rho, dtype=complex)
        for k in range(n):
            rho = _pauli_local(rho, weights, k, n)
    else:
        for k in range(n):
            rho = apply_local(rho, channel, k)
    return 0.5 * (rho + rho.conj().T)


def qris_gate(n: int, phases: float | Sequence[float] = np.pi / 4) -> Gate:
    """Default surface unitary: a product of per-qubit R_z(phi_k) rotations."""
    phases = np.broadcast_to(np.asarray(phases, dtype=float), (n,))
    return _qris_gate(n, tuple(float(p) for p in phases))


@lru_cache(maxsize=32)
def _qris_gate(n: int, phases: tuple) -> Gate:
    diag = np.ones(1, dtype=complex)
    for phi in phases:
        diag = np.kron(diag, np.diagonal(rz_matrix(phi)))
    return Gate(np.diag(diag), tuple(range(n)))


@dataclass(frozen=True)
class NoiseModel:
    """Link noise and path mixture of the received state.

    ``p``/``q`` are the depolarizing/dephasing probabilities of the direct
    link; ``p_rq``/``q_rq`` override them for the surface-to-user link.
    With ``scope="register"`` the probabilities are a per-link budget split
    evenly over the register (each qubit sees ``p / n``), so the register
    fidelity loss matches that of the one-qubit map. ``scope="qubit"`` applies
    the full ``p`` and ``q`` to every qubit.
    """

    p: float = 0.05
    q: float = 0.03
    alpha: float = 0.5
    u_qris: Optional[Gate] = None
    qris_phase: float = np.pi / 4
    p_rq: Optional[float] = None
    q_rq: Optional[float] = None
    scope: str = "register"

    def __post_init__(self):
        for name in ("p", "q", "alpha"):
            _check_probability(name, getattr(self, name))
        for name in ("p_rq", "q_rq"):
            if getattr(self, name) is not None:
                _check_probability(name, getattr(self, name))
        if self.scope not in NOISE_SCOPES:
            raise ValueError(f"scope must be one of {NOISE_SCOPES}, got {self.scope!r}")

    def link_rates(self, n: int, reflected: bool = False) -> tuple[float, float]:
        p = self.p if not reflected or self.p_rq is None else self.p_rq
        q = self.q if not reflected or self.q_rq is None else self.q_rq
        if self.scope == "register":
            return p / n, q / n
        return p, q

    def link_channel(self, n: int, reflected: bool = False) -> QuantumChannel:
        """Per-qubit map E_phase ∘ E_dep used on one propagation link."""
        return _link_channel(*self.link_rates(n, reflected))

    def surface_gate(self, n: int) -> Gate:
        if self.u_qris is not None:
            if self.u_qris.arity != n:
                raise ValueError(f"u_qris acts on {self.u_qris.arity} qubits, register has {n}")
            return self.u_qris
        return qris_gate(n, self.qris_phase)

    @property
    def noiseless(self) -> "NoiseModel":
        return NoiseModel(p=0.0, q=0.0, alpha=self.alpha, u_qris=self.u_qris,
                          qris_phase=self.qris_phase, p_rq=0.0, q_rq=0.0, scope=self.scope)


@lru_cache(maxsize=64)
def _link_channel(p: float, q: float) -> QuantumChannel:
    return compose(dephasing_channel(q), depolarizing_channel(p))


def _conjugate(rho: np.ndarray, gate: Gate) -> np.ndarray:
    u = gate.matrix
    if np.count_nonzero(u - np.diag(np.diagonal(u))) == 0:
        d = np.diagonal(u)
        return rho * np.outer(d, d.conj())
    return u @ rho @ u.conj().T


def effective_state(rho0, model: NoiseModel, alpha: Optional[float] = None) -> np.ndarray:
    """alpha * E_BQ(rho0) + (1 - alpha) * E_RQ(U rho0 U^dagger).

    ``alpha`` overrides ``model.alpha`` (per-sample mixture weight).
    """
    rho0 = np.asarray(rho0, dtype=complex)
    n = num_qubits(rho0.shape[0])
    a = model.alpha if alpha is None else _check_probability("alpha", alpha)
    direct, reflected = model.link_channel(n), model.link_channel(n, reflected=True)
    if a == 1.0:
        return apply_to_all_qubits(rho0, direct)
    turned = _conjugate(rho0, model.surface_gate(n))
    if a == 0.0:
        return apply_to_all_qubits(turned, reflected)
    if direct is reflected:
        # same link noise on both paths: mix first, the channel is linear
        return apply_to_all_qubits(a * rho0 + (1.0 - a) * turned, direct)
    return a * apply_to_all_qubits(rho0, direct) + (1.0 - a) * apply_to_all_qubits(turned, reflected)
