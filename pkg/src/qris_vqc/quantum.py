"""Dense state-vector and density-matrix primitives.

States are plain numpy arrays: a length ``2**n`` complex vector for pure
states and a ``(2**n, 2**n)`` complex matrix for density matrices. Qubit 0 is
the most significant bit of the computational-basis index, so
``tensor_product(a, b)[i * len(b) + j] == a[i] * b[j]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

ATOL = 1e-10
# relative eigenvalue floor below which a spectrum entry is treated as round-off
RANK_RTOL = 1e-13

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def num_qubits(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def check_state_vector(psi, atol: float = ATOL) -> np.ndarray:
    """Validate a pure state and return it as a complex array."""
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError(f"state vector must be 1-D, got shape {psi.shape}")
    num_qubits(psi.shape[0])
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > atol:
        raise ValueError(f"state vector is not normalized (norm^2 = {norm!r})")
    return psi


def check_density_matrix(rho, atol: float = ATOL, psd_tol: float = 1e-9) -> np.ndarray:
    """Validate Hermiticity, unit trace and positivity of ``rho``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    num_qubits(rho.shape[0])
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > atol:
        raise ValueError(f"density matrix trace is {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -psd_tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def basis_state(index: int, n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[index] = 1.0
    return psi


def density(psi) -> np.ndarray:
    """Outer product |psi><psi|."""
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product of two state vectors; ``a`` occupies the high qubits."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


@dataclass(frozen=True)
class Gate:
    """A ``2**k x 2**k`` unitary acting on an ordered tuple of qubits.

    The first entry of ``targets`` is the most significant qubit of the
    gate's own matrix index.
    """

    matrix: np.ndarray
    targets: tuple[int, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        targets = tuple(int(t) for t in self.targets)
        if m.shape != (1 << len(targets),) * 2:
            raise ValueError(
                f"gate matrix shape {m.shape} does not match {len(targets)} targets")
        if len(set(targets)) != len(targets):
            raise ValueError(f"gate targets must be distinct, got {targets}")
        if np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0]))) > ATOL:
            raise ValueError("gate matrix is not unitary")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "targets", targets)

    @property
    def arity(self) -> int:
        return len(self.targets)


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def ry_gate(theta: float, target: int = 0) -> Gate:
    """R_y(theta) = [[cos t/2, -sin t/2], [sin t/2, cos t/2]] on ``target``."""
    if not np.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta!r}")
    return Gate(ry_matrix(theta), (target,))


def rz_gate(theta: float, target: int = 0) -> Gate:
    if not np.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta!r}")
    return Gate(rz_matrix(theta), (target,))


def cnot_gate(control: int, target: int) -> Gate:
    m = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
    return Gate(m, (control, target))


def _apply_on_axes(tensor: np.ndarray, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract a k-qubit operator into the listed tensor axes (one per qubit)."""
    k = len(axes)
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    # tensordot puts the operator's output axes first; move them back in place
    return np.moveaxis(out, list(range(k)), list(axes))


def lift_operator(op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Identity-pad a k-qubit operator to the full ``n``-qubit register."""
    targets = list(targets)
    if any(t < 0 or t >= n for t in targets):
        raise ValueError(f"targets {targets} out of range for {n} qubits")
    if len(set(targets)) != len(targets):
        raise ValueError(f"targets must be distinct, got {targets}")
    op = np.asarray(op, dtype=complex)
    if op.shape != (1 << len(targets),) * 2:
        raise ValueError(f"operator shape {op.shape} does not match {len(targets)} targets")
    eye = np.eye(1 << n, dtype=complex).reshape((2,) * n + (1 << n,))
    return _apply_on_axes(eye, op, targets).reshape(1 << n, 1 << n)


def apply_operator(rho: np.ndarray, op: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Return ``A rho A^dagger`` with ``A`` acting on ``targets`` (no unitarity check)."""
    dim = rho.shape[0]
    n = num_qubits(dim)
    t = rho.reshape((2,) * (2 * n))
    t = _apply_on_axes(t, op, list(targets))
    t = _apply_on_axes(t, np.asarray(op).conj(), [n + q for q in targets])
    return t.reshape(dim, dim)


def apply_gate(rho, gate: Gate) -> np.ndarray:
    """Conjugate a density matrix by a gate lifted to the full register."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square density matrix, got shape {rho.shape}")
    n = num_qubits(rho.shape[0])
    if any(t < 0 or t >= n for t in gate.targets):
        raise ValueError(f"gate targets {gate.targets} out of range for {n} qubits")
    return apply_operator(rho, gate.matrix, gate.targets)


def _pure_vector(rho: np.ndarray, tol: float = 1e-12):
    """Return the state vector if ``rho`` is (numerically) pure, else None."""
    if abs(np.vdot(rho, rho).real - 1.0) > tol:
        return None
    # rho = psi psi^dagger, so any column with nonzero weight is psi up to phase
    j = int(np.argmax(np.real(np.diagonal(rho))))
    return rho[:, j] / np.sqrt(rho[j, j].real)


def _psd_factor(rho: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Tall ``B`` with ``B B^dagger = rho`` after dropping round-off eigenvalues."""
    w, v = np.linalg.eigh(rho)
    keep = w > rtol * max(w[-1], 0.0)
    return v[:, keep] * np.sqrt(w[keep])


def uhlmann_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """(Tr sqrt(sqrt(a) b sqrt(a)))**2 via Hermitian eigensolves.

    The lower-rank argument is factored as ``B B^dagger`` and the eigenvalues
    of ``B^dagger (other) B`` are used. Eigenvalues below ``RANK_RTOL`` times
    the largest count as zero; otherwise their square roots (about 1e-8 for
    round-off of 1e-16) would swamp the result for rank-deficient states.
    """
    fa, fb = _psd_factor(a), _psd_factor(b)
    if fa.shape[1] <= fb.shape[1]:
        return factor_fidelity(fa, b)
    return factor_fidelity(fb, a)


def pure_fidelity(psi: np.ndarray, rho: np.ndarray) -> float:
    """<psi| rho |psi> for a normalized vector ``psi``."""
    return float(np.vdot(psi, rho @ psi).real)


def factor_fidelity(factor: np.ndarray, rho: np.ndarray) -> float:
    """Fidelity between ``A A^dagger`` and ``rho`` for a tall factor ``A`` (d x r).

    The nonzero singular values of sqrt(rho) sqrt(A A^dagger) coincide with
    those of sqrt(rho) A, so only the r x r matrix A^dagger rho A is needed.
    """
    factor = np.asarray(factor, dtype=complex).reshape(rho.shape[0], -1)
    m = factor.conj().T @ rho @ factor
    m = 0.5 * (m + m.conj().T)
    w = np.clip(np.linalg.eigvalsh(m), 0.0, None)
    return float(np.sum(np.sqrt(w)) ** 2)


def fidelity(a, b) -> float:
    """Uhlmann fidelity between two density matrices, clipped to [0, 1].

    When either argument is pure the overlap ``<psi|rho|psi>`` is used instead
    of the eigendecomposition; the two routes agree to ~1e-12.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"fidelity needs equal square shapes, got {a.shape} and {b.shape}")
    psi = _pure_vector(a)
    if psi is not None:
        f = pure_fidelity(psi, b)
    else:
        psi = _pure_vector(b)
        f = pure_fidelity(psi, a) if psi is not None else uhlmann_fidelity(a, b)
    return min(max(f, 0.0), 1.0)


def measure_probabilities(rho, qubits: Sequence[int]) -> np.ndarray:
    """Marginal computational-basis distribution of ``qubits`` (in listed order)."""
    rho = np.asarray(rho)
    qubits = list(qubits)
    if not qubits:
        raise ValueError("at least one qubit must be measured")
    n = num_qubits(rho.shape[0])
    if len(set(qubits)) != len(qubits) or any(q < 0 or q >= n for q in qubits):
        raise ValueError(f"invalid qubit list {qubits} for {n} qubits")
    diag = np.real(np.diagonal(rho)).reshape((2,) * n)
    rest = tuple(q for q in range(n) if q not in qubits)
    marg = diag.sum(axis=rest) if rest else diag
    # remaining axes are in ascending qubit order; reorder to the requested order
    order = np.argsort(np.argsort(qubits))
    marg = np.transpose(marg, axes=list(order)) if len(qubits) > 1 else marg
    return marg.reshape(-1)
