"""Classical-to-quantum encoders.

Image vectors are amplitude encoded with a damping factor ``gamma``; the
weight ``1 - gamma**2`` removed from the feature amplitudes is parked in a
reserved sink index (the first slot of the upper half of the image register)
so the state stays normalized. The observed rate is mapped to an angle in
``[0, pi]`` and loaded into one qubit with ``R_y``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import ConstraintViolation, DegenerateInputError
from .quantum import ry_matrix, tensor_product

FEATURE_DIM = 16
INPUT_MODES = ("hybrid", "image-only", "channel-only", "no-qris-baseline")


def normalize_image(raw, target_dim: int = FEATURE_DIM) -> np.ndarray:
    """Flatten, average-pool (or zero-pad) to ``target_dim`` and scale to unit norm."""
    x = np.asarray(raw, dtype=float).ravel()
    if target_dim < 1 or target_dim & (target_dim - 1):
        raise ValueError(f"target_dim must be a power of two, got {target_dim}")
    if x.size == 0:
        raise DegenerateInputError("empty image vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("image vector contains non-finite values")
    if x.size > target_dim:
        x = np.array([chunk.mean() for chunk in np.array_split(x, target_dim)])
    elif x.size < target_dim:
        x = np.concatenate([x, np.zeros(target_dim - x.size)])
    peak = np.max(np.abs(x))
    if peak == 0.0:
        raise DegenerateInputError("image vector is all zeros and cannot be normalized")
    # rescale first so tiny (even subnormal) entries do not underflow the norm
    x = x / peak
    return x / np.linalg.norm(x)


def check_gamma(gamma: float, gamma_max: Optional[float] = None) -> float:
    gamma = float(gamma)
    upper = 1.0 if gamma_max is None else float(gamma_max)
    ok = 0.0 < gamma < 1.0 and (gamma_max is None or gamma <= upper)
    if not ok:
        bound = "1)" if gamma_max is None else f"{upper:g}]"
        raise ConstraintViolation(f"damping gamma={gamma!r} outside (0, {bound}")
    return gamma


def amplitude_encode_damped(feature, gamma: float,
                            gamma_max: Optional[float] = None) -> np.ndarray:
    """Encode a unit vector of length ``2**m`` into ``m + 1`` qubits.

    Amplitudes ``0 .. 2**m - 1`` hold ``gamma * feature``; index ``2**m``
    holds ``sqrt(1 - gamma**2)``; the rest of the upper half is zero.
    """
    gamma = check_gamma(gamma, gamma_max)
    x = np.asarray(feature, dtype=float)
    size = x.shape[0]
    if x.ndim != 1 or size < 1 or size & (size - 1):
        raise ValueError(f"feature length must be a power of two, got shape {x.shape}")
    if abs(np.dot(x, x) - 1.0) > 1e-10:
        raise ValueError("feature vector must have unit norm")
    psi = np.zeros(2 * size, dtype=complex)
    psi[:size] = gamma * x
    psi[size] = np.sqrt(1.0 - gamma * gamma)
    return psi


def rate_to_theta(rate: float, r_min: float, r_max: float) -> float:
    """Linear map of a rate onto [0, pi], clamped at the bounds."""
    if not (np.isfinite(r_min) and np.isfinite(r_max)) or r_min >= r_max:
        raise ValueError(f"invalid rate bounds ({r_min!r}, {r_max!r})")
    if not np.isfinite(rate):
        raise ValueError(f"rate must be finite, got {rate!r}")
    frac = (rate - r_min) / (r_max - r_min)
    return float(np.pi * min(max(frac, 0.0), 1.0))


def encode_channel_state(theta: float) -> np.ndarray:
    """R_y(theta)|0> = (cos theta/2, sin theta/2)."""
    if not (np.isfinite(theta) and 0.0 <= theta <= np.pi):
        raise ValueError(f"theta must lie in [0, pi], got {theta!r}")
    return ry_matrix(theta)[:, 0].copy()


@dataclass(frozen=True)
class HybridInput:
    state: np.ndarray
    gamma_used: float
    theta_used: float
    provenance: dict = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return int(self.state.shape[0]).bit_length() - 1


def hybrid_encode(feature, rate: float, rate_bounds: tuple[float, float], gamma: float,
                  gamma_max: Optional[float] = None, mode: str = "hybrid",
                  provenance: Optional[dict] = None) -> HybridInput:
    """|Psi> = damped image state (x) R_y(theta)|0>.

    ``mode`` selects the ablation inputs: ``image-only`` forces theta = 0 and
    ``channel-only`` replaces the image register by |0...0>. The
    ``no-qris-baseline`` mode encodes like ``hybrid``; it differs downstream
    (the mixture weight is pinned to 1).
    """
    if mode not in INPUT_MODES:
        raise ValueError(f"mode must be one of {INPUT_MODES}, got {mode!r}")
    x = np.asarray(feature, dtype=float)
    theta = 0.0 if mode == "image-only" else rate_to_theta(rate, *rate_bounds)
    if mode == "channel-only":
        image = np.zeros(2 * x.shape[0], dtype=complex)
        image[0] = 1.0
    else:
        image = amplitude_encode_damped(x, gamma, gamma_max)
    state = tensor_product(image, encode_channel_state(theta))
    return HybridInput(state, float(gamma), theta, dict(provenance or {}))


def split_columns(X, feature_dim: int = FEATURE_DIM):
    """Split an input matrix into (images, rates, alphas).

    Columns are ``feature_dim`` image values, the rate, and optionally the
    per-sample mixture weight alpha (``None`` when absent).
    """
    X = check_array(X, dtype=float)
    if X.shape[1] not in (feature_dim + 1, feature_dim + 2):
        raise ValueError(f"expected {feature_dim + 1} or {feature_dim + 2} columns, "
                         f"got {X.shape[1]}")
    alphas = X[:, feature_dim + 1] if X.shape[1] == feature_dim + 2 else None
    return X[:, :feature_dim], X[:, feature_dim], alphas


class HybridEncoder(TransformerMixin, BaseEstimator):
    """Transform ``[image | rate | alpha]`` rows into 6-qubit hybrid state vectors.

    Parameters
    ----------
    gamma : float
        Damping coefficient applied to the image amplitudes.
    rate_bounds : tuple of float, optional
        ``(R_min, R_max)``. Learned from the training rates when ``None``.
    mode : str
        One of ``hybrid``, ``image-only``, ``channel-only``, ``no-qris-baseline``.
    feature_dim : int
        Image length after pooling; a power of two.
    """

    def __init__(self, gamma=0.85, rate_bounds=None, mode="hybrid", feature_dim=FEATURE_DIM):
        self.gamma = gamma
        self.rate_bounds = rate_bounds
        self.mode = mode
        self.feature_dim = feature_dim

    def fit(self, X, y=None):
        _, rates, _ = split_columns(X, self.feature_dim)
        if self.rate_bounds is None:
            lo, hi = float(rates.min()), float(rates.max())
            if lo == hi:
                hi = lo + 1.0
            self.rate_bounds_ = (lo, hi)
        else:
            self.rate_bounds_ = tuple(float(b) for b in self.rate_bounds)
        return self

    def transform(self, X):
        check_is_fitted(self, "rate_bounds_")
        images, rates, _ = split_columns(X, self.feature_dim)
        out = [hybrid_encode(normalize_image(img, self.feature_dim), r, self.rate_bounds_,
                             self.gamma, mode=self.mode).state
               for img, r in zip(images, rates)]
        return np.array(out)
