"""scikit-learn style front end for the noise-aware classifier."""
from __future__ import annotations

from dataclasses import fields

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .encoding import FEATURE_DIM
from .training import TrainConfig, evaluate, prepare_inputs, train
from .vqc import LABELS, VqcParams, build_ansatz

_CONFIG_FIELDS = tuple(f.name for f in fields(TrainConfig))


def check_features(X, feature_dim: int = FEATURE_DIM) -> np.ndarray:
    """2-D finite float array with ``feature_dim`` image columns, a rate and optional alpha."""
    X = check_array(X, dtype=float, ensure_all_finite=True)
    if X.shape[1] not in (feature_dim + 1, feature_dim + 2):
        raise ValueError(f"expected {feature_dim + 1} or {feature_dim + 2} columns "
                         f"(image, rate[, alpha]), got {X.shape[1]}")
    if X.shape[1] == feature_dim + 2:
        a = X[:, feature_dim + 1]
        if np.any((a < 0.0) | (a > 1.0)):
            raise ValueError("alpha column must lie in [0, 1]")
    return X


def check_labels(y, n: int) -> np.ndarray:
    """Integer labels from {-1, 0, 1}, one per row."""
    y = np.asarray(y)
    if y.ndim != 1 or y.shape[0] != n:
        raise ValueError(f"expected {n} labels in a 1-D array, got shape {y.shape}")
    if not np.all(np.isin(y, LABELS)):
        bad = sorted(set(np.asarray(y).tolist()) - set(LABELS))
        raise ValueError(f"labels must be in {LABELS}, found {bad}")
    return y.astype(int)


class NoiseAwareVQC(ClassifierMixin, BaseEstimator):
    """Ternary link-status classifier trained under simulated channel noise.

    Hyperparameters mirror :class:`TrainConfig` field for field (``seed``
    controls initialization, noise jitter and shuffling). Inputs are rows
    ``[16 image values | rate | alpha]``; the alpha column may be omitted,
    in which case ``alpha`` is used for every sample.

    Fitted attributes: ``params_`` (:class:`VqcParams`), ``history_`` (one
    :class:`EpochMetrics` per epoch), ``classes_``, ``rate_bounds_``,
    ``n_features_in_``.
    """

    def __init__(self, epochs=10, batch_size=50, learning_rate=1e-3, weight_decay=2e-3,
                 lambda_init=1.0, lambda_growth=1.1, lambda_cap=None, lambda_mode="batch",
                 update="sample", f_min=0.95, gamma_max=0.85, gamma_init=0.85, p=0.05, q=0.03,
                 noise_jitter=0.5, noise_scope="register", qris_phase=np.pi / 4, alpha=0.5,
                 num_layers=2, init_scale=np.pi / 8, mode="hybrid", rate_bounds=None,
                 beta1=0.9, beta2=0.999, eps=1e-8, seed=0):
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.weight_decay = weight_decay
        self.lambda_init = lambda_init
        self.lambda_growth = lambda_growth
        self.lambda_cap = lambda_cap
        self.lambda_mode = lambda_mode
        self.update = update
        self.f_min = f_min
        self.gamma_max = gamma_max
        self.gamma_init = gamma_init
        self.p = p
        self.q = q
        self.noise_jitter = noise_jitter
        self.noise_scope = noise_scope
        self.qris_phase = qris_phase
        self.alpha = alpha
        self.num_layers = num_layers
        self.init_scale = init_scale
        self.mode = mode
        self.rate_bounds = rate_bounds
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.seed = seed

    def to_config(self) -> TrainConfig:
        return TrainConfig(**{k: getattr(self, k) for k in _CONFIG_FIELDS})

    def fit(self, X, y, X_val=None, y_val=None, callback=None):
        X = check_features(X)
        y = check_labels(y, X.shape[0])
        if X_val is not None:
            X_val = check_features(X_val)
            y_val = check_labels(y_val, X_val.shape[0])
        self.rate_bounds_ = self._bounds(X)
        self.params_, self.history_ = train(X, y, X_val, y_val, self.to_config(),
                                            callback=callback, rate_bounds=self.rate_bounds_)
        self.classes_ = np.array(LABELS)
        self.n_features_in_ = X.shape[1]
        return self

    def _bounds(self, X):
        if self.rate_bounds is not None:
            return tuple(float(b) for b in self.rate_bounds)
        rates = X[:, FEATURE_DIM]
        lo, hi = float(rates.min()), float(rates.max())
        return (lo, hi if hi > lo else lo + 1.0)

    def set_fitted(self, params: VqcParams, rate_bounds) -> "NoiseAwareVQC":
        """Install externally stored parameters, e.g. read from a params file."""
        if params.thetas.shape != (build_ansatz(self.num_layers).num_params,):
            raise ValueError(f"{params.thetas.size} angles do not fit a "
                             f"{self.num_layers}-layer ansatz")
        self.params_ = params
        self.history_ = []
        self.rate_bounds_ = tuple(float(b) for b in rate_bounds)
        self.classes_ = np.array(LABELS)
        self.n_features_in_ = FEATURE_DIM + 2
        return self

    def evaluate(self, X, y=None, p=None, q=None) -> dict:
        """Probabilities, predictions, fidelities and (with labels) accuracy/confusion.

        ``p``/``q`` override the nominal noise of the fitted configuration.
        """
        check_is_fitted(self, "params_")
        X = check_features(X)
        if y is not None:
            y = check_labels(y, X.shape[0])
        config = self.to_config()
        data = prepare_inputs(X, y, config, self.rate_bounds_)
        return evaluate(data, self.params_, config, noise=config.noise_model(p, q))

    def predict_proba(self, X):
        """Columns follow ``classes_`` = (-1, 0, 1)."""
        return self.evaluate(X)["probs"]

    def predict(self, X):
        return self.evaluate(X)["pred"]

    def fidelity(self, X):
        """Per-sample fidelity of the noisy received state to the noiseless one."""
        return self.evaluate(X)["fidelity"]
