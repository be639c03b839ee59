"""Fidelity-regularized training: losses, gradients, Adam with gamma projection,
adaptive penalty weight and the epoch loop."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from .channels import NoiseModel
from .encoding import (FEATURE_DIM, INPUT_MODES, amplitude_encode_damped, check_gamma,
                       encode_channel_state, normalize_image, rate_to_theta, split_columns)
from .quantum import tensor_product
from .vqc import (LABELS, Ansatz, PreparedCircuit, VqcParams, build_ansatz,
                  probs_from_marginal, received_states, received_fidelity)

log = logging.getLogger(__name__)

GAMMA_FLOOR = 1e-3
GAMMA_STEP = 1e-4
PROB_FLOOR = 1e-12


def label_index(label) -> int:
    try:
        return LABELS.index(int(label))
    except (ValueError, TypeError):
        raise ValueError(f"label must be one of {LABELS}, got {label!r}") from None


def cross_entropy(probs, label) -> float:
    """-log of the probability assigned to the true class (labels -1, 0, 1 -> 0, 1, 2)."""
    b = float(np.asarray(probs, dtype=float)[label_index(label)])
    return float(-np.log(max(b, PROB_FLOOR)))


@dataclass(frozen=True)
class LossBreakdown:
    ce: float
    fid_penalty: float
    lam: float
    total: float


def total_loss(fw, label, lam: float) -> LossBreakdown:
    """Cross-entropy plus ``lam * (1 - fidelity)`` for one forward result."""
    if lam < 0:
        raise ValueError(f"penalty weight must be non-negative, got {lam!r}")
    ce = cross_entropy(fw.probs, label)
    pen = 1.0 - float(fw.fidelity)
    return LossBreakdown(ce, pen, float(lam), ce + lam * pen)


def param_shift_grad(loss_fn: Callable, params: VqcParams, index: int,
                     shift: float = np.pi / 2):
    """0.5 * [L(theta_i + shift) - L(theta_i - shift)].

    ``loss_fn`` maps a :class:`VqcParams` to a value (scalar or array). The
    result is the exact derivative when the value is an expectation of a
    circuit in which ``theta_i`` enters a single Pauli rotation.
    """
    if not 0 <= index < params.thetas.shape[0]:
        raise ValueError(f"parameter index {index} out of range")
    plus, minus = params.copy(), params.copy()
    plus.thetas[index] += shift
    minus.thetas[index] -= shift
    return 0.5 * (np.asarray(loss_fn(plus)) - np.asarray(loss_fn(minus)))


def _gamma_offsets(gamma: float, gamma_max: float, h: float) -> tuple[float, float]:
    up = min(h, gamma_max - gamma)
    down = min(h, gamma - GAMMA_FLOOR * 0.5)
    step = min(up, down)
    if step > 0:
        return step, step
    # pinned at a boundary: one-sided difference into the feasible side
    return (0.0, h) if up <= 0 else (h, 0.0)


def gamma_grad(loss_fn: Callable, params: VqcParams, gamma_max: float,
               h: float = GAMMA_STEP) -> float:
    """Central difference in gamma, shrinking the step to stay inside (0, gamma_max]."""
    up, down = _gamma_offsets(params.gamma, gamma_max, h)
    hi, lo = params.copy(), params.copy()
    hi.gamma += up
    lo.gamma -= down
    return float((loss_fn(hi) - loss_fn(lo)) / (up + down))


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 50
    learning_rate: float = 1e-3
    weight_decay: float = 2e-3
    lambda_init: float = 1.0
    lambda_growth: float = 1.1
    lambda_cap: Optional[float] = None
    lambda_mode: str = "batch"
    update: str = "sample"
    f_min: float = 0.95
    gamma_max: float = 0.85
    gamma_init: float = 0.85
    p: float = 0.05
    q: float = 0.03
    noise_jitter: float = 0.5
    noise_scope: str = "register"
    qris_phase: float = np.pi / 4
    alpha: float = 0.5
    num_layers: int = 2
    init_scale: float = np.pi / 8
    mode: str = "hybrid"
    rate_bounds: Optional[tuple] = None
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.f_min < 1.0:
            raise ValueError(f"f_min must lie in (0, 1), got {self.f_min!r}")
        if not 0.0 < self.gamma_max < 1.0:
            raise ValueError(f"gamma_max must lie in (0, 1), got {self.gamma_max!r}")
        if self.lambda_growth <= 1.0:
            raise ValueError("lambda_growth must exceed 1")
        if self.lambda_init < 0:
            raise ValueError("lambda_init must be non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.mode not in INPUT_MODES:
            raise ValueError(f"mode must be one of {INPUT_MODES}, got {self.mode!r}")
        if self.lambda_mode not in ("batch", "sample"):
            raise ValueError("lambda_mode must be 'batch' or 'sample'")
        if self.update not in ("batch", "sample"):
            raise ValueError("update must be 'batch' or 'sample'")
        if not 0.0 <= self.noise_jitter <= 1.0:
            raise ValueError("noise_jitter must lie in [0, 1]")
        check_gamma(self.gamma_init, self.gamma_max)

    @property
    def cap(self) -> float:
        return self.lambda_cap if self.lambda_cap is not None else 100.0 * self.lambda_init

    def noise_model(self, p: Optional[float] = None, q: Optional[float] = None) -> NoiseModel:
        return NoiseModel(p=self.p if p is None else p, q=self.q if q is None else q,
                          alpha=self.alpha, qris_phase=self.qris_phase, scope=self.noise_scope)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(np.zeros(size), np.zeros(size), 0)


def adam_step(params: VqcParams, grad_thetas, grad_gamma: float, state: AdamState,
              config: TrainConfig) -> VqcParams:
    """One Adam update of (thetas, gamma); gamma is then clipped to [1e-3, gamma_max].

    L2 weight decay is added to the angle gradients only. ``state`` is
    advanced in place.
    """
    g = np.asarray(grad_thetas, dtype=float)
    if g.shape != params.thetas.shape or state.m.shape != (g.size + 1,):
        raise ValueError("gradient, parameter and optimizer state sizes disagree")
    g = np.append(g + config.weight_decay * params.thetas, grad_gamma)
    state.t += 1
    state.m = config.beta1 * state.m + (1 - config.beta1) * g
    state.v = config.beta2 * state.v + (1 - config.beta2) * g * g
    m_hat = state.m / (1 - config.beta1 ** state.t)
    v_hat = state.v / (1 - config.beta2 ** state.t)
    step = config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
    thetas = params.thetas - step[:-1]
    gamma = float(np.clip(params.gamma - step[-1], GAMMA_FLOOR, config.gamma_max))
    return VqcParams(gamma, thetas)


def lambda_update(lam: float, mean_fidelity: float, f_min: float,
                  growth: float = 1.1, cap: float = np.inf) -> float:
    """Grow the penalty weight geometrically while fidelity is below ``f_min``."""
    if mean_fidelity < f_min:
        return min(lam * growth, cap)
    return lam


@dataclass
class EpochMetrics:
    epoch: int
    mean_loss: float
    mean_ce: float
    mean_fidelity: float
    train_accuracy: float
    test_accuracy: float
    lam: float
    gamma: float


@dataclass
class PreparedInputs:
    """Per-sample classical preprocessing that does not depend on gamma."""

    features: np.ndarray
    thetas: np.ndarray
    alphas: np.ndarray
    labels: np.ndarray
    mode: str
    rate_bounds: tuple

    def state(self, i: int, gamma: float) -> np.ndarray:
        ch = encode_channel_state(self.thetas[i])
        if self.mode == "channel-only":
            image = np.zeros(2 * self.features.shape[1], dtype=complex)
            image[0] = 1.0
        else:
            image = amplitude_encode_damped(self.features[i], gamma)
        return tensor_product(image, ch)


def prepare_inputs(X, y, config: TrainConfig, rate_bounds=None) -> PreparedInputs:
    images, rates, alphas = split_columns(X, FEATURE_DIM)
    if rate_bounds is None:
        rate_bounds = config.rate_bounds
    if rate_bounds is None:
        lo, hi = float(rates.min()), float(rates.max())
        rate_bounds = (lo, hi if hi > lo else lo + 1.0)
    feats = np.array([normalize_image(img, FEATURE_DIM) for img in images])
    if config.mode == "image-only":
        thetas = np.zeros(len(rates))
    else:
        thetas = np.array([rate_to_theta(r, *rate_bounds) for r in rates])
    if config.mode == "no-qris-baseline":
        alphas = np.ones(len(rates))
    elif alphas is None:
        alphas = np.full(len(rates), config.alpha)
    labels = np.zeros(len(rates), dtype=int) if y is None else np.array([int(v) for v in y])
    if y is not None:
        for v in labels:
            label_index(v)
    return PreparedInputs(feats, thetas, np.asarray(alphas, dtype=float), labels,
                          config.mode, tuple(rate_bounds))


@dataclass
class SampleEval:
    ce: float
    fidelity: float
    probs: np.ndarray
    grad_thetas: Optional[np.ndarray] = None
    grad_gamma: float = 0.0

    def total(self, lam: float) -> float:
        return self.ce + lam * (1.0 - self.fidelity)


def evaluate_sample(data: PreparedInputs, i: int, circuit: PreparedCircuit, gamma: float,
                    noise: NoiseModel, lam: float = 0.0, gradients: bool = False,
                    gamma_max: float = 1.0) -> SampleEval:
    """Loss terms of one sample and, optionally, their gradients.

    Angle gradients use the shift rule on the four readout marginals and the
    chain rule through the renormalized cross-entropy. The fidelity term does
    not depend on the angles: the ansatz is a noiseless unitary applied to
    both states. The gamma derivative is a central difference of the total.
    """
    alpha = data.alphas[i]
    label = data.labels[i]

    def at(g):
        factor, rho = received_states(data.state(i, g), noise, alpha)
        marg = circuit.marginal(rho)
        probs = probs_from_marginal(marg)
        return SampleEval(cross_entropy(probs, label), received_fidelity(factor, rho), probs), rho, marg

    base, rho, marg = at(gamma)
    if not gradients:
        return base
    t = label_index(label)
    m3 = np.clip(marg[:3], 0.0, None)
    mass = m3.sum()
    dce = np.zeros(3)
    if mass >= 1e-9 and m3[t] > PROB_FLOOR * mass:
        dce[:] = 1.0 / mass
        dce[t] -= 1.0 / m3[t]
    base.grad_thetas = circuit.shift_gradients(rho) @ dce
    if data.mode != "channel-only":
        up, down = _gamma_offsets(gamma, gamma_max, GAMMA_STEP)
        hi = at(gamma + up)[0].total(lam)
        lo = at(gamma - down)[0].total(lam)
        base.grad_gamma = (hi - lo) / (up + down)
    return base


def jittered_noise(config: TrainConfig, rng: np.random.Generator) -> NoiseModel:
    j = config.noise_jitter
    p = float(np.clip(config.p * rng.uniform(1 - j, 1 + j), 0.0, 1.0))
    q = float(np.clip(config.q * rng.uniform(1 - j, 1 + j), 0.0, 1.0))
    return config.noise_model(p, q)


def initial_params(config: TrainConfig, ansatz: Ansatz, rng: np.random.Generator) -> VqcParams:
    thetas = rng.uniform(-config.init_scale, config.init_scale, ansatz.num_params)
    return VqcParams(config.gamma_init, thetas)


def evaluate(data: PreparedInputs, params: VqcParams, config: TrainConfig,
             noise: Optional[NoiseModel] = None, ansatz: Optional[Ansatz] = None) -> dict:
    """Predictions, accuracy, mean fidelity and confusion matrix at nominal noise."""
    ansatz = ansatz or build_ansatz(config.num_layers)
    noise = noise or config.noise_model()
    circuit = PreparedCircuit(params.thetas, ansatz)
    probs = np.empty((len(data.labels), 3))
    fids = np.empty(len(data.labels))
    for i in range(len(data.labels)):
        ev = evaluate_sample(data, i, circuit, params.gamma, noise)
        probs[i], fids[i] = ev.probs, ev.fidelity
    pred = np.array(LABELS)[np.argmax(probs, axis=1)]
    confusion = np.zeros((3, 3), dtype=int)
    for true, p in zip(data.labels, pred):
        confusion[label_index(true), label_index(p)] += 1
    n = max(len(data.labels), 1)
    return {"probs": probs, "pred": pred, "fidelity": fids,
            "accuracy": float(np.trace(confusion) / n), "mean_fidelity": float(fids.mean()),
            "confusion": confusion}


def train(X_train, y_train, X_test=None, y_test=None, config: Optional[TrainConfig] = None,
          callback: Optional[Callable[[dict], None]] = None, rate_bounds=None):
    """Run the noise-aware training loop.

    Returns ``(params, metrics)``: the final :class:`VqcParams` and one
    :class:`EpochMetrics` per epoch. ``callback`` receives a dict after every
    optimizer step (keys ``step``, ``epoch``, ``gamma``, ``lam``,
    ``batch_fidelity``, ``violated``).
    """
    config = config or TrainConfig()
    if X_train is None or len(X_train) == 0:
        raise ValueError("training set is empty")
    train_data = prepare_inputs(X_train, y_train, config, rate_bounds)
    test_data = None
    if X_test is not None and len(X_test):
        test_data = prepare_inputs(X_test, y_test, config, train_data.rate_bounds)
    ansatz = build_ansatz(config.num_layers)
    rng = np.random.default_rng(config.seed)
    params = initial_params(config, ansatz, rng)
    state = AdamState.zeros(ansatz.num_params + 1)
    lam = float(config.lambda_init)
    n = len(train_data.labels)
    metrics = []
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        totals, ces, fids = [], [], []
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            batch_fids, g_sum, gg_sum = [], np.zeros(ansatz.num_params), 0.0
            circuit = PreparedCircuit(params.thetas, ansatz)
            for i in batch:
                noise = jittered_noise(config, rng)
                ev = evaluate_sample(train_data, i, circuit, params.gamma, noise, lam,
                                     gradients=True, gamma_max=config.gamma_max)
                totals.append(ev.total(lam))
                ces.append(ev.ce)
                fids.append(ev.fidelity)
                batch_fids.append(ev.fidelity)
                if config.lambda_mode == "sample":
                    lam = lambda_update(lam, ev.fidelity, config.f_min, config.lambda_growth,
                                        config.cap)
                if config.update == "sample":
                    params = adam_step(params, ev.grad_thetas, ev.grad_gamma, state, config)
                    circuit = PreparedCircuit(params.thetas, ansatz)
                else:
                    g_sum += ev.grad_thetas
                    gg_sum += ev.grad_gamma
            batch_fid = float(np.mean(batch_fids))
            violated = batch_fid < config.f_min
            if config.lambda_mode == "batch":
                lam = lambda_update(lam, batch_fid, config.f_min, config.lambda_growth, config.cap)
            if config.update == "batch":
                params = adam_step(params, g_sum / len(batch), gg_sum / len(batch), state, config)
            step += 1
            if callback is not None:
                callback({"step": step, "epoch": epoch, "gamma": params.gamma, "lam": lam,
                          "batch_fidelity": batch_fid, "violated": violated})
        train_eval = evaluate(train_data, params, config, ansatz=ansatz)
        test_acc = evaluate(test_data, params, config, ansatz=ansatz)["accuracy"] \
            if test_data is not None else float("nan")
        metrics.append(EpochMetrics(epoch + 1, float(np.mean(totals)), float(np.mean(ces)),
                                    float(np.mean(fids)), train_eval["accuracy"], test_acc,
                                    lam, params.gamma))
        log.info("epoch %d loss=%.4f ce=%.4f fid=%.4f acc=%.3f/%.3f lam=%.3f gamma=%.4f",
                 *asdict(metrics[-1]).values())
    return params, metrics
