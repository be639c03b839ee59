"""Noise-aware variational quantum classifier for RIS link-blockage prediction.

Dense six-qubit density-matrix simulation: hybrid image/rate encoding,
depolarizing and dephasing link noise on a direct and a surface-reflected
path, a layered R_y/R_z + CNOT-ring ansatz, and fidelity-regularized
training with shift-rule gradients.
"""
from .channels import (NoiseModel, QuantumChannel, compose, dephasing_channel,
                       depolarizing_channel, effective_state, lift_to_register)
from .dataset import ClassParams, DatasetMeta, Sample, generate, load, save, split, to_arrays
from .encoding import (HybridEncoder, HybridInput, amplitude_encode_damped,
                       encode_channel_state, hybrid_encode, normalize_image, rate_to_theta)
from .errors import ConstraintViolation, DatasetFormatError, DegenerateInputError, FormatVersionError
from .estimator import NoiseAwareVQC, check_features, check_labels
from .params_file import load_params, save_params
from .quantum import (Gate, apply_gate, fidelity, measure_probabilities, ry_gate, rz_gate,
                      tensor_product)
from .training import (EpochMetrics, LossBreakdown, TrainConfig, adam_step, cross_entropy,
                       gamma_grad, lambda_update, param_shift_grad, total_loss, train)
from .vqc import Ansatz, ForwardResult, VqcParams, build_ansatz, class_readout, forward

__version__ = "0.1.0"
