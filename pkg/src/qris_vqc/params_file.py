"""Trained-parameter files.

Plain text, one ``key = value`` entry per line, in this order::

    qris-params 1
    num_layers = 2
    mode = hybrid
    rate_min = 0.0
    rate_max = 10.0
    <config entries ...>
    gamma = 0.6461252674700114
    theta[0] = -0.3289...
    ...

Floats are written with ``repr`` so they read back bit for bit. Unknown
keys are rejected; the number of ``theta`` lines must match ``num_layers``.
"""
from __future__ import annotations

import math
import re
from pathlib import Path

from .errors import DatasetFormatError, FormatVersionError
from .vqc import VqcParams, build_ansatz

MAGIC = "qris-params"
VERSION = 1
# config entries persisted next to the angles, with their parsers
CONFIG_KEYS = {
    "num_layers": int,
    "mode": str,
    "rate_min": float,
    "rate_max": float,
    "p": float,
    "q": float,
    "alpha": float,
    "qris_phase": float,
    "noise_scope": str,
    "gamma_max": float,
}
_THETA = re.compile(r"theta\[(\d+)\]$")


def _fmt(value) -> str:
    return repr(float(value)) if isinstance(value, float) else str(value)


def save_params(path, params: VqcParams, config: dict) -> None:
    """Write ``params`` plus the config entries needed to evaluate them."""
    missing = set(CONFIG_KEYS) - set(config)
    if missing:
        raise ValueError(f"params file needs config entries {sorted(missing)}")
    lines = [f"{MAGIC} {VERSION}"]
    lines += [f"{k} = {_fmt(CONFIG_KEYS[k](config[k]))}" for k in CONFIG_KEYS]
    lines.append(f"gamma = {float(params.gamma)!r}")
    lines += [f"theta[{i}] = {float(t)!r}" for i, t in enumerate(params.thetas)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_params(path):
    """Return ``(VqcParams, config dict)``; malformed input raises DatasetFormatError."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DatasetFormatError("line 1: empty params file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != MAGIC:
        raise DatasetFormatError(f"line 1: expected '{MAGIC} <version>' header")
    if head[1] != str(VERSION):
        raise FormatVersionError(f"line 1: unsupported params version {head[1]!r} "
                                 f"(expected {VERSION})")
    config, gamma, thetas = {}, None, {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        key, sep, raw = (part.strip() for part in line.partition("="))
        if not sep:
            raise DatasetFormatError(f"line {lineno}: expected 'key = value'")
        try:
            if key in CONFIG_KEYS:
                config[key] = CONFIG_KEYS[key](raw)
            elif key == "gamma":
                gamma = float(raw)
            elif _THETA.match(key):
                thetas[int(_THETA.match(key).group(1))] = float(raw)
            else:
                raise DatasetFormatError(f"line {lineno}: unknown field {key!r}")
        except ValueError as exc:
            if isinstance(exc, DatasetFormatError):
                raise
            raise DatasetFormatError(f"line {lineno}: field {key!r} has bad value {raw!r}") \
                from None
    missing = sorted(set(CONFIG_KEYS) - set(config))
    if missing or gamma is None:
        raise DatasetFormatError(f"line {len(lines)}: missing fields "
                                 f"{missing + ([] if gamma is not None else ['gamma'])}")
    expected = build_ansatz(config["num_layers"]).num_params
    if sorted(thetas) != list(range(expected)):
        raise DatasetFormatError(f"line {len(lines)}: {len(thetas)} theta entries do not "
                                 f"match a {config['num_layers']}-layer ansatz "
                                 f"({expected} angles)")
    values = [thetas[i] for i in range(expected)] + [gamma]
    if not all(math.isfinite(v) for v in values):
        raise DatasetFormatError("params file holds non-finite values")
    return VqcParams(gamma, values[:-1]), config
