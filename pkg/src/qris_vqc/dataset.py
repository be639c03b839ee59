"""Synthetic vision/rate samples for link-status classification, plus file I/O.

File layout (UTF-8, one JSON value per line):

    line 1    {"format": "qris-dataset", "version": 1, ...DatasetMeta fields}
    line 2..  [label, rate, alpha, [image values ...]]

Records keep this field order. Floats are written with ``repr`` so they
round-trip exactly.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .encoding import FEATURE_DIM
from .errors import DatasetFormatError, FormatVersionError

FORMAT = "qris-dataset"
VERSION = 1
LABEL_SET = (-1, 0, 1)


@dataclass(frozen=True)
class Sample:
    image: np.ndarray
    rate: float
    label: int
    alpha: float

    def __post_init__(self):
        if self.label not in LABEL_SET:
            raise ValueError(f"label must be one of {LABEL_SET}, got {self.label!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")

    def __eq__(self, other):
        return (isinstance(other, Sample) and self.label == other.label
                and self.rate == other.rate and self.alpha == other.alpha
                and np.array_equal(self.image, other.image))


@dataclass
class DatasetMeta:
    rate_bounds: tuple = (0.0, 10.0)
    feature_dim: int = FEATURE_DIM
    counts: dict = field(default_factory=dict)
    seed: Optional[int] = None
    sigma: Optional[float] = None
    class_balance: dict = field(default_factory=dict)
    train_fraction: float = 0.7

    def to_json(self) -> dict:
        d = asdict(self)
        d["rate_bounds"] = list(self.rate_bounds)
        d["counts"] = {str(k): v for k, v in self.counts.items()}
        d["class_balance"] = {str(k): v for k, v in self.class_balance.items()}
        return d

    @classmethod
    def from_json(cls, d: dict) -> "DatasetMeta":
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        known["rate_bounds"] = tuple(float(b) for b in known.get("rate_bounds", (0.0, 10.0)))
        known["counts"] = dict(known.get("counts", {}))
        known["class_balance"] = {int(k): v for k, v in known.get("class_balance", {}).items()}
        return cls(**known)


@dataclass(frozen=True)
class ClassParams:
    """Generator knobs.

    ``sigma`` is the per-pixel Gaussian spread of the blocked/unblocked image
    blobs; the absent class uses ``absent_sigma_scale * sigma`` around the
    midpoint of the other two means. Rates are drawn uniformly from the
    per-class fraction intervals of ``rate_bounds`` (absent near zero, blocked
    low, unblocked high). Mixture weights alpha are drawn uniformly from
    per-class intervals, all of [0, 1] by default.
    """

    sigma: float = 0.05
    absent_sigma_scale: float = 3.0
    rate_bounds: tuple = (0.0, 10.0)
    rate_intervals: tuple = ((0.0, 0.1), (0.25, 0.5), (0.6, 1.0))
    alpha_intervals: tuple = ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))
    dark_level: float = 0.0
    feature_dim: int = FEATURE_DIM

    def validate(self) -> None:
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ValueError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        if self.absent_sigma_scale < 0:
            raise ValueError("absent_sigma_scale must be >= 0")
        lo, hi = self.rate_bounds
        if not lo < hi:
            raise ValueError(f"invalid rate bounds {self.rate_bounds!r}")
        for name in ("rate_intervals", "alpha_intervals"):
            iv = getattr(self, name)
            if len(iv) != 3 or any(not 0.0 <= a <= b <= 1.0 for a, b in iv):
                raise ValueError(f"{name} needs three sub-intervals of [0, 1], got {iv!r}")
        if self.feature_dim != FEATURE_DIM:
            raise ValueError(f"generator images are {FEATURE_DIM}-dimensional")


def class_means(feature_dim: int = FEATURE_DIM, dark_level: float = 0.0) -> dict:
    """Prototype 4x4 intensity maps for the blocked and unblocked classes.

    Unblocked scenes are bright on the left columns, blocked ones have the
    obstacle mass on the right; the absent prototype sits halfway between.
    """
    side = int(np.sqrt(feature_dim))
    cols = np.tile(np.arange(side), side)
    unblocked = np.where(cols < side // 2, 1.0, dark_level)
    blocked = np.where(cols < side // 2, dark_level, 1.0)
    return {1: unblocked, 0: blocked, -1: 0.5 * (unblocked + blocked)}


def generate(n: int, seed: int = 0, class_params: Optional[ClassParams] = None):
    """Draw ``n`` balanced samples; returns (samples, DatasetMeta)."""
    if int(n) != n or n < 3:
        raise ValueError(f"need at least 3 samples, got {n!r}")
    cp = class_params or ClassParams()
    cp.validate()
    rng = np.random.default_rng(seed)
    labels = np.array([LABEL_SET[i % 3] for i in range(int(n))])
    rng.shuffle(labels)
    means = class_means(cp.feature_dim, cp.dark_level)
    lo, hi = cp.rate_bounds
    samples = []
    for lab in labels:
        c = int(lab) + 1
        spread = cp.sigma * (cp.absent_sigma_scale if lab == -1 else 1.0)
        image = means[int(lab)] + spread * rng.standard_normal(cp.feature_dim)
        if not np.any(image):
            image[0] = 1e-6
        a, b = cp.rate_intervals[c]
        rate = lo + (hi - lo) * rng.uniform(a, b)
        a, b = cp.alpha_intervals[c]
        alpha = float(rng.uniform(a, b))
        samples.append(Sample(image, float(rate), int(lab), alpha))
    counts = {lab: int(np.sum(labels == lab)) for lab in LABEL_SET}
    meta = DatasetMeta(rate_bounds=(float(lo), float(hi)), feature_dim=cp.feature_dim,
                       counts={"total": int(n)}, seed=seed, sigma=cp.sigma,
                       class_balance=counts)
    return samples, meta


def split(samples, fraction: float = 0.7, seed: int = 0):
    """Stratified seeded split into (train, test)."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction!r}")
    n = len(samples)
    n_train = int(round(fraction * n))
    if n_train == 0 or n_train == n:
        raise ValueError(f"split of {n} samples at {fraction} leaves one side empty")
    rng = np.random.default_rng(seed)
    by_class = {lab: [i for i, s in enumerate(samples) if s.label == lab] for lab in LABEL_SET}
    # largest-remainder allocation so the per-class train counts add up to n_train
    quotas = {lab: fraction * len(idx) for lab, idx in by_class.items()}
    alloc = {lab: int(np.floor(q)) for lab, q in quotas.items()}
    short = n_train - sum(alloc.values())
    for lab in sorted(quotas, key=lambda k: alloc[k] - quotas[k])[:short]:
        alloc[lab] += 1
    train_idx, test_idx = [], []
    for lab in LABEL_SET:
        idx = np.array(by_class[lab], dtype=int)
        rng.shuffle(idx)
        train_idx.extend(idx[:alloc[lab]])
        test_idx.extend(idx[alloc[lab]:])
    train_idx = rng.permutation(np.array(train_idx, dtype=int))
    test_idx = rng.permutation(np.array(test_idx, dtype=int))
    return [samples[i] for i in train_idx], [samples[i] for i in test_idx]


def to_arrays(samples):
    """Stack samples into ``X = [image | rate | alpha]`` and ``y``."""
    X = np.array([np.concatenate([s.image, [s.rate, s.alpha]]) for s in samples])
    y = np.array([s.label for s in samples], dtype=int)
    return X, y


def save(path, samples, meta: DatasetMeta) -> None:
    header = {"format": FORMAT, "version": VERSION, **meta.to_json()}
    lines = [json.dumps(header, sort_keys=True)]
    for s in samples:
        lines.append(json.dumps([int(s.label), float(s.rate), float(s.alpha),
                                 [float(v) for v in s.image]]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _record_error(lineno: int, msg: str) -> DatasetFormatError:
    return DatasetFormatError(f"line {lineno}: {msg}")


def load(path):
    """Read a dataset file written by :func:`save` (or any file in that layout)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise DatasetFormatError("line 1: missing header")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise _record_error(1, f"header is not valid JSON ({exc.msg})") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT:
        raise _record_error(1, f"header field 'format' must be {FORMAT!r}")
    if header.get("version") != VERSION:
        raise FormatVersionError(
            f"line 1: unsupported version {header.get('version')!r} (expected {VERSION})")
    meta = DatasetMeta.from_json(header)
    if not text.endswith("\n"):
        raise _record_error(len(lines), "file is truncated (no final newline)")
    samples = []
    for i, line in enumerate(lines[1:]):
        lineno = i + 2
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise _record_error(lineno, f"record {i} is not valid JSON ({exc.msg})") from None
        if not isinstance(rec, list) or len(rec) != 4:
            raise _record_error(lineno, f"record {i} must be [label, rate, alpha, image]")
        label, rate, alpha, image = rec
        if not isinstance(label, int) or isinstance(label, bool) or label not in LABEL_SET:
            raise _record_error(lineno, f"record {i} field 'label' must be one of {LABEL_SET}, "
                                        f"got {label!r}")
        for name, val in (("rate", rate), ("alpha", alpha)):
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not np.isfinite(val):
                raise _record_error(lineno, f"record {i} field {name!r} must be a finite number")
        if not 0.0 <= alpha <= 1.0:
            raise _record_error(lineno, f"record {i} field 'alpha' must lie in [0, 1]")
        if (not isinstance(image, list) or len(image) != meta.feature_dim
                or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in image)):
            raise _record_error(lineno, f"record {i} field 'image' must hold "
                                        f"{meta.feature_dim} numbers")
        img = np.array(image, dtype=float)
        if not np.any(img):
            raise _record_error(lineno, f"record {i} field 'image' is all zeros")
        samples.append(Sample(img, float(rate), label, float(alpha)))
    total = meta.counts.get("total")
    if total is not None and total != len(samples):
        raise _record_error(len(lines), f"header declares {total} records, found {len(samples)}")
    return samples, meta
