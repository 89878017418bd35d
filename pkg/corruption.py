# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Sensor noise and anomaly injection.

Noise: each cell is hit independently with probability n (a uniform draw
u < n), and a hit cell X becomes X + g with g ~ N(0, (s * sigma_i)^2),
sigma_i being the clean training standard deviation of feature i.

Anomalies: each cell (or, in per-row mode, each row) is selected with
probability equal to the affected fraction, and a selected cell X becomes
X * (1 + r).

Inputs are never modified.  Window sets are corrupted through their source
rows, so a reading shared by two overlapping windows is corrupted once and
looks the same in both.
"""

from typing import Callable, NamedTuple, Union

import numpy as np

from dataset import FrameTable, WindowSet
from numerics import SeededRng

DEFAULT_AFFECTED_FRACTION = 0.40

Corruptible = Union[np.ndarray, FrameTable, WindowSet]


class CorruptionError(ValueError):
    """Invalid corruption request."""


class NoiseSpec(NamedTuple):
    level_n: float
    severity_s: float
    seed: int = 0

    def validate(self) -> 'NoiseSpec':
        if not 0.0 <= self.level_n <= 1.0:
            raise CorruptionError('noise level must lie in [0, 1]')
        if not 0.0 <= self.severity_s <= 2.0:
            raise CorruptionError('noise severity must lie in [0, 2]')
        return self

    def is_identity(self) -> bool:
        return self.level_n == 0.0 or self.severity_s == 0.0


class AnomalySpec(NamedTuple):
    rate_r: float
    affected_fraction: float = DEFAULT_AFFECTED_FRACTION
    seed: int = 0
    per_row: bool = False

    def validate(self) -> 'AnomalySpec':
        if not 0.0 <= self.affected_fraction <= 1.0:
            raise CorruptionError('affected fraction must lie in [0, 1]')
        if not 0.0 <= self.rate_r <= 1.0:
            raise CorruptionError('anomaly rate must lie in [0, 1]')
        return self

    def is_identity(self) -> bool:
        return self.rate_r == 0.0 or self.affected_fraction == 0.0


def feature_stats(data: Corruptible) -> np.ndarray:
    """Per-feature (population) standard deviation of clean data."""
    rows = _source_rows(data)
    if rows.shape[0] == 0:
        raise CorruptionError('cannot compute statistics of empty data')
    return rows.std(axis=0)


def _source_rows(data: Corruptible) -> np.ndarray:
    if isinstance(data, WindowSet):
        flat = data.windows.reshape(-1, data.n_features)
        _, first = np.unique(data.row_ids.reshape(-1), return_index=True)
        return flat[first]
    if isinstance(data, FrameTable):
        return data.values
    arr = np.asarray(data, dtype=np.float64)
    return arr.reshape(-1, arr.shape[-1])


def _apply(data: Corruptible, func: Callable[[np.ndarray], np.ndarray]):
    if isinstance(data, WindowSet):
        ids = data.row_ids.reshape(-1)
        unique, first = np.unique(ids, return_index=True)
        flat = data.windows.reshape(-1, data.n_features)
        corrupted = func(flat[first])
        rebuilt = corrupted[np.searchsorted(unique, ids)]
        return data.with_windows(rebuilt.reshape(data.windows.shape))
    if isinstance(data, FrameTable):
        return data.with_values(func(data.values))
    arr = np.asarray(data, dtype=np.float64)
    return func(arr.reshape(-1, arr.shape[-1])).reshape(arr.shape)


def _copy(data: Corruptible):
    return _apply(data, np.copy)


def inject_noise(data: Corruptible, spec: NoiseSpec,
                 feature_std: np.ndarray) -> Corruptible:
    """Corrupted copy with white Gaussian noise."""
    spec.validate()
    feature_std = np.asarray(feature_std, dtype=np.float64)
    n_features = _source_rows(data).shape[1]
    if feature_std.shape != (n_features, ):
        raise CorruptionError('need statistics for {} features, got {}'.format(
            n_features, feature_std.size))
    if spec.is_identity():
        return _copy(data)
    rng = SeededRng(spec.seed)

    def corrupt(rows):
        hit = rng.bernoulli(spec.level_n, rows.shape)
        noise = rng.normal(rows.shape) * (spec.severity_s * feature_std)
        out = rows.copy()
        out[hit] += noise[hit]
        return out

    return _apply(data, corrupt)


def inject_anomaly(data: Corruptible, spec: AnomalySpec) -> Corruptible:
    """Corrupted copy with multiplicative anomalies X * (1 + r)."""
    spec.validate()
    if spec.is_identity():
        return _copy(data)
    rng = SeededRng(spec.seed)

    def corrupt(rows):
        if spec.per_row:
            hit = np.repeat(rng.bernoulli(spec.affected_fraction,
                                          (rows.shape[0], 1)),
                            rows.shape[1],
                            axis=1)
        else:
            hit = rng.bernoulli(spec.affected_fraction, rows.shape)
        out = rows.copy()
        out[hit] *= 1.0 + spec.rate_r
        return out

    return _apply(data, corrupt)
