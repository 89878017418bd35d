# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Model evaluation, robustness sweeps and architecture search.

All models are scored on windows: the LSTM classifies a window directly,
per-row baselines classify every row and vote.  Sweep repeats are
independent and may run in parallel; results are always reduced in
(grid point, repeat) order.
"""

from typing import (Callable, Dict, List, NamedTuple, Optional, Sequence,
                    Tuple)

import numpy as np

import baselines
import corruption
import dataset
import lstm
import metrics
import toolbox

from log import log
from numerics import ShapeError

MODEL_KINDS = ('lstm', 'tree', 'forest', 'fcnn')

DEFAULT_SEVERITIES = tuple(0.25 * k for k in range(9))

DEFAULT_LEVELS = tuple(0.1 * k for k in range(11))

DEFAULT_RATES = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.65)

DEFAULT_REPEATS = 10

SEARCH_EPOCHS = 25

SEARCH_WINDOWS = (4, 8, 16, 32, 64, 120)


class EvaluationError(ValueError):
    """Evaluation request cannot be carried out."""


class Evaluation(NamedTuple):
    report: metrics.MetricsReport
    confusion: metrics.ConfusionMatrix
    predictions: np.ndarray


def evaluate(model, windows: dataset.WindowSet) -> Evaluation:
    """Score any trained model kind on a window set."""
    if windows.count == 0:
        raise EvaluationError('no windows to evaluate on')
    if tuple(model.label_names) != tuple(windows.label_names):
        raise EvaluationError('model and data disagree on driver labels')
    try:
        pred, _ = model.predict_windows(windows.windows)
    except ShapeError as err:
        raise EvaluationError(str(err)) from err
    confusion = metrics.confusion_matrix(windows.labels, pred,
                                         len(windows.label_names))
    return Evaluation(metrics.report_from_confusion(confusion), confusion,
                      pred)


def accuracy(model, windows: dataset.WindowSet) -> float:
    pred, _ = model.predict_windows(windows.windows)
    return float(np.mean(pred == windows.labels))


class TrainSettings(NamedTuple):
    model: lstm.ModelConfig
    forest: baselines.ForestConfig = baselines.ForestConfig()
    tree_max_depth: Optional[int] = None
    seed: int = 0
    jobs: int = 1


def training_rows(windows: dataset.WindowSet):
    """Distinct rows covered by windows, with their labels."""
    flat, labels = windows.rows()
    _, first = np.unique(windows.row_ids.reshape(-1), return_index=True)
    first = np.sort(first)
    return flat[first], labels[first]


def train_model(kind: str, train_windows: dataset.WindowSet,
                val_windows: dataset.WindowSet, settings: TrainSettings):
    """Train one model kind; returns (model, history or [])."""
    if kind not in MODEL_KINDS:
        raise EvaluationError('unknown model kind: {}'.format(kind))
    if train_windows.count == 0 or val_windows.count == 0:
        raise lstm.EmptyDatasetError('training and validation windows are '
                                     'required')
    if kind == 'lstm':
        return lstm.train(train_windows, val_windows, settings.model,
                          settings.seed)
    rows, labels = training_rows(train_windows)
    names = train_windows.label_names
    if kind == 'tree':
        return baselines.train_tree(rows, labels, names,
                                    max_depth=settings.tree_max_depth), []
    if kind == 'forest':
        return baselines.train_forest(rows, labels, names, settings.forest,
                                      settings.seed, settings.jobs), []
    return baselines.train_fcnn(rows, labels, val_windows, settings.model,
                                settings.seed)


class SweepResult(NamedTuple):
    axis: str
    grid: Tuple[float, ...]
    models: Tuple[str, ...]
    mean: np.ndarray  # (models, grid)
    std: np.ndarray
    repeats: int
    base_seed: int
    seeds: Tuple[int, ...]
    settings: Dict[str, object]

    def rows(self):
        """(model, axis, value, mean, std, repeats, seed) per grid point."""
        for m, name in enumerate(self.models):
            for g, value in enumerate(self.grid):
                yield (name, self.axis, value, float(self.mean[m, g]),
                       float(self.std[m, g]), self.repeats, self.base_seed)


Corrupter = Callable[[dataset.WindowSet, float, int], dataset.WindowSet]


def in_raw_units(corrupt: Corrupter,
                 scaler: Optional[dataset.Scaler]) -> Corrupter:
    """Wrap corrupt so that it acts on unscaled sensor values."""
    if scaler is None:
        return corrupt

    def wrapped(windows, value, seed):
        raw = windows.with_windows(
            dataset.unscale_values(scaler, windows.windows))
        dirty = corrupt(raw, value, seed)
        if dirty.windows is raw.windows:
            return windows
        return dirty.with_windows(
            dataset.scale_values(scaler, dirty.windows))

    return wrapped


def sweep(models: Dict[str, object],
          windows: dataset.WindowSet,
          axis: str,
          grid: Sequence[float],
          corrupt: Corrupter,
          repeats: int = DEFAULT_REPEATS,
          base_seed: int = 0,
          jobs: int = 1,
          settings: Optional[Dict[str, object]] = None) -> SweepResult:
    """Accuracy of every model on freshly corrupted copies of windows.

    Repeat r of every grid point uses seed base_seed + r.
    """
    grid = tuple(float(v) for v in grid)
    if not grid:
        raise EvaluationError('empty sweep grid')
    if repeats < 1:
        raise EvaluationError('need at least one repeat')
    if not models:
        raise EvaluationError('no models to sweep')
    if windows.count == 0:
        raise EvaluationError('no windows to evaluate on')
    names = tuple(models)
    tasks = [(value, rep) for value in grid for rep in range(repeats)]

    def run(task):
        value, rep = task
        dirty = corrupt(windows, value, base_seed + rep)
        return [accuracy(models[name], dirty) for name in names]

    scores = np.array(toolbox.ordered_map(run, tasks, jobs))
    scores = scores.reshape(len(grid), repeats, len(names))
    mean = scores.mean(axis=1).T
    std = scores.std(axis=1).T
    for g, value in enumerate(grid):
        log('{} = {:g}: {}'.format(
            axis, value, ', '.join('{} {:.4f}'.format(n, mean[m, g])
                                   for m, n in enumerate(names))))
    return SweepResult(axis, grid, names, mean, std, repeats, base_seed,
                       tuple(base_seed + r for r in range(repeats)),
                       dict(settings or {}))


def sweep_noise(models: Dict[str, object],
                windows: dataset.WindowSet,
                feature_std: np.ndarray,
                severities: Sequence[float] = DEFAULT_SEVERITIES,
                level_n: float = 1.0,
                repeats: int = DEFAULT_REPEATS,
                base_seed: int = 0,
                jobs: int = 1,
                raw_scaler: Optional[dataset.Scaler] = None) -> SweepResult:
    """Noise severity sweep (in units of clean feature std) at level n."""

    def corrupt(data, value, seed):
        spec = corruption.NoiseSpec(level_n, value, seed)
        if spec.is_identity():
            return data
        return corruption.inject_noise(data, spec, feature_std)

    return sweep(models, windows, 'noise_severity', severities,
                 in_raw_units(corrupt, raw_scaler), repeats, base_seed, jobs,
                 {'level_n': level_n, 'raw': raw_scaler is not None})


def sweep_noise_level(models: Dict[str, object],
                      windows: dataset.WindowSet,
                      feature_std: np.ndarray,
                      levels: Sequence[float] = DEFAULT_LEVELS,
                      severity_s: float = 1.0,
                      repeats: int = DEFAULT_REPEATS,
                      base_seed: int = 0,
                      jobs: int = 1,
                      raw_scaler: Optional[dataset.Scaler] = None
                      ) -> SweepResult:
    """Noise probability sweep at fixed severity."""

    def corrupt(data, value, seed):
        spec = corruption.NoiseSpec(value, severity_s, seed)
        if spec.is_identity():
            return data
        return corruption.inject_noise(data, spec, feature_std)

    return sweep(models, windows, 'noise_level', levels,
                 in_raw_units(corrupt, raw_scaler), repeats, base_seed, jobs,
                 {'severity_s': severity_s, 'raw': raw_scaler is not None})


def sweep_anomaly(models: Dict[str, object],
                  windows: dataset.WindowSet,
                  rates: Sequence[float] = DEFAULT_RATES,
                  affected_fraction: float = corruption.
                  DEFAULT_AFFECTED_FRACTION,
                  repeats: int = DEFAULT_REPEATS,
                  base_seed: int = 0,
                  jobs: int = 1,
                  per_row: bool = False,
                  raw_scaler: Optional[dataset.Scaler] = None) -> SweepResult:
    """Anomaly rate sweep with a fixed affected fraction."""

    def corrupt(data, value, seed):
        spec = corruption.AnomalySpec(value, affected_fraction, seed, per_row)
        if spec.is_identity():
            return data
        return corruption.inject_anomaly(data, spec)

    return sweep(models, windows, 'anomaly_rate', rates,
                 in_raw_units(corrupt, raw_scaler), repeats, base_seed, jobs, {
                     'affected_fraction': affected_fraction,
                     'per_row': per_row,
                     'raw': raw_scaler is not None
                 })


class ComparisonRow(NamedTuple):
    model: str
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float


def train_on_corrupted(kinds: Sequence[str], train_windows: dataset.WindowSet,
                       val_windows: dataset.WindowSet,
                       test_windows: dataset.WindowSet,
                       spec: corruption.NoiseSpec, feature_std: np.ndarray,
                       settings: TrainSettings):
    """Train and test every model kind on noise-corrupted data.

    Training, validation and test copies are corrupted once, with seeds
    spec.seed, spec.seed + 1 and spec.seed + 2.
    """
    if not kinds:
        raise EvaluationError('no model kinds requested')
    spec.validate()
    dirty = []
    for offset, part in enumerate((train_windows, val_windows, test_windows)):
        dirty.append(
            corruption.inject_noise(part, spec._replace(seed=spec.seed +
                                                        offset), feature_std))
    models = {}
    rows = []
    for kind in kinds:
        model, _ = train_model(kind, dirty[0], dirty[1], settings)
        result = evaluate(model, dirty[2]).report
        models[kind] = model
        rows.append(
            ComparisonRow(kind, result.accuracy, result.macro_precision,
                          result.macro_recall, result.macro_f1))
        log('{} trained on noisy data: accuracy {:.4f}, macro-F1 {:.4f}'
            .format(kind, result.accuracy, result.macro_f1))
    return models, rows


class SearchRow(NamedTuple):
    hidden_sizes: Tuple[int, ...]
    window_length: int
    val_f1: float
    epochs: int
    train_windows: int


def grid_search(hidden_grid: Sequence[Sequence[int]],
                window_grid: Sequence[int],
                train_table: dataset.FrameTable,
                val_table: dataset.FrameTable,
                config: lstm.ModelConfig,
                seed: int = 0,
                overlap: float = dataset.DEFAULT_OVERLAP,
                epochs: int = SEARCH_EPOCHS) -> List[SearchRow]:
    """Train one LSTM per (hidden sizes, window) pair; rank by val F1.

    Configurations whose windows do not fit the data score 0.  Equal
    scores keep grid order.
    """
    if not hidden_grid or not window_grid:
        raise EvaluationError('empty search grid')
    names = train_table.driver_names()
    results = []
    for hidden in hidden_grid:
        for window in window_grid:
            train = dataset.make_windows(train_table, window, overlap, names)
            val = dataset.make_windows(val_table, window, overlap, names)
            if train.count == 0 or val.count == 0:
                log('search: window {} does not fit the data'.format(window))
                results.append(SearchRow(tuple(hidden), window, 0.0, 0,
                                         train.count))
                continue
            cfg = config._replace(hidden_sizes=tuple(hidden),
                                  max_epochs=epochs)
            model, history = lstm.train(train, val, cfg, seed)
            score = evaluate(model, val).report.macro_f1
            log('search: hidden {} window {}: val macro-F1 {:.4f}'.format(
                list(hidden), window, score))
            results.append(SearchRow(tuple(hidden), window, score,
                                     len(history), train.count))
    order = sorted(range(len(results)), key=lambda i: -results[i].val_f1)
    return [results[i] for i in order]


def retrain_best(ranked: Sequence[SearchRow],
                 train_table: dataset.FrameTable,
                 val_table: dataset.FrameTable,
                 config: lstm.ModelConfig,
                 seed: int = 0,
                 overlap: float = dataset.DEFAULT_OVERLAP):
    """Train the top-ranked search row again with the full epoch budget.

    Returns (model, history, windows) where windows are the training and
    validation WindowSets of the winning length.
    """
    names = train_table.driver_names()
    for best in ranked:
        train = dataset.make_windows(train_table, best.window_length,
                                     overlap, names)
        val = dataset.make_windows(val_table, best.window_length, overlap,
                                   names)
        if train.count and val.count:
            break
    else:
        raise EvaluationError('no searched window length fits the data')
    cfg = config._replace(hidden_sizes=tuple(best.hidden_sizes))
    log('search: retraining hidden {} window {} for up to {} epochs'.format(
        list(best.hidden_sizes), best.window_length, cfg.max_epochs))
    model, history = lstm.train(train, val, cfg, seed)
    return model, history, (train, val)
