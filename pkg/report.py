# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Result files: CSV tables, JSON run metadata and SVG charts.

Every file written here is a pure function of its inputs; SVG ids are
salted with a fixed string and the creation date is omitted, so reruns
produce identical bytes.
"""

import csv
import os
from typing import Dict, List, Sequence

import matplotlib
import numpy as np

import corruption
import dataset
import toolbox

from log import log

matplotlib.use('Agg')

# pylint: disable=wrong-import-position
import matplotlib.pyplot as plt  # noqa: E402

SWEEP_HEADER = ('model', 'axis', 'value', 'mean_acc', 'std_acc', 'repeats',
                'seed')

AXIS_LABELS = {
    'noise_severity': 'noise severity (feature std)',
    'noise_level': 'noise probability n',
    'anomaly_rate': 'anomaly rate r',
}

matplotlib.rcParams['svg.hashsalt'] = 'drivesig'


class ReportError(OSError):
    """Result files cannot be written."""


def _prepare(out_dir: str) -> None:
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as err:
        raise ReportError('cannot create {}: {}'.format(out_dir, err))
    if not os.access(out_dir, os.W_OK):
        raise ReportError('{} is not writable'.format(out_dir))


def write_csv(path: str, header: Sequence[str], rows) -> str:
    with open(path, 'w', encoding='utf-8', newline='') as out:
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _save_svg(fig, path: str) -> str:
    fig.savefig(path, format='svg', metadata={'Date': None})
    plt.close(fig)
    return path


def sweep_chart(result, path: str) -> str:
    """Mean accuracy (with a std band) against the sweep axis."""
    fig, axes = plt.subplots(figsize=(7, 4.5))
    grid = np.asarray(result.grid)
    for num, name in enumerate(result.models):
        mean = result.mean[num]
        std = result.std[num]
        axes.plot(grid, mean, marker='o', label=name)
        axes.fill_between(grid, mean - std, mean + std, alpha=0.15)
    axes.set_xlabel(AXIS_LABELS.get(result.axis, result.axis))
    axes.set_ylabel('accuracy')
    axes.set_ylim(0.0, 1.05)
    axes.grid(True, alpha=0.3)
    axes.legend()
    fig.tight_layout()
    return _save_svg(fig, path)


def emit_report(result, out_dir: str,
                metadata: Dict[str, object]) -> List[str]:
    """Write sweep_<axis>.csv, sweep_<axis>.json and sweep_<axis>.svg."""
    _prepare(out_dir)
    base = os.path.join(out_dir, 'sweep_' + result.axis)
    content = dict(metadata)
    content['sweep'] = {
        'axis': result.axis,
        'grid': list(result.grid),
        'models': list(result.models),
        'repeats': result.repeats,
        'base_seed': result.base_seed,
        'seeds': list(result.seeds),
        'settings': result.settings,
    }
    paths = [
        write_csv(base + '.csv', SWEEP_HEADER, result.rows()),
        base + '.json',
        sweep_chart(result, base + '.svg'),
    ]
    toolbox.write_json(paths[1], content)
    for path in paths:
        log('wrote', path)
    return paths


def emit_metrics(report, confusion, label_names: Sequence[str], out_dir: str,
                 prefix: str = '') -> List[str]:
    """Write per-class metrics (plus a macro row) and the confusion matrix."""
    _prepare(out_dir)
    degenerate = set(report.degenerate)
    rows = []
    for k, name in enumerate(label_names):
        rows.append((name, float(report.precision[k]),
                     float(report.recall[k]), float(report.f1[k]),
                     int(confusion.counts[k].sum()), int(k in degenerate)))
    rows.append(('macro', report.macro_precision, report.macro_recall,
                 report.macro_f1, report.count, int(bool(degenerate))))
    metrics_path = write_csv(
        os.path.join(out_dir, prefix + 'metrics.csv'),
        ('class', 'precision', 'recall', 'f1', 'support', 'degenerate'), rows)
    confusion_path = write_csv(
        os.path.join(out_dir, prefix + 'confusion.csv'),
        ['true\\predicted'] + list(label_names),
        ([name] + confusion.counts[k].tolist()
         for k, name in enumerate(label_names)))
    return [metrics_path, confusion_path]


def emit_comparison(rows, out_dir: str) -> List[str]:
    """Comparison of models trained and tested on corrupted data."""
    _prepare(out_dir)
    path = write_csv(os.path.join(out_dir, 'train_corrupted.csv'),
                     ('model', 'accuracy', 'macro_precision', 'macro_recall',
                      'macro_f1'), rows)
    return [path]


def emit_search(ranked, out_dir: str) -> List[str]:
    """Ranked search table and a chart of val macro-F1 per window size."""
    _prepare(out_dir)
    table = write_csv(
        os.path.join(out_dir, 'search.csv'),
        ('rank', 'hidden_sizes', 'window', 'val_macro_f1', 'epochs',
         'train_windows'),
        ((num + 1, '-'.join(str(h) for h in row.hidden_sizes),
          row.window_length, row.val_f1, row.epochs, row.train_windows)
         for num, row in enumerate(ranked)))

    windows = sorted({row.window_length for row in ranked})
    hidden = []
    for row in ranked:
        if row.hidden_sizes not in hidden:
            hidden.append(row.hidden_sizes)
    hidden.sort()
    scores = {(r.hidden_sizes, r.window_length): r.val_f1 for r in ranked}
    fig, axes = plt.subplots(figsize=(7, 4.5))
    width = 0.8 / len(hidden)
    positions = np.arange(len(windows))
    for num, sizes in enumerate(hidden):
        axes.bar(positions + num * width,
                 [scores.get((sizes, w), 0.0) for w in windows],
                 width,
                 label='-'.join(str(h) for h in sizes))
    axes.set_xticks(positions + 0.4 - width / 2)
    axes.set_xticklabels([str(w) for w in windows])
    axes.set_xlabel('window length')
    axes.set_ylabel('validation macro-F1')
    axes.set_ylim(0.0, 1.05)
    axes.legend(title='hidden sizes')
    fig.tight_layout()
    chart = _save_svg(fig, os.path.join(out_dir, 'search.svg'))
    return [table, chart]


def plot_corruption(table: dataset.FrameTable,
                    feature: str,
                    noise_specs: Sequence[corruption.NoiseSpec],
                    anomaly_specs: Sequence[corruption.AnomalySpec],
                    feature_std: np.ndarray,
                    out_path: str,
                    rows: int = 200) -> str:
    """One sensor trace, clean and under every corruption setting."""
    if feature not in table.feature_names:
        raise dataset.MissingColumnError('no feature named {!r}'.format(
            feature))
    column = table.feature_names.index(feature)
    head = table.take(np.arange(min(rows, table.n_rows)))
    steps = np.arange(head.n_rows)
    fig, axes = plt.subplots(figsize=(9, 4.5))
    axes.plot(steps, head.values[:, column], color='black', linewidth=1.2,
              label='clean')
    for spec in noise_specs:
        dirty = corruption.inject_noise(head, spec, feature_std)
        axes.plot(steps, dirty.values[:, column], linewidth=0.8, alpha=0.8,
                  label='noise n={:g} s={:g}'.format(spec.level_n,
                                                     spec.severity_s))
    for spec in anomaly_specs:
        dirty = corruption.inject_anomaly(head, spec)
        axes.plot(steps, dirty.values[:, column], linewidth=0.8, alpha=0.8,
                  label='anomaly r={:g} p={:g}'.format(
                      spec.rate_r, spec.affected_fraction))
    axes.set_xlabel('time step')
    axes.set_ylabel(feature)
    axes.legend(fontsize='small')
    fig.tight_layout()
    directory = os.path.dirname(out_path)
    if directory:
        _prepare(directory)
    return _save_svg(fig, out_path)
