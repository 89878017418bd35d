#!/usr/bin/python3

# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
drivesig: identify drivers from windows of OBD-II telemetry.

Exit status: 0 on success, 1 on usage or settings errors, 2 on data,
model file or corruption errors, 3 when training fails or a computation
turns non-finite, 4 on internal errors.
"""

import argparse
import os
import sys
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

import baselines
import corruption
import dataset
import evaluation
import lstm
import metrics
import modelfile
import report
import settings
import synth
import toolbox

from log import log, log_err
from numerics import NumericError, SeededRng, ShapeError
from version import VERSION

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3
EXIT_INTERNAL = 4

COMMANDS = ('synth', 'prepare', 'train', 'evaluate', 'sweep-noise',
            'sweep-anomaly', 'train-corrupted', 'search', 'predict',
            'preview')

DATA_ERRORS = (dataset.DataError, modelfile.ModelFileError,
               corruption.CorruptionError, evaluation.EvaluationError,
               metrics.MetricsError, synth.ProfileError, report.ReportError,
               ShapeError, OSError)

TRAINING_ERRORS = (lstm.TrainingError, baselines.BaselineError, NumericError)

PREVIEW_SEVERITIES = (0.5, 1.0, 2.0)


class UsageError(Exception):
    """Command line cannot be interpreted."""


class ArgumentParser(argparse.ArgumentParser):
    """ArgumentParser reporting errors by exception instead of exiting."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=79)


def int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in text.replace(' ', '').split(',') if t]
    except ValueError:
        raise argparse.ArgumentTypeError('not a list of integers: ' + text)


def float_list(text: str) -> List[float]:
    try:
        return [float(t) for t in text.replace(' ', '').split(',') if t]
    except ValueError:
        raise argparse.ArgumentTypeError('not a list of numbers: ' + text)


def hidden_grid(text: str) -> List[List[int]]:
    """'160-200,64-128' -> [[160, 200], [64, 128]]"""
    try:
        return [[int(h) for h in item.split('-')]
                for item in text.replace(' ', '').split(',') if item]
    except ValueError:
        raise argparse.ArgumentTypeError('not a list of hidden sizes: ' +
                                         text)


def common_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group('run options')
    group.add_argument('--config', metavar='FILE',
                       help='settings file (default: {})'.format(
                           settings.SETTINGS_FILE))
    group.add_argument('--seed', type=int, metavar='N',
                       help='base seed of every random stream')
    group.add_argument('--jobs', type=int, metavar='N',
                       help='worker threads (1: serial)')
    group.add_argument('--out-dir', metavar='DIR', default='.',
                       help='directory for result files (default: .)')
    return parser


def data_options(multiple: bool = False) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group('data options')
    source = group.add_mutually_exclusive_group(required=True)
    if multiple:
        source.add_argument('--data', metavar='CSV', action='append',
                            help='telemetry log; repeat for several datasets')
    else:
        source.add_argument('--data', metavar='CSV', help='telemetry log')
    source.add_argument('--cache', metavar='DIR',
                        help='directory written by "drivesig prepare"')
    group.add_argument('--label-col', metavar='NAME')
    group.add_argument('--trip-col', metavar='NAME')
    group.add_argument('--window', type=int, metavar='N')
    group.add_argument('--overlap', type=float, metavar='FRACTION')
    group.add_argument('--split', dest='split_mode',
                       choices=settings.SPLIT_MODES)
    group.add_argument('--train-fraction', type=float, metavar='FRACTION')
    group.add_argument('--val-fraction', type=float, metavar='FRACTION')
    group.add_argument('--test-fraction', type=float, metavar='FRACTION')
    group.add_argument('--scale-globally', action='store_true', default=None,
                       help='fit scaling on the whole table')
    return parser


def model_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group('model options')
    group.add_argument('--hidden', dest='hidden_sizes', type=int_list,
                       metavar='N,N', help='hidden units per layer')
    group.add_argument('--learning-rate', type=float, metavar='RATE')
    group.add_argument('--batch-size', type=int, metavar='N')
    group.add_argument('--max-epochs', type=int, metavar='N')
    group.add_argument('--patience', type=int, metavar='N')
    group.add_argument('--clip-norm', type=float, metavar='NORM')
    group.add_argument('--n-trees', type=int, metavar='N')
    group.add_argument('--features-per-split', type=int, metavar='N')
    group.add_argument('--max-depth', type=int, metavar='N')
    return parser


def corruption_options() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group('corruption options')
    group.add_argument('--repeats', type=int, metavar='N')
    group.add_argument('--level', type=float, metavar='N',
                       help='probability of a cell being hit by noise')
    group.add_argument('--severity', type=float, metavar='S',
                       help='noise std in units of clean feature std')
    group.add_argument('--affected-fraction', type=float, metavar='FRACTION')
    group.add_argument('--corrupt-raw', action='store_true', default=None,
                       help='corrupt unscaled sensor values')
    group.add_argument('--per-row-anomaly', action='store_true', default=None,
                       help='anomalies hit whole rows')
    return parser


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='drivesig',
                            description='Driver identification from OBD-II '
                            'telemetry windows.',
                            formatter_class=_formatter)
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + VERSION)
    commands = parser.add_subparsers(dest='command', metavar='COMMAND')
    commands.required = True
    common = common_options()

    def add(name, help_text, *parents):
        return commands.add_parser(name,
                                   help=help_text,
                                   parents=[common, *parents],
                                   formatter_class=_formatter)

    cmd = add('synth', 'generate a synthetic multi-driver log')
    cmd.add_argument('--out', metavar='CSV', required=True)
    cmd.add_argument('--drivers', type=int, default=synth.DEFAULT_DRIVERS,
                     metavar='N')
    cmd.add_argument('--trips', type=int, default=synth.DEFAULT_TRIPS,
                     metavar='N')
    cmd.add_argument('--rows', type=int, default=synth.DEFAULT_ROWS,
                     metavar='N', help='rows per trip')
    cmd.add_argument('--features', type=int,
                     default=len(synth.FEATURE_NAMES), metavar='N')
    cmd.add_argument('--separated', action='store_true',
                     help='two drivers with far apart cruising means')

    add('prepare', 'load, split and scale a log; write a cache',
        data_options())

    cmd = add('train', 'train one model', data_options(), model_options())
    cmd.add_argument('--model', required=True, dest='kind',
                     choices=evaluation.MODEL_KINDS)
    cmd.add_argument('--out', metavar='FILE',
                     help='model file (default: OUT_DIR/KIND.model)')

    cmd = add('evaluate', 'score a model on the test split',
              data_options(multiple=True))
    cmd.add_argument('--model', metavar='FILE', required=True)

    cmd = add('sweep-noise', 'accuracy under increasing sensor noise',
              data_options(), corruption_options())
    cmd.add_argument('--model', metavar='FILE', action='append',
                     required=True, dest='models')
    cmd.add_argument('--axis', choices=('severity', 'level'),
                     default='severity')
    cmd.add_argument('--grid', type=float_list, metavar='X,X')

    cmd = add('sweep-anomaly', 'accuracy under increasing anomaly rate',
              data_options(), corruption_options())
    cmd.add_argument('--model', metavar='FILE', action='append',
                     required=True, dest='models')
    cmd.add_argument('--grid', type=float_list, metavar='X,X')

    cmd = add('train-corrupted', 'train and test on noisy data',
              data_options(), model_options(), corruption_options())
    cmd.add_argument('--models', dest='kinds', metavar='KIND,KIND',
                     default=','.join(evaluation.MODEL_KINDS))

    cmd = add('search', 'grid search over hidden sizes and window lengths',
              data_options(), model_options())
    cmd.add_argument('--hidden-grid', type=hidden_grid, metavar='N-N,N-N')
    cmd.add_argument('--windows', type=int_list, metavar='N,N',
                     default=list(evaluation.SEARCH_WINDOWS))
    cmd.add_argument('--search-epochs', type=int, metavar='N',
                     default=evaluation.SEARCH_EPOCHS)

    cmd = add('predict', 'classify one window cut out of a log')
    cmd.add_argument('--model', metavar='FILE', required=True)
    cmd.add_argument('--data', metavar='CSV', required=True)
    cmd.add_argument('--start', type=int, default=0, metavar='ROW',
                     help='first row of the window (default: 0)')
    cmd.add_argument('--label-col', metavar='NAME')
    cmd.add_argument('--window', type=int, metavar='N',
                     help='window length for per-row models')

    cmd = add('preview', 'chart one sensor under noise and anomalies',
              data_options(), corruption_options())
    cmd.add_argument('--feature', metavar='NAME', required=True)
    cmd.add_argument('--rows', type=int, default=200, metavar='N')
    return parser


def run_config(args) -> settings.RunConfig:
    if args.config is None:
        settings.init_settings_file()
    store = settings.Settings(args.config)
    overrides = {
        field: getattr(args, field)
        for field in settings.SCHEMA if hasattr(args, field)
    }
    return store.run_config(overrides)


def split_spec(cfg: settings.RunConfig) -> dataset.SplitSpec:
    return dataset.SplitSpec(cfg.train_fraction, cfg.val_fraction,
                             cfg.test_fraction).validate()


def model_config(cfg: settings.RunConfig, num_classes: int = 2):
    return lstm.ModelConfig(num_classes=num_classes,
                            hidden_sizes=tuple(cfg.hidden_sizes),
                            window_length=cfg.window,
                            learning_rate=cfg.learning_rate,
                            batch_size=cfg.batch_size,
                            max_epochs=cfg.max_epochs,
                            early_stop_patience=cfg.patience,
                            clip_norm=cfg.clip_norm)


def train_settings(cfg: settings.RunConfig) -> evaluation.TrainSettings:
    forest = baselines.ForestConfig(n_trees=cfg.n_trees,
                                    features_per_split=cfg.features_per_split,
                                    bootstrap=cfg.bootstrap,
                                    max_depth=cfg.max_depth)
    return evaluation.TrainSettings(model=model_config(cfg),
                                    forest=forest,
                                    tree_max_depth=cfg.max_depth,
                                    seed=cfg.seed,
                                    jobs=cfg.jobs)


class Prepared(NamedTuple):
    train: dataset.WindowSet
    val: dataset.WindowSet
    test: dataset.WindowSet
    tables: Optional[Dict[str, dataset.FrameTable]]
    scaler: dataset.Scaler
    feature_names: Sequence[str]
    feature_std: np.ndarray
    raw_std: np.ndarray
    inputs: List[str]


def _from_tables(parts: Dict[str, dataset.FrameTable], scaler, window: int,
                 cfg: settings.RunConfig, label_names, inputs) -> Prepared:
    names = label_names or parts['train'].driver_names()
    windows = [
        dataset.make_windows(parts[name], window, cfg.overlap, names)
        for name in dataset.CACHE_PARTS
    ]
    return _finish(windows, parts, scaler, cfg, inputs)


def _finish(windows, parts, scaler, cfg, inputs) -> Prepared:
    train, val, test = windows
    for name, part in zip(dataset.CACHE_PARTS, windows):
        if part.count == 0:
            raise dataset.EmptySubsetError(
                'no {} windows of length {}; the {} split is too short'.format(
                    name, train.window_length, name))
    raw_train = train.with_windows(dataset.unscale_values(
        scaler, train.windows))
    log('windows: {} train, {} val, {} test ({} split)'.format(
        train.count, val.count, test.count, cfg.split_mode))
    return Prepared(train, val, test, parts, scaler,
                    list(parts['train'].feature_names),
                    corruption.feature_stats(train),
                    corruption.feature_stats(raw_train), inputs)


def prepare_data(args,
                 cfg: settings.RunConfig,
                 data_path: Optional[str] = None,
                 model=None) -> Prepared:
    """Load, split, scale and window data for a command.

    A model passed in dictates the scaler, the feature order, the driver
    labels and (for the LSTM) the window length.
    """
    window = cfg.window
    label_names = None
    scaler = None
    feature_names = None
    if model is not None:
        label_names = model.label_names
        scaler = model.scaler
        feature_names = model.feature_names
        if model.kind == 'lstm':
            window = model.config.window_length

    cache = getattr(args, 'cache', None)
    if cache:
        parts, cached_scaler, _ = dataset.load_cache(cache)
        if scaler is None:
            scaler = cached_scaler
        else:
            parts = {
                name: dataset.inverse_transform(cached_scaler, table)
                for name, table in parts.items()
            }
            if feature_names:
                parts = {
                    name: dataset.select_features(table, feature_names)
                    for name, table in parts.items()
                }
            parts = {
                name: dataset.transform(scaler, table)
                for name, table in parts.items()
            }
        return _from_tables(parts, scaler, window, cfg, label_names,
                            [os.path.join(cache, dataset.CACHE_META)])

    path = data_path or args.data
    table = dataset.load_csv(path, cfg.label_col, cfg.trip_col)
    if feature_names:
        table = dataset.select_features(table, feature_names)
    spec = split_spec(cfg)

    if cfg.split_mode == 'random':
        if scaler is None:
            scaler = dataset.fit_scaler(table)
        scaled = dataset.transform(scaler, table)
        everything = dataset.make_windows(scaled, window, cfg.overlap,
                                          label_names)
        windows = dataset.split_windows_random(everything, spec,
                                               SeededRng(cfg.seed))
        parts = {name: scaled for name in dataset.CACHE_PARTS}
        prepared = _finish(windows, parts, scaler, cfg, [path])
        return prepared._replace(tables=None)

    split = dataset.split_chronological(table, spec, window)
    raw_parts = dict(zip(dataset.CACHE_PARTS, split))
    if scaler is None:
        scaler = dataset.fit_scaler(
            table if cfg.scale_globally else raw_parts['train'])
    parts = {
        name: dataset.transform(scaler, part)
        for name, part in raw_parts.items()
    }
    return _from_tables(parts, scaler, window, cfg, label_names, [path])


def write_metadata(out_dir: str, name: str, command: str,
                   cfg: settings.RunConfig, inputs: Sequence[str],
                   extra: Optional[Dict[str, Any]] = None) -> str:
    os.makedirs(out_dir, exist_ok=True)
    content = toolbox.run_metadata(command, cfg.as_dict(), inputs)
    content.update(extra or {})
    path = os.path.join(out_dir, name)
    toolbox.write_json(path, content)
    return path


def cmd_synth(args, cfg: settings.RunConfig) -> int:
    if args.separated:
        profiles = synth.separated_profiles(args.features)
    else:
        profiles = synth.default_profiles(args.drivers, args.features,
                                          cfg.seed)
    table = synth.generate(profiles, args.trips, args.rows, args.features,
                           cfg.seed, max_window=cfg.window)
    directory = os.path.dirname(args.out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    dataset.write_csv(table, args.out, label_column=cfg.label_col)
    content = toolbox.run_metadata('synth', cfg.as_dict(), ())
    content['synth'] = {
        'drivers': len(profiles),
        'trips': args.trips,
        'rows': args.rows,
        'features': args.features,
        'separated': args.separated,
    }
    toolbox.write_json(os.path.splitext(args.out)[0] + '.json', content)
    print(args.out)
    return EXIT_OK


def cmd_prepare(args, cfg: settings.RunConfig) -> int:
    if cfg.split_mode == 'random':
        raise UsageError('random splits are cut from windows and cannot be '
                         'cached; use --data with the other commands')
    prepared = prepare_data(args, cfg)
    meta = toolbox.run_metadata('prepare', cfg.as_dict(), prepared.inputs)
    meta['split'] = split_spec(cfg)._asdict()
    meta['window'] = prepared.train.window_length
    meta['overlap'] = cfg.overlap
    meta['seed'] = cfg.seed
    dataset.save_cache(args.out_dir, prepared.tables, prepared.scaler, meta,
                       label_column=cfg.label_col)
    print(os.path.join(args.out_dir, dataset.CACHE_META))
    return EXIT_OK


def cmd_train(args, cfg: settings.RunConfig) -> int:
    prepared = prepare_data(args, cfg)
    model, history = evaluation.train_model(args.kind, prepared.train,
                                            prepared.val,
                                            train_settings(cfg))
    model.scaler = prepared.scaler
    model.feature_names = tuple(prepared.feature_names)
    out = args.out or os.path.join(args.out_dir, args.kind + '.model')
    modelfile.save_model(model, out)
    if history:
        report.write_csv(os.path.join(args.out_dir, 'train_history.csv'),
                         ('epoch', 'loss', 'val_macro_f1', 'improved'),
                         ((r.epoch, r.loss, r.val_f1, int(r.improved))
                          for r in history))
    result = evaluation.evaluate(model, prepared.test).report
    write_metadata(args.out_dir, 'train.json', 'train', cfg, prepared.inputs,
                   {
                       'model': {
                           'kind': args.kind,
                           'path': out,
                           'epochs': len(history),
                           'label_names': list(model.label_names),
                       },
                       'test': {
                           'accuracy': result.accuracy,
                           'macro_f1': result.macro_f1,
                       },
                   })
    print('{}\ttest accuracy {:.4f}\tmacro-F1 {:.4f}'.format(
        out, result.accuracy, result.macro_f1))
    return EXIT_OK


def cmd_evaluate(args, cfg: settings.RunConfig) -> int:
    model = modelfile.load_model(args.model)
    sources = args.data or [None]
    several = len(sources) > 1
    summary = []
    inputs = [args.model]
    print('dataset\tdrivers\taccuracy\tmacro_precision\tmacro_recall\t'
          'macro_f1')
    for path in sources:
        prepared = prepare_data(args, cfg, path, model)
        result = evaluation.evaluate(model, prepared.test)
        name = os.path.basename(path or args.cache)
        prefix = os.path.splitext(name)[0] + '-' if several else ''
        report.emit_metrics(result.report, result.confusion,
                            model.label_names, args.out_dir, prefix)
        row = (name, len(model.label_names), result.report.accuracy,
               result.report.macro_precision, result.report.macro_recall,
               result.report.macro_f1)
        summary.append(row)
        inputs += prepared.inputs
        print('{}\t{}\t{:.4f}\t{:.4f}\t{:.4f}\t{:.4f}'.format(*row))
    write_metadata(args.out_dir, 'evaluate.json', 'evaluate', cfg, inputs, {
        'model': args.model,
        'averaging': 'macro',
        'summary': [list(row) for row in summary],
    })
    return EXIT_OK


def load_models(paths: Sequence[str]):
    models: Dict[str, Any] = {}
    for path in paths:
        model = modelfile.load_model(path)
        name = model.kind
        if name in models:
            name = '{}:{}'.format(model.kind, os.path.basename(path))
        models[name] = model
    first = next(iter(models.values()))
    windows = {
        m.config.window_length
        for m in models.values() if m.kind == 'lstm'
    }
    if len(windows) > 1:
        raise UsageError('LSTM models disagree on window length')
    for model in models.values():
        if model.label_names != first.label_names:
            raise UsageError('models were trained on different drivers')
    lstm_first = [m for m in models.values() if m.kind == 'lstm']
    return models, (lstm_first[0] if lstm_first else first)


def _sweep_metadata(args, cfg, command, prepared, result):
    content = toolbox.run_metadata(command, cfg.as_dict(),
                                   prepared.inputs + list(args.models))
    content['models'] = list(result.models)
    return content


def cmd_sweep_noise(args, cfg: settings.RunConfig) -> int:
    models, reference = load_models(args.models)
    prepared = prepare_data(args, cfg, model=reference)
    raw_scaler = prepared.scaler if cfg.corrupt_raw else None
    std = prepared.raw_std if cfg.corrupt_raw else prepared.feature_std
    if args.axis == 'level':
        result = evaluation.sweep_noise_level(models, prepared.test, std,
                                              args.grid or cfg.levels,
                                              cfg.severity, cfg.repeats,
                                              cfg.seed, cfg.jobs, raw_scaler)
    else:
        result = evaluation.sweep_noise(models, prepared.test, std,
                                        args.grid or cfg.severities,
                                        cfg.level, cfg.repeats, cfg.seed,
                                        cfg.jobs, raw_scaler)
    paths = report.emit_report(
        result, args.out_dir,
        _sweep_metadata(args, cfg, 'sweep-noise', prepared, result))
    print('\n'.join(paths))
    return EXIT_OK


def cmd_sweep_anomaly(args, cfg: settings.RunConfig) -> int:
    models, reference = load_models(args.models)
    prepared = prepare_data(args, cfg, model=reference)
    raw_scaler = prepared.scaler if cfg.corrupt_raw else None
    result = evaluation.sweep_anomaly(models, prepared.test, args.grid or
                                      cfg.rates, cfg.affected_fraction,
                                      cfg.repeats, cfg.seed, cfg.jobs,
                                      cfg.per_row_anomaly, raw_scaler)
    paths = report.emit_report(
        result, args.out_dir,
        _sweep_metadata(args, cfg, 'sweep-anomaly', prepared, result))
    print('\n'.join(paths))
    return EXIT_OK


def cmd_train_corrupted(args, cfg: settings.RunConfig) -> int:
    kinds = [k for k in args.kinds.replace(' ', '').split(',') if k]
    unknown = [k for k in kinds if k not in evaluation.MODEL_KINDS]
    if unknown or not kinds:
        raise UsageError('unknown model kind(s): {}'.format(
            ', '.join(unknown) or '(none)'))
    prepared = prepare_data(args, cfg)
    spec = corruption.NoiseSpec(cfg.level, cfg.severity, cfg.seed)
    _, rows = evaluation.train_on_corrupted(kinds, prepared.train,
                                            prepared.val, prepared.test, spec,
                                            prepared.feature_std,
                                            train_settings(cfg))
    report.emit_comparison(rows, args.out_dir)
    write_metadata(args.out_dir, 'train_corrupted.json', 'train-corrupted',
                   cfg, prepared.inputs, {'noise': spec._asdict()})
    print('model\taccuracy\tmacro_f1')
    for row in rows:
        print('{}\t{:.4f}\t{:.4f}'.format(row.model, row.accuracy,
                                          row.macro_f1))
    return EXIT_OK


def cmd_search(args, cfg: settings.RunConfig) -> int:
    if cfg.split_mode == 'random':
        raise UsageError('search needs the chronological split')
    prepared = prepare_data(args, cfg)
    grid = args.hidden_grid or [list(cfg.hidden_sizes)]
    ranked = evaluation.grid_search(grid, args.windows,
                                    prepared.tables['train'],
                                    prepared.tables['val'],
                                    model_config(cfg), cfg.seed, cfg.overlap,
                                    args.search_epochs)
    report.emit_search(ranked, args.out_dir)
    model, history, _ = evaluation.retrain_best(ranked,
                                                prepared.tables['train'],
                                                prepared.tables['val'],
                                                model_config(cfg), cfg.seed,
                                                cfg.overlap)
    model.scaler = prepared.scaler
    model.feature_names = tuple(prepared.feature_names)
    out = os.path.join(args.out_dir, 'search_best.model')
    modelfile.save_model(model, out)
    test = dataset.make_windows(prepared.tables['test'],
                                model.config.window_length, cfg.overlap,
                                model.label_names)
    best: Dict[str, Any] = {
        'path': out,
        'hidden_sizes': list(model.config.hidden_sizes),
        'window': model.config.window_length,
        'epochs': len(history),
    }
    if test.count:
        result = evaluation.evaluate(model, test).report
        best['test'] = {
            'accuracy': result.accuracy,
            'macro_f1': result.macro_f1,
        }
    write_metadata(args.out_dir, 'search.json', 'search', cfg,
                   prepared.inputs, {
                       'hidden_grid': grid,
                       'windows': list(args.windows),
                       'epochs': args.search_epochs,
                       'best': best,
                   })
    print('hidden_sizes\twindow\tval_macro_f1')
    for row in ranked:
        print('{}\t{}\t{:.4f}'.format('-'.join(map(str, row.hidden_sizes)),
                                      row.window_length, row.val_f1))
    print(out)
    return EXIT_OK


def cmd_predict(args, cfg: settings.RunConfig) -> int:
    model = modelfile.load_model(args.model)
    if model.scaler is None:
        raise modelfile.ModelCorruptedError(
            '{} holds no scaling statistics'.format(args.model))
    window = model.config.window_length if model.kind == 'lstm' \
        else cfg.window
    table = dataset.load_csv(args.data, cfg.label_col, None, min_drivers=0)
    if model.feature_names:
        table = dataset.select_features(table, model.feature_names)
    if args.start < 0 or args.start + window > table.n_rows:
        raise dataset.EmptySubsetError(
            'rows {}..{} are out of range; {} has {} usable rows'.format(
                args.start, args.start + window - 1, args.data,
                table.n_rows))
    rows = slice(args.start, args.start + window)
    values = dataset.scale_values(model.scaler, table.values[rows])
    pred, probs = model.predict_windows(values[None])
    drivers = sorted(set(table.drivers[rows].tolist()))
    print('predicted\t{}'.format(model.label_names[int(pred[0])]))
    print('recorded\t{}'.format(','.join(drivers)))
    for name, prob in zip(model.label_names, probs[0]):
        print('{}\t{:.6f}'.format(name, prob))
    return EXIT_OK


def cmd_preview(args, cfg: settings.RunConfig) -> int:
    prepared = prepare_data(args, cfg)
    table = (prepared.tables or {}).get('train')
    if table is None:
        table = dataset.transform(
            prepared.scaler,
            dataset.load_csv(args.data, cfg.label_col, cfg.trip_col))
    noise = [
        corruption.NoiseSpec(cfg.level, s, cfg.seed)
        for s in PREVIEW_SEVERITIES
    ]
    anomaly = [
        corruption.AnomalySpec(max(cfg.rates), cfg.affected_fraction,
                               cfg.seed, cfg.per_row_anomaly)
    ]
    out = os.path.join(args.out_dir, 'preview_{}.svg'.format(args.feature))
    report.plot_corruption(table, args.feature, noise, anomaly,
                           prepared.feature_std, out, args.rows)
    write_metadata(args.out_dir, 'preview.json', 'preview', cfg,
                   prepared.inputs, {
                       'preview': {
                           'feature': args.feature,
                           'rows': args.rows,
                           'svg': out,
                           'noise': [spec._asdict() for spec in noise],
                           'anomaly': [spec._asdict() for spec in anomaly],
                       },
                   })
    print(out)
    return EXIT_OK


HANDLERS = {
    'synth': cmd_synth,
    'prepare': cmd_prepare,
    'train': cmd_train,
    'evaluate': cmd_evaluate,
    'sweep-noise': cmd_sweep_noise,
    'sweep-anomaly': cmd_sweep_anomaly,
    'train-corrupted': cmd_train_corrupted,
    'search': cmd_search,
    'predict': cmd_predict,
    'preview': cmd_preview,
}


def dispatch(argv: Sequence[str]) -> int:
    """Run one command; returns the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
        cfg = run_config(args)
        return HANDLERS[args.command](args, cfg)
    except SystemExit as exit_request:
        return int(exit_request.code or 0)
    except (UsageError, settings.SettingsError) as err:
        log_err(err)
        return EXIT_USAGE
    except TRAINING_ERRORS as err:
        log_err(err)
        return EXIT_TRAINING
    except DATA_ERRORS as err:
        log_err(err)
        return EXIT_DATA
    except ValueError as err:
        log_err(err)
        return EXIT_USAGE
    except TypeError as err:
        log_err('internal error: {}'.format(err))
        return EXIT_INTERNAL


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == '__main__':
    main()
