# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Settings file creation and handling.
"""

# pylint: disable=missing-docstring

import configparser
import os
from typing import Any, Callable, Dict, NamedTuple, Optional, Tuple

from log import log
from toolbox import env_int

# XDG base directory for configuration files
CONF_HOME = os.environ.get('XDG_CONFIG_HOME') or \
    os.path.expanduser('~/.config')

SETTINGS_FILE = os.path.join(CONF_HOME, 'drivesig.conf')

SPLIT_MODES = ('chronological', 'random')


class SettingsError(Exception):
    """Settings file or flag holds an unknown key or a bad value."""


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ('1', 'yes', 'true', 'on'):
        return True
    if value in ('0', 'no', 'false', 'off'):
        return False
    raise ValueError('not a boolean: {!r}'.format(text))


def _optional(parse: Callable[[str], Any]) -> Callable[[str], Any]:

    def parse_or_none(text: str):
        text = text.strip()
        if text in ('', 'none'):
            return None
        return parse(text)

    return parse_or_none


def _tuple_of(parse: Callable[[str], Any]) -> Callable[[str], Tuple]:

    def parse_all(text: str):
        items = [t.strip() for t in text.replace(' ', ',').split(',')]
        return tuple(parse(t) for t in items if t)

    return parse_all


def _split_mode(text: str) -> str:
    mode = text.strip()
    if mode not in SPLIT_MODES:
        raise ValueError('split_mode must be one of: ' +
                         ', '.join(SPLIT_MODES))
    return mode


# field -> (section, parser, default as written in the settings file)
SCHEMA: Dict[str, Tuple[str, Callable[[str], Any], str]] = {
    'label_col': ('data', str, 'driver_id'),
    'trip_col': ('data', _optional(str), ''),
    'window': ('data', int, '16'),
    'overlap': ('data', float, '0.5'),
    'train_fraction': ('data', float, '0.85'),
    'val_fraction': ('data', float, '0.05'),
    'test_fraction': ('data', float, '0.10'),
    'split_mode': ('data', _split_mode, 'chronological'),
    'scale_globally': ('data', _bool, 'false'),
    'hidden_sizes': ('model', _tuple_of(int), '160, 200'),
    'learning_rate': ('model', float, '0.001'),
    'batch_size': ('model', int, '64'),
    'max_epochs': ('model', int, '200'),
    'patience': ('model', int, '10'),
    'clip_norm': ('model', _optional(float), ''),
    'n_trees': ('forest', int, '100'),
    'features_per_split': ('forest', _optional(int), ''),
    'bootstrap': ('forest', _bool, 'true'),
    'max_depth': ('forest', _optional(int), ''),
    'repeats': ('sweep', int, '10'),
    'affected_fraction': ('sweep', float, '0.40'),
    'level': ('sweep', float, '1.0'),
    'severity': ('sweep', float, '1.0'),
    'severities': ('sweep', _tuple_of(float),
                   '0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0'),
    'levels': ('sweep', _tuple_of(float),
               '0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0'),
    'rates': ('sweep', _tuple_of(float), '0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.65'),
    'corrupt_raw': ('sweep', _bool, 'false'),
    'per_row_anomaly': ('sweep', _bool, 'false'),
    'seed': ('run', int, '0'),
    'jobs': ('run', int, '1'),
}

SECTIONS = ('data', 'model', 'forest', 'sweep', 'run')

DEFAULT_SETTINGS = """
[data]
# Name of the CSV column holding the driver label.
label_col = {label_col}

# Optional CSV column separating trips; windows never cross trips.
# Without it the whole log of a driver is treated as one trip.
trip_col = {trip_col}

# Window length (time steps) and overlap between consecutive windows.
window = {window}
overlap = {overlap}

# Per-driver split fractions; they need to sum to 1.
train_fraction = {train_fraction}
val_fraction = {val_fraction}
test_fraction = {test_fraction}

# Available modes:
# - chronological: every driver's rows are split in time order
# - random: windows of every driver are shuffled before splitting;
#   overlapping windows end up on both sides of the split
split_mode = {split_mode}

# Fit min-max scaling on the whole table instead of the training split.
scale_globally = {scale_globally}

[model]
# Hidden units of every stacked LSTM layer (also used by the FCNN baseline).
hidden_sizes = {hidden_sizes}
learning_rate = {learning_rate}
batch_size = {batch_size}
max_epochs = {max_epochs}

# Stop after this many epochs without validation macro-F1 improvement.
patience = {patience}

# Clip gradients to this global norm; leave empty to disable.
clip_norm = {clip_norm}

[forest]
n_trees = {n_trees}

# Features tried per split; empty means ceil(sqrt(number of features)).
features_per_split = {features_per_split}
bootstrap = {bootstrap}
max_depth = {max_depth}

[sweep]
# Every grid point is evaluated this many times, with seeds seed + repeat.
repeats = {repeats}

# Fraction of cells (or rows) hit by an anomaly.
affected_fraction = {affected_fraction}

# Noise probability used by the severity sweep, and the severity used by
# the probability sweep and by train-corrupted.
level = {level}
severity = {severity}

severities = {severities}
levels = {levels}
rates = {rates}

# Corrupt unscaled sensor values instead of scaled ones.
corrupt_raw = {corrupt_raw}

# Anomalies hit whole rows instead of single cells.
per_row_anomaly = {per_row_anomaly}

[run]
# DRIVESIG_SEED environment variable overrides this value.
seed = {seed}

# Worker threads for sweeps and forests; 1 runs everything serially.
jobs = {jobs}
"""


class RunConfig(NamedTuple):
    label_col: str
    trip_col: Optional[str]
    window: int
    overlap: float
    train_fraction: float
    val_fraction: float
    test_fraction: float
    split_mode: str
    scale_globally: bool
    hidden_sizes: Tuple[int, ...]
    learning_rate: float
    batch_size: int
    max_epochs: int
    patience: int
    clip_norm: Optional[float]
    n_trees: int
    features_per_split: Optional[int]
    bootstrap: bool
    max_depth: Optional[int]
    repeats: int
    affected_fraction: float
    level: float
    severity: float
    severities: Tuple[float, ...]
    levels: Tuple[float, ...]
    rates: Tuple[float, ...]
    corrupt_raw: bool
    per_row_anomaly: bool
    seed: int
    jobs: int

    def as_dict(self) -> Dict[str, Any]:
        content = self._asdict()
        for key, value in content.items():
            if isinstance(value, tuple):
                content[key] = list(value)
        return content


class Settings():

    def __init__(self, conf: Optional[str] = None):
        self.path = conf or SETTINGS_FILE
        self.store = configparser.ConfigParser(interpolation=None)
        if conf and not os.path.isfile(conf):
            raise SettingsError('no such settings file: {}'.format(conf))
        try:
            self.store.read(self.path, encoding='utf-8')
        except configparser.Error as err:
            raise SettingsError('{}: {}'.format(self.path, err))
        for section in SECTIONS:
            if not self.store.has_section(section):
                self.store.add_section(section)
        self.__check_keys__()

    def __check_keys__(self):
        for section in self.store.sections():
            if section not in SECTIONS:
                raise SettingsError('{}: unknown section [{}]'.format(
                    self.path, section))
            for key in self.store[section]:
                if key not in SCHEMA or SCHEMA[key][0] != section:
                    raise SettingsError('{}: unknown key {!r} in [{}]'.format(
                        self.path, key, section))

    def get(self, field: str):
        section, parse, default = SCHEMA[field]
        text = self.store.get(section, field, fallback=default)
        try:
            return parse(text)
        except ValueError as err:
            raise SettingsError('{}: bad value for {}: {}'.format(
                self.path, field, err))

    def set(self, field: str, value: str):
        if field not in SCHEMA:
            raise SettingsError('unknown key {!r}'.format(field))
        self.store.set(SCHEMA[field][0], field, value)

    def run_config(self, overrides: Optional[Dict[str, Any]] = None):
        """Merge file values, DRIVESIG_SEED and flags (in that order)."""
        values = {field: self.get(field) for field in SCHEMA}
        env_seed = env_int('DRIVESIG_SEED')
        if env_seed is not None:
            values['seed'] = env_seed
        for field, value in (overrides or {}).items():
            if field not in SCHEMA:
                raise SettingsError('unknown setting {!r}'.format(field))
            if value is not None:
                values[field] = value
        config = RunConfig(**values)
        check(config)
        return config


def check(config: RunConfig) -> RunConfig:
    problems = []
    if config.window < 2:
        problems.append('window must be at least 2')
    if not 0.0 <= config.overlap < 1.0:
        problems.append('overlap must lie in [0, 1)')
    if not config.hidden_sizes or min(config.hidden_sizes) < 1:
        problems.append('hidden_sizes must list positive counts')
    if config.repeats < 1:
        problems.append('repeats must be at least 1')
    if config.jobs < 1:
        problems.append('jobs must be at least 1')
    if config.seed < 0:
        problems.append('seed must not be negative')
    if problems:
        raise SettingsError('; '.join(problems))
    return config


def default_config() -> RunConfig:
    values = {field: spec[1](spec[2]) for field, spec in SCHEMA.items()}
    return RunConfig(**values)


def init_settings_file():
    """Create the documented default settings file on first use."""
    if os.path.isfile(SETTINGS_FILE):
        return
    try:
        os.makedirs(CONF_HOME, exist_ok=True)
        content = DEFAULT_SETTINGS.format(
            **{field: spec[2] for field, spec in SCHEMA.items()})
        with open(SETTINGS_FILE, 'w', encoding='utf-8') as file:
            file.write(content.lstrip())
        log('created', SETTINGS_FILE)
    except OSError as err:
        log('cannot create {}: {}'.format(SETTINGS_FILE, err))
