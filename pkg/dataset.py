# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Telematics log ingestion: CSV loading, min-max scaling, per-driver splits
and overlapping windows.
"""

import math
import os
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import toolbox

from log import log, log_warn
from numerics import SeededRng, ShapeError

DEFAULT_LABEL_COLUMN = 'driver_id'

DEFAULT_WINDOW = 16

DEFAULT_OVERLAP = 0.5

CACHE_PARTS = ('train', 'val', 'test')

CACHE_META = 'prepare.json'


class DataError(Exception):
    """Base class of all dataset problems."""


class MissingFileError(DataError):
    pass


class MissingColumnError(DataError):
    pass


class NoUsableRowsError(DataError):
    pass


class TooFewDriversError(DataError):
    pass


class TooFewRowsError(DataError):
    pass


class EmptySubsetError(DataError):
    pass


class FrameTable(NamedTuple):
    """Driver-labeled sensor readings, one row per time step.

    row_ids identify rows of the originally loaded table and survive every
    split, so parts of a table can always be traced back to it.
    """
    feature_names: Tuple[str, ...]
    drivers: np.ndarray
    trips: np.ndarray
    values: np.ndarray
    row_ids: np.ndarray

    @property
    def n_rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def driver_names(self) -> Tuple[str, ...]:
        """Sorted distinct driver labels."""
        return tuple(sorted(set(self.drivers.tolist())))

    def take(self, indices) -> 'FrameTable':
        """Rows at given positions, in the given order."""
        idx = np.asarray(indices, dtype=np.int64)
        return FrameTable(self.feature_names, self.drivers[idx],
                          self.trips[idx], self.values[idx], self.row_ids[idx])

    def with_values(self, values: np.ndarray) -> 'FrameTable':
        if values.shape != self.values.shape:
            raise ShapeError('values of shape {} do not fit table {}'.format(
                values.shape, self.values.shape))
        return self._replace(values=values)


def make_table(feature_names: Sequence[str], drivers: Sequence[str],
               trips: Sequence[str], values) -> FrameTable:
    """Build a table from plain sequences."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != len(feature_names):
        raise ShapeError('values of shape {} do not fit {} features'.format(
            arr.shape, len(feature_names)))
    if not len(drivers) == len(trips) == arr.shape[0]:
        raise ShapeError('label columns and values differ in length')
    return FrameTable(tuple(feature_names),
                      np.asarray(drivers, dtype=object).astype(str),
                      np.asarray(trips, dtype=object).astype(str), arr,
                      np.arange(arr.shape[0], dtype=np.int64))


def _parse_number(text: str) -> float:
    # float() reads back repr and %.17g output exactly
    if '_' in text:
        return np.nan
    try:
        return float(text)
    except ValueError:
        return np.nan


def load_csv(path: str,
             label_column: str = DEFAULT_LABEL_COLUMN,
             trip_column: Optional[str] = None,
             min_drivers: int = 2) -> FrameTable:
    """Load driver-labeled telematics log exported as CSV.

    Columns where less than half of the non-empty cells parse as numbers
    are treated as text and dropped.  Rows with any unparsable (or missing)
    value in the remaining columns are dropped.  Without a trip column the
    whole log of a driver is one trip.  With min_drivers 0 the label column
    may be absent; every row is then attributed to driver '?'.
    """
    if not os.path.isfile(path):
        raise MissingFileError('no such file: {}'.format(path))
    frame = pd.read_csv(path, dtype=str, keep_default_na=False,
                        encoding='utf-8')
    if label_column not in frame.columns and min_drivers == 0:
        frame[label_column] = '?'
    if label_column not in frame.columns:
        raise MissingColumnError('label column {!r} not found in {}'.format(
            label_column, path))
    if trip_column and trip_column not in frame.columns:
        raise MissingColumnError('trip column {!r} not found in {}'.format(
            trip_column, path))

    label_cols = {label_column, trip_column}
    numeric = {}
    dropped_cols = []
    for name in frame.columns:
        if name in label_cols:
            continue
        parsed = frame[name].str.strip().map(_parse_number).astype(np.float64)
        non_empty = int((frame[name].str.strip() != '').sum())
        if non_empty == 0 or parsed.notna().sum() * 2 < non_empty:
            dropped_cols.append(name)
            continue
        numeric[name] = parsed
    if dropped_cols:
        log_warn('dropped {} non-numeric column(s): {}'.format(
            len(dropped_cols), ', '.join(dropped_cols)))
    if not numeric:
        raise NoUsableRowsError('no numeric feature columns in ' + path)

    features = pd.DataFrame(numeric)
    values = features.to_numpy(dtype=np.float64)
    usable = np.all(np.isfinite(values), axis=1)
    usable &= (frame[label_column].str.strip() != '').to_numpy()
    dropped_rows = int((~usable).sum())
    if dropped_rows:
        log_warn('dropped {} row(s) with unparsable values'.format(
            dropped_rows))
    if not usable.any():
        raise NoUsableRowsError('no usable rows in ' + path)

    drivers = frame[label_column].str.strip().to_numpy()[usable]
    if trip_column:
        trips = frame[trip_column].str.strip().to_numpy()[usable]
    else:
        trips = drivers
    table = make_table(list(features.columns), drivers, trips,
                       values[usable])
    if len(table.driver_names()) < min_drivers:
        raise TooFewDriversError(
            '{}: need at least {} drivers, found {}'.format(
                path, min_drivers, len(table.driver_names())))
    log('loaded {}: {} rows, {} features, {} drivers'.format(
        path, table.n_rows, table.n_features, len(table.driver_names())))
    return table


def select_features(table: FrameTable,
                    feature_names: Sequence[str]) -> FrameTable:
    """Reorder (and narrow) table columns to feature_names."""
    missing = [n for n in feature_names if n not in table.feature_names]
    if missing:
        raise MissingColumnError('missing feature column(s): {}'.format(
            ', '.join(missing)))
    if tuple(feature_names) == table.feature_names:
        return table
    columns = [table.feature_names.index(n) for n in feature_names]
    return table._replace(feature_names=tuple(feature_names),
                          values=table.values[:, columns])


def write_csv(table: FrameTable, path: str,
              label_column: str = DEFAULT_LABEL_COLUMN,
              trip_column: Optional[str] = 'trip_id'):
    """Write table in the schema load_csv reads."""
    frame = pd.DataFrame(table.values, columns=list(table.feature_names))
    frame[label_column] = table.drivers
    if trip_column:
        frame[trip_column] = table.trips
    frame.to_csv(path, index=False, float_format='%.17g')


class Scaler(NamedTuple):
    """Per-feature min-max statistics."""
    minimum: np.ndarray
    maximum: np.ndarray

    def to_dict(self):
        return {'min': self.minimum.tolist(), 'max': self.maximum.tolist()}

    @staticmethod
    def from_dict(content) -> 'Scaler':
        return Scaler(np.asarray(content['min'], dtype=np.float64),
                      np.asarray(content['max'], dtype=np.float64))


def fit_scaler(table: FrameTable, rows=None) -> Scaler:
    """Per-feature min/max over the given rows (all rows by default)."""
    values = table.values if rows is None else table.values[np.asarray(
        rows, dtype=np.int64)]
    if values.shape[0] == 0:
        raise EmptySubsetError('cannot fit scaler on empty subset')
    return Scaler(values.min(axis=0), values.max(axis=0))


def scale_values(scaler: Scaler, values: np.ndarray) -> np.ndarray:
    """(X - min) / (max - min) over the last axis; constant features -> 0.

    Values outside of the fitted range are not clamped.
    """
    if values.shape[-1] != scaler.minimum.shape[0]:
        raise ShapeError('scaler fitted on {} features, got {}'.format(
            scaler.minimum.shape[0], values.shape[-1]))
    span = scaler.maximum - scaler.minimum
    constant = span == 0
    safe_span = np.where(constant, 1.0, span)
    scaled = (values - scaler.minimum) / safe_span
    return np.where(constant, 0.0, scaled)


def unscale_values(scaler: Scaler, values: np.ndarray) -> np.ndarray:
    """Inverse of scale_values; constant features map back to their value."""
    if values.shape[-1] != scaler.minimum.shape[0]:
        raise ShapeError('scaler fitted on {} features, got {}'.format(
            scaler.minimum.shape[0], values.shape[-1]))
    span = scaler.maximum - scaler.minimum
    return values * span + scaler.minimum


def transform(scaler: Scaler, table: FrameTable) -> FrameTable:
    return table.with_values(scale_values(scaler, table.values))


def inverse_transform(scaler: Scaler, table: FrameTable) -> FrameTable:
    return table.with_values(unscale_values(scaler, table.values))


class SplitSpec(NamedTuple):
    train_fraction: float = 0.85
    val_fraction: float = 0.05
    test_fraction: float = 0.10

    def validate(self) -> 'SplitSpec':
        for frac in self:
            if not 0.0 < frac < 1.0:
                raise ValueError('split fractions must lie in (0, 1)')
        if abs(sum(self) - 1.0) > 1e-9:
            raise ValueError('split fractions must sum to 1')
        return self


def part_sizes(n_rows: int, spec: SplitSpec) -> Tuple[int, int, int]:
    """Floor-based part sizes; the test part takes the remainder."""
    n_train = int(math.floor(n_rows * spec.train_fraction + 1e-9))
    n_val = int(math.floor(n_rows * spec.val_fraction + 1e-9))
    return n_train, n_val, n_rows - n_train - n_val


def driver_rows(table: FrameTable) -> Dict[str, np.ndarray]:
    """Row positions of each driver, in file order."""
    return {
        name: np.flatnonzero(table.drivers == name)
        for name in table.driver_names()
    }


def split_chronological(table: FrameTable,
                        spec: SplitSpec = SplitSpec(),
                        min_part_rows: int = 1):
    """Split every driver's rows by position into train, val and test.

    Returns three FrameTables.  Each driver must give every part at least
    min_part_rows rows (typically one full window).
    """
    spec.validate()
    parts: Tuple[List[np.ndarray], ...] = ([], [], [])
    for name, rows in driver_rows(table).items():
        sizes = part_sizes(len(rows), spec)
        if min(sizes) < max(1, min_part_rows):
            raise TooFewRowsError(
                'driver {!r} has {} rows; cannot give each part {} rows'
                .format(name, len(rows), max(1, min_part_rows)))
        bounds = np.cumsum((0, ) + sizes)
        for part, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            part.append(rows[lo:hi])
    return tuple(table.take(np.concatenate(p)) for p in parts)


class WindowSet(NamedTuple):
    """Fixed-length windows, each labeled with a single driver.

    windows has shape (count, window_length, features); row_ids holds the
    originating table row id of every time step.
    """
    windows: np.ndarray
    labels: np.ndarray
    row_ids: np.ndarray
    window_length: int
    stride: int
    label_names: Tuple[str, ...]

    @property
    def count(self) -> int:
        return int(self.windows.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.windows.shape[2])

    def subset(self, indices) -> 'WindowSet':
        idx = np.asarray(indices, dtype=np.int64)
        return self._replace(windows=self.windows[idx],
                             labels=self.labels[idx],
                             row_ids=self.row_ids[idx])

    def with_windows(self, windows: np.ndarray) -> 'WindowSet':
        if windows.shape != self.windows.shape:
            raise ShapeError('windows of shape {} do not fit {}'.format(
                windows.shape, self.windows.shape))
        return self._replace(windows=windows)

    def rows(self) -> Tuple[np.ndarray, np.ndarray]:
        """Every time step as a separate labeled row."""
        flat = self.windows.reshape(-1, self.n_features)
        return flat, np.repeat(self.labels, self.window_length)


def window_stride(window_length: int, overlap_fraction: float) -> int:
    """Step between window starts, rounded half up, at least 1."""
    return max(1, int(math.floor(window_length *
                                 (1.0 - overlap_fraction) + 0.5)))


def window_count(n_rows: int, window_length: int, stride: int) -> int:
    if n_rows < window_length:
        return 0
    return (n_rows - window_length) // stride + 1


def trip_segments(table: FrameTable) -> List[np.ndarray]:
    """Row positions of each (driver, trip), ordered by first appearance."""
    keys = list(zip(table.drivers.tolist(), table.trips.tolist()))
    order: Dict[Tuple[str, str], List[int]] = {}
    for pos, key in enumerate(keys):
        order.setdefault(key, []).append(pos)
    return [np.asarray(rows, dtype=np.int64) for rows in order.values()]


def make_windows(table: FrameTable,
                 window_length: int = DEFAULT_WINDOW,
                 overlap_fraction: float = DEFAULT_OVERLAP,
                 label_names: Optional[Sequence[str]] = None) -> WindowSet:
    """Cut overlapping windows out of every trip of every driver."""
    if window_length < 2:
        raise ValueError('window length must be at least 2')
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValueError('overlap fraction must lie in [0, 1)')
    names = tuple(label_names or table.driver_names())
    index = {name: i for i, name in enumerate(names)}
    stride = window_stride(window_length, overlap_fraction)

    picks = []
    labels = []
    for segment in trip_segments(table):
        count = window_count(len(segment), window_length, stride)
        if count == 0:
            continue
        driver = table.drivers[segment[0]]
        if driver not in index:
            raise DataError('driver {!r} not in label list'.format(driver))
        starts = np.arange(count) * stride
        picks.append(segment[starts[:, None] + np.arange(window_length)])
        labels.extend([index[driver]] * count)

    if picks:
        positions = np.concatenate(picks)
    else:
        positions = np.zeros((0, window_length), dtype=np.int64)
    return WindowSet(windows=table.values[positions],
                     labels=np.asarray(labels, dtype=np.int64),
                     row_ids=table.row_ids[positions],
                     window_length=window_length,
                     stride=stride,
                     label_names=names)


def split_windows_random(windows: WindowSet, spec: SplitSpec,
                         rng: SeededRng):
    """Shuffle every driver's windows, then split them by spec fractions.

    Overlapping neighbours end up in different parts, which is why the
    chronological row split is the default.
    """
    spec.validate()
    parts: Tuple[List[np.ndarray], ...] = ([], [], [])
    for label in range(len(windows.label_names)):
        rows = np.flatnonzero(windows.labels == label)
        rows = rows[rng.permutation(len(rows))]
        sizes = part_sizes(len(rows), spec)
        if min(sizes) < 1:
            raise TooFewRowsError('driver {!r} has {} windows'.format(
                windows.label_names[label], len(rows)))
        bounds = np.cumsum((0, ) + sizes)
        for part, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            part.append(np.sort(rows[lo:hi]))
    return tuple(windows.subset(np.concatenate(p)) for p in parts)


def save_cache(out_dir: str, parts: Dict[str, FrameTable], scaler: Scaler,
               meta: dict, label_column: str = DEFAULT_LABEL_COLUMN):
    """Write scaled train/val/test tables plus sidecar metadata."""
    os.makedirs(out_dir, exist_ok=True)
    for name in CACHE_PARTS:
        write_csv(parts[name], os.path.join(out_dir, name + '.csv'),
                  label_column=label_column)
    content = dict(meta)
    content['scaler'] = scaler.to_dict()
    content['label_column'] = label_column
    content['feature_names'] = list(parts['train'].feature_names)
    toolbox.write_json(os.path.join(out_dir, CACHE_META), content)


def load_cache(cache_dir: str):
    """Read tables written by save_cache; returns (parts, scaler, meta)."""
    meta_path = os.path.join(cache_dir, CACHE_META)
    if not os.path.isfile(meta_path):
        raise MissingFileError('no such file: {}'.format(meta_path))
    meta = toolbox.read_json(meta_path)
    label_column = meta.get('label_column', DEFAULT_LABEL_COLUMN)
    parts = {
        name: load_csv(os.path.join(cache_dir, name + '.csv'), label_column,
                       'trip_id')
        for name in CACHE_PARTS
    }
    return parts, Scaler.from_dict(meta['scaler']), meta
