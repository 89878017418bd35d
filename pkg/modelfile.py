# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Versioned model container.

Any trained model kind is stored as a single JSON object; layout is
described in FORMAT.md.  Floats are written with their shortest
round-tripping representation, so loading restores every parameter
bit for bit.
"""

import json
import os
from typing import Dict, List, Tuple

import numpy as np

import baselines
import dataset
import lstm

from version import VERSION

FORMAT_NAME = 'drivesig-model'

FORMAT_VERSION = 1

KINDS = ('lstm', 'tree', 'forest', 'fcnn')

TREE_ARRAYS = ('feature', 'threshold', 'left', 'right', 'counts')


class ModelFileError(Exception):
    """Model file cannot be written or used."""


class ModelVersionError(ModelFileError):
    """Model file was written in an unsupported format version."""


class ModelCorruptedError(ModelFileError):
    """Model file is truncated or otherwise malformed."""


class ModelKindError(ModelFileError):
    """Model file holds a kind of model this program does not know."""


def _encode(name: str, arr: np.ndarray) -> Dict[str, object]:
    arr = np.asarray(arr)
    dtype = 'int64' if np.issubdtype(arr.dtype, np.integer) else 'float64'
    return {
        'name': name,
        'dtype': dtype,
        'shape': list(arr.shape),
        'data': arr.reshape(-1).tolist(),
    }


def _decode(entry) -> Tuple[str, np.ndarray]:
    try:
        shape = tuple(int(n) for n in entry['shape'])
        dtype = {'int64': np.int64, 'float64': np.float64}[entry['dtype']]
        arr = np.array(entry['data'], dtype=dtype)
        return entry['name'], arr.reshape(shape)
    except (KeyError, TypeError, ValueError) as err:
        raise ModelCorruptedError('malformed array entry: {}'.format(err))


def model_arrays(model) -> List[Tuple[str, np.ndarray]]:
    """Parameter arrays of a model in file order."""
    if model.kind in ('lstm', 'fcnn'):
        return list(model.param_set().items())
    if model.kind == 'tree':
        return list(model.to_state().items())
    if model.kind == 'forest':
        arrays = []
        for num, tree in enumerate(model.trees):
            for name, arr in tree.to_state().items():
                arrays.append(('tree{}.{}'.format(num, name), arr))
        return arrays
    raise ModelKindError('unknown model kind: {}'.format(model.kind))


def _model_config(model):
    if model.kind in ('lstm', 'fcnn'):
        return model.config.to_dict()
    if model.kind == 'forest':
        return model.config._asdict()
    return {}


def save_model(model, path: str) -> None:
    """Write model (with its scaler, if any) to path."""
    scaler = getattr(model, 'scaler', None)
    content = {
        'format': FORMAT_NAME,
        'version': FORMAT_VERSION,
        'tool_version': VERSION,
        'kind': model.kind,
        'label_names': list(model.label_names),
        'config': _model_config(model),
        'scaler': scaler.to_dict() if scaler is not None else None,
        'feature_names': list(getattr(model, 'feature_names', None) or []),
        'arrays': [_encode(name, arr) for name, arr in model_arrays(model)],
    }
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    try:
        with open(path, 'w', encoding='utf-8') as out:
            json.dump(content, out, sort_keys=True, separators=(',', ':'),
                      allow_nan=False)
            out.write('\n')
    except OSError as err:
        raise ModelFileError('cannot write {}: {}'.format(path, err))


def _build_lstm(config, names, arrays):
    config = lstm.ModelConfig.from_dict(config)
    layers = []
    for num in range(len(config.hidden_sizes)):
        layers.append(
            lstm.LstmLayerParams(**{
                field: arrays['layer{}.{}'.format(num, field)]
                for field in lstm.LstmLayerParams._fields
            }))
    head = lstm.ClassifierHead(arrays['head.W_out'], arrays['head.b_out'])
    return lstm.LstmModel(config, layers, head, names)


def _build_tree(arrays, names, prefix=''):
    return baselines.DecisionTree(
        *[arrays[prefix + field] for field in TREE_ARRAYS], names)


def _build_forest(config, names, arrays):
    config = baselines.ForestConfig(**config)
    trees = [
        _build_tree(arrays, names, 'tree{}.'.format(num))
        for num in range(config.n_trees)
    ]
    return baselines.RandomForest(trees, config, names)


def _build_fcnn(config, names, arrays):
    return baselines.FcnnModel(lstm.ModelConfig.from_dict(config), arrays,
                               names)


def load_model(path: str):
    """Read a model written by save_model."""
    if not os.path.isfile(path):
        raise ModelFileError('no such model file: {}'.format(path))
    try:
        with open(path, 'r', encoding='utf-8') as txt:
            content = json.load(txt)
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ModelCorruptedError('{} is not a model file: {}'.format(
            path, err))
    if not isinstance(content, dict) or \
       content.get('format') != FORMAT_NAME:
        raise ModelCorruptedError('{} is not a model file'.format(path))
    if content.get('version') != FORMAT_VERSION:
        raise ModelVersionError('{}: format version {} is not supported '
                                '(expected {})'.format(
                                    path, content.get('version'),
                                    FORMAT_VERSION))
    kind = content.get('kind')
    if kind not in KINDS:
        raise ModelKindError('{}: unknown model kind {!r}'.format(path, kind))

    try:
        arrays = dict(_decode(entry) for entry in content['arrays'])
        names = tuple(content['label_names'])
        config = content['config']
        if kind == 'lstm':
            model = _build_lstm(config, names, arrays)
        elif kind == 'tree':
            model = _build_tree(arrays, names)
        elif kind == 'forest':
            model = _build_forest(config, names, arrays)
        else:
            model = _build_fcnn(config, names, arrays)
        if content['scaler'] is not None:
            model.scaler = dataset.Scaler.from_dict(content['scaler'])
        model.feature_names = tuple(content['feature_names']) or None
    except (KeyError, TypeError, ValueError) as err:
        raise ModelCorruptedError('{}: incomplete model: {}'.format(
            path, err))

    expected = dict(model_arrays(model))
    if set(expected) != set(arrays):
        raise ModelCorruptedError('{}: unexpected parameter set'.format(path))
    return model
