#!/usr/bin/python3

# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

# pylint: disable=missing-docstring

import json
import os
import tempfile
import unittest

import numpy as np

import baselines
import dataset
import lstm
import modelfile

from numerics import SeededRng

NAMES = ('alice', 'bob', 'carol')


def lstm_model():
    config = lstm.ModelConfig(num_classes=3, hidden_sizes=(4, 3),
                              window_length=6)
    model = lstm.init_model(config, 2, NAMES, SeededRng(3))
    # irrational-looking values exercise the float round trip
    params = {
        name: value + SeededRng(4).normal(value.shape) / 7.0
        for name, value in model.param_set().items()
    }
    model = model.with_params(params)
    model.scaler = dataset.Scaler(np.array([0.1, -3.0]),
                                  np.array([1.0 / 3, 7.5]))
    model.feature_names = ('speed', 'rpm')
    return model


def training_rows():
    rng = SeededRng(8)
    labels = np.arange(90) % 3
    return rng.normal((90, 2)) + labels[:, None], labels


class TestRoundTrip(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'model.json')

    def tearDown(self):
        self.tmp.cleanup()

    def assert_same_arrays(self, one, two):
        first = modelfile.model_arrays(one)
        second = modelfile.model_arrays(two)
        self.assertEqual([n for n, _ in first], [n for n, _ in second])
        for (name, a), (_, b) in zip(first, second):
            self.assertEqual(a.dtype, b.dtype, name)
            self.assertEqual(a.shape, b.shape, name)
            self.assertEqual(a.tobytes(), b.tobytes(), name)

    def test_lstm_bitwise(self):
        model = lstm_model()
        modelfile.save_model(model, self.path)
        loaded = modelfile.load_model(self.path)
        self.assert_same_arrays(model, loaded)
        self.assertEqual(loaded.config, model.config)
        self.assertEqual(loaded.label_names, NAMES)
        self.assertEqual(loaded.feature_names, ('speed', 'rpm'))
        self.assertEqual(loaded.scaler.maximum.tobytes(),
                         model.scaler.maximum.tobytes())
        windows = SeededRng(5).normal((4, 6, 2))
        np.testing.assert_array_equal(
            loaded.predict_windows(windows)[1],
            model.predict_windows(windows)[1])

    def test_tree(self):
        rows, labels = training_rows()
        tree = baselines.train_tree(rows, labels, NAMES, max_depth=4)
        modelfile.save_model(tree, self.path)
        loaded = modelfile.load_model(self.path)
        self.assertIsInstance(loaded, baselines.DecisionTree)
        self.assert_same_arrays(tree, loaded)
        self.assertIsNone(loaded.scaler)
        self.assertIsNone(loaded.feature_names)

    def test_forest(self):
        rows, labels = training_rows()
        config = baselines.ForestConfig(n_trees=3, max_depth=3)
        forest = baselines.train_forest(rows, labels, NAMES, config, 2)
        modelfile.save_model(forest, self.path)
        loaded = modelfile.load_model(self.path)
        self.assertEqual(loaded.config, forest.config)
        self.assert_same_arrays(forest, loaded)
        np.testing.assert_array_equal(loaded.predict_rows(rows),
                                      forest.predict_rows(rows))

    def test_fcnn(self):
        config = lstm.ModelConfig(num_classes=3, hidden_sizes=(5, ))
        model = baselines.init_fcnn(config, 2, NAMES, SeededRng(1))
        modelfile.save_model(model, self.path)
        loaded = modelfile.load_model(self.path)
        self.assert_same_arrays(model, loaded)
        rows, _ = training_rows()
        np.testing.assert_array_equal(loaded.predict_proba_rows(rows),
                                      model.predict_proba_rows(rows))

    def test_stable_bytes(self):
        model = lstm_model()
        other = os.path.join(self.tmp.name, 'again.json')
        modelfile.save_model(model, self.path)
        modelfile.save_model(modelfile.load_model(self.path), other)
        with open(self.path, 'rb') as one, open(other, 'rb') as two:
            self.assertEqual(one.read(), two.read())


class TestBrokenFiles(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'model.json')
        modelfile.save_model(lstm_model(), self.path)
        with open(self.path, 'r', encoding='utf-8') as txt:
            self.content = json.load(txt)

    def tearDown(self):
        self.tmp.cleanup()

    def rewrite(self, content):
        with open(self.path, 'w', encoding='utf-8') as out:
            json.dump(content, out)

    def test_missing(self):
        missing = os.path.join(self.tmp.name, 'nope.json')
        with self.assertRaises(modelfile.ModelFileError) as ctx:
            modelfile.load_model(missing)
        self.assertIn(missing, str(ctx.exception))

    def test_newer_version(self):
        self.content['version'] = modelfile.FORMAT_VERSION + 1
        self.rewrite(self.content)
        with self.assertRaises(modelfile.ModelVersionError):
            modelfile.load_model(self.path)

    def test_truncated(self):
        with open(self.path, 'rb') as txt:
            data = txt.read()
        with open(self.path, 'wb') as out:
            out.write(data[:len(data) // 2])
        with self.assertRaises(modelfile.ModelCorruptedError):
            modelfile.load_model(self.path)

    def test_not_a_model(self):
        self.rewrite({'hello': 'world'})
        with self.assertRaises(modelfile.ModelCorruptedError):
            modelfile.load_model(self.path)

    def test_unknown_kind(self):
        self.content['kind'] = 'svm'
        self.rewrite(self.content)
        with self.assertRaises(modelfile.ModelKindError):
            modelfile.load_model(self.path)

    def test_missing_array(self):
        self.content['arrays'] = self.content['arrays'][:-1]
        self.rewrite(self.content)
        with self.assertRaises(modelfile.ModelCorruptedError):
            modelfile.load_model(self.path)

    def test_extra_array(self):
        self.content['arrays'].append({
            'name': 'bonus',
            'dtype': 'float64',
            'shape': [1],
            'data': [0.5]
        })
        self.rewrite(self.content)
        with self.assertRaises(modelfile.ModelCorruptedError):
            modelfile.load_model(self.path)

    def test_bad_shape(self):
        self.content['arrays'][0]['shape'] = [1000]
        self.rewrite(self.content)
        with self.assertRaises(modelfile.ModelCorruptedError):
            modelfile.load_model(self.path)


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
