#!/usr/bin/python3

# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

# pylint: disable=missing-docstring

import math
import unittest

import numpy as np

import dataset
import lstm
import synth

from numerics import SeededRng, ShapeError


def window_set(windows, labels, names=('a', 'b')):
    windows = np.asarray(windows, dtype=np.float64)
    count, length = windows.shape[:2]
    return dataset.WindowSet(windows=windows,
                             labels=np.asarray(labels, dtype=np.int64),
                             row_ids=np.arange(count * length).reshape(
                                 count, length),
                             window_length=length,
                             stride=length,
                             label_names=tuple(names))


def tiny_model(seed=0, features=3, hidden=(3, 2), classes=3, window=4):
    config = lstm.ModelConfig(num_classes=classes,
                              hidden_sizes=hidden,
                              window_length=window)
    names = ['d{}'.format(k) for k in range(classes)]
    return lstm.init_model(config, features, names, SeededRng(seed))


def zero_layer(hidden, inputs):
    weights = np.zeros((hidden, hidden + inputs))
    bias = np.zeros(hidden)
    return lstm.LstmLayerParams(weights, weights, weights, weights, bias,
                                bias, bias, bias)


def scalar_sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


class TestCellStep(unittest.TestCase):

    def test_all_zero(self):
        state = lstm.cell_step(np.ones(2), lstm.zero_state(3),
                               zero_layer(3, 2))
        np.testing.assert_array_equal(state.h, np.zeros(3))
        np.testing.assert_array_equal(state.c, np.zeros(3))

    def test_carried_cell(self):
        prev = lstm.LstmState(np.zeros(1), np.ones(1))
        state = lstm.cell_step(np.zeros(1), prev, zero_layer(1, 1))
        self.assertAlmostEqual(state.c[0], 0.5)
        self.assertAlmostEqual(state.h[0], 0.5 * math.tanh(0.5))
        self.assertAlmostEqual(state.h[0], 0.2310585786, places=9)

    def test_scalar_oracle(self):
        w = {'f': (0.3, -0.7), 'i': (1.1, 0.2), 'c': (-0.4, 0.9),
             'o': (0.5, 0.5)}
        b = {'f': 0.1, 'i': -0.2, 'c': 0.05, 'o': 0.3}
        params = lstm.LstmLayerParams(
            *[np.array([w[g]]) for g in lstm.GATES],
            *[np.array([b[g]]) for g in lstm.GATES])
        h_prev, c_prev, x = 0.4, -0.6, 1.5

        def gate(g):
            return w[g][0] * h_prev + w[g][1] * x + b[g]

        f = scalar_sigmoid(gate('f'))
        i = scalar_sigmoid(gate('i'))
        g = math.tanh(gate('c'))
        o = scalar_sigmoid(gate('o'))
        c = f * c_prev + i * g
        h = o * math.tanh(c)

        state = lstm.cell_step(np.array([x]),
                               lstm.LstmState(np.array([h_prev]),
                                              np.array([c_prev])), params)
        self.assertLess(abs(state.c[0] - c), 1e-12)
        self.assertLess(abs(state.h[0] - h), 1e-12)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            lstm.cell_step(np.ones(3), lstm.zero_state(2), zero_layer(2, 2))

    def test_gate_ranges(self):
        model = tiny_model(seed=5)
        windows = SeededRng(6).normal((4, 4, 3), std=3.0)
        for layer in model.layers:
            windows, caches = lstm.run_layer(layer, windows)
            for cache in caches:
                for gate in (cache.f, cache.i, cache.o):
                    self.assertTrue(np.all((gate > 0) & (gate < 1)))
                self.assertTrue(np.all(np.abs(cache.g) < 1))


class TestForward(unittest.TestCase):

    def test_zero_head_uniform(self):
        model = tiny_model()
        head = lstm.ClassifierHead(np.zeros((3, 2)), np.zeros(3))
        probs = lstm.forward(np.ones((4, 3)), model.layers, head)
        np.testing.assert_allclose(probs, np.full(3, 1.0 / 3))

    def test_probability_simplex(self):
        model = tiny_model(seed=1)
        rng = SeededRng(2)
        for _ in range(20):
            probs = lstm.forward(rng.normal((4, 3), std=5.0), model.layers,
                                 model.head)
            self.assertTrue(np.all(probs >= 0))
            self.assertLess(abs(probs.sum() - 1.0), 1e-9)

    def test_unrolled_trace(self):
        model = tiny_model(seed=4, features=2, hidden=(2, ), classes=2,
                           window=3)
        window = SeededRng(3).normal((3, 2))
        layer = model.layers[0]
        h = np.zeros(2)
        c = np.zeros(2)
        for t in range(3):
            z = np.concatenate((h, window[t]))
            f = 1.0 / (1.0 + np.exp(-(layer.W_f @ z + layer.b_f)))
            i = 1.0 / (1.0 + np.exp(-(layer.W_i @ z + layer.b_i)))
            g = np.tanh(layer.W_c @ z + layer.b_c)
            o = 1.0 / (1.0 + np.exp(-(layer.W_o @ z + layer.b_o)))
            c = f * c + i * g
            h = o * np.tanh(c)
        logits = model.head.W_out @ h + model.head.b_out
        expected = np.exp(logits) / np.exp(logits).sum()
        probs = lstm.forward(window, model.layers, model.head)
        np.testing.assert_allclose(probs, expected, rtol=0, atol=1e-10)

    def test_wrong_feature_count(self):
        model = tiny_model()
        with self.assertRaises(ShapeError):
            lstm.forward(np.ones((4, 5)), model.layers, model.head)

    def test_head_permutation(self):
        model = tiny_model(seed=9)
        window = SeededRng(10).normal((4, 3))
        order = np.array([2, 0, 1])
        head = lstm.ClassifierHead(model.head.W_out[order],
                                   model.head.b_out[order] + 0.1 * order)
        base = lstm.ClassifierHead(model.head.W_out,
                                   model.head.b_out + 0.1 * np.arange(3))
        permuted = lstm.forward(window, model.layers, head)
        original = lstm.forward(window, model.layers, base)
        np.testing.assert_allclose(permuted, original[order], atol=1e-15)


class TestLoss(unittest.TestCase):

    def test_perfect(self):
        self.assertEqual(lstm.loss(np.array([1.0, 0.0, 0.0]), 0), 0.0)

    def test_uniform(self):
        self.assertAlmostEqual(lstm.loss(np.full(4, 0.25), 2), math.log(4))

    def test_ten_classes(self):
        probs = np.full(10, 0.75 / 9)
        probs[3] = 0.25
        self.assertAlmostEqual(lstm.loss(probs, 3), -math.log(0.25))

    def test_bad_label(self):
        with self.assertRaises(IndexError):
            lstm.loss(np.full(2, 0.5), 2)

    def test_zero_probability_finite(self):
        self.assertTrue(math.isfinite(lstm.loss(np.array([1.0, 0.0]), 1)))


class TestBackward(unittest.TestCase):

    def test_finite_differences(self):
        model = tiny_model(seed=12)
        window = SeededRng(13).normal((4, 3))
        label = 1
        grads = lstm.backward(window, label, model.layers, model.head)
        params = model.param_set()
        self.assertEqual(set(grads), set(params))
        eps = 1e-5
        worst = 0.0
        for name, value in params.items():
            for index in np.ndindex(value.shape):
                shifted = {k: v.copy() for k, v in params.items()}
                shifted[name][index] = value[index] + eps
                plus = lstm.loss(
                    model.with_params(shifted).predict_proba(window)[0],
                    label)
                shifted[name][index] = value[index] - eps
                minus = lstm.loss(
                    model.with_params(shifted).predict_proba(window)[0],
                    label)
                numeric = (plus - minus) / (2 * eps)
                analytic = grads[name][index]
                error = abs(analytic - numeric) / max(
                    abs(analytic), abs(numeric), 1e-4)
                worst = max(worst, error)
        self.assertLess(worst, 1e-4)

    def test_head_bias_gradient(self):
        model = tiny_model(seed=2)
        window = np.zeros((4, 3))
        probs = lstm.forward(window, model.layers, model.head)
        grads = lstm.backward(window, 0, model.layers, model.head)
        np.testing.assert_allclose(grads['head.b_out'],
                                   probs - np.eye(3)[0],
                                   atol=1e-12)

    def test_duplicated_sample(self):
        model = tiny_model(seed=3)
        window = SeededRng(4).normal((4, 3))
        single, _ = model.gradients(window[None], np.array([2]))
        double, _ = model.gradients(np.stack((window, window)),
                                    np.array([2, 2]))
        for name, value in single.items():
            np.testing.assert_allclose(double[name], value, rtol=1e-12,
                                       atol=1e-15)


class TestPredict(unittest.TestCase):

    def test_argmax(self):
        model = tiny_model(seed=7)
        window = SeededRng(8).normal((4, 3))
        index, probs = lstm.predict(window, model)
        np.testing.assert_allclose(
            probs, lstm.forward(window, model.layers, model.head))
        self.assertEqual(index, int(np.argmax(probs)))

    def test_tie_goes_to_lowest(self):
        model = tiny_model(classes=2)
        model.head = lstm.ClassifierHead(np.zeros((2, 2)), np.zeros(2))
        index, probs = lstm.predict(np.ones((4, 3)), model)
        self.assertEqual(index, 0)
        np.testing.assert_allclose(probs, [0.5, 0.5])

    def test_batch_matches_single(self):
        model = tiny_model(seed=1)
        windows = SeededRng(2).normal((5, 4, 3))
        pred, probs = model.predict_windows(windows)
        for k in range(5):
            index, single = lstm.predict(windows[k], model)
            self.assertEqual(pred[k], index)
            np.testing.assert_allclose(probs[k], single, atol=1e-15)

    def test_wrong_window_length(self):
        model = tiny_model(window=4)
        with self.assertRaises(ShapeError) as ctx:
            model.predict_windows(np.zeros((2, 5, 3)))
        self.assertIn('4 time steps', str(ctx.exception))
        with self.assertRaises(ShapeError):
            lstm.predict(np.zeros((3, 3)), model)


class TestTrain(unittest.TestCase):

    def test_zero_epochs(self):
        data = window_set(SeededRng(0).normal((4, 5, 2)), [0, 1, 0, 1])
        config = lstm.ModelConfig(num_classes=2, hidden_sizes=(3, ),
                                  max_epochs=0)
        model, history = lstm.train(data, data, config, seed=1)
        fresh = lstm.init_model(config._replace(window_length=5), 2,
                                ('a', 'b'), SeededRng(1))
        self.assertEqual(history, [])
        for name, value in fresh.param_set().items():
            np.testing.assert_array_equal(model.param_set()[name], value)

    def test_deterministic(self):
        data = window_set(SeededRng(0).normal((12, 5, 2)), [0, 1] * 6)
        config = lstm.ModelConfig(num_classes=2, hidden_sizes=(4, ),
                                  batch_size=4, max_epochs=3)
        first, history1 = lstm.train(data, data, config, seed=5)
        second, history2 = lstm.train(data, data, config, seed=5)
        self.assertEqual(history1, history2)
        for name, value in first.param_set().items():
            self.assertEqual(value.tobytes(),
                             second.param_set()[name].tobytes())

    def test_single_sample_loss_decreases(self):
        data = window_set(SeededRng(4).normal((1, 6, 3)), [0])
        config = lstm.ModelConfig(num_classes=2, hidden_sizes=(5, ),
                                  max_epochs=10, early_stop_patience=20)
        _, history = lstm.train(data, data, config, seed=2)
        losses = [record.loss for record in history]
        self.assertEqual(len(losses), 10)
        for before, after in zip(losses, losses[1:]):
            self.assertLessEqual(after, before)

    def test_separable_drivers(self):
        table = synth.generate(synth.separated_profiles(4),
                               trips_per_driver=2,
                               rows_per_trip=200,
                               feature_count=4,
                               seed=3,
                               max_window=8)
        train, val, _ = dataset.split_chronological(table, min_part_rows=8)
        scaler = dataset.fit_scaler(train)
        train_w = dataset.make_windows(dataset.transform(scaler, train), 8)
        val_w = dataset.make_windows(dataset.transform(scaler, val), 8)
        config = lstm.ModelConfig(num_classes=2, hidden_sizes=(8, ),
                                  learning_rate=0.01, batch_size=16,
                                  max_epochs=30)
        model, history = lstm.train(train_w, val_w, config, seed=0)
        self.assertGreaterEqual(max(r.val_f1 for r in history), 0.95)
        self.assertEqual(model.config.window_length, 8)

    def test_empty_sets(self):
        empty = window_set(np.zeros((0, 4, 2)), [])
        data = window_set(np.zeros((2, 4, 2)), [0, 1])
        config = lstm.ModelConfig(num_classes=2, hidden_sizes=(2, ))
        with self.assertRaises(lstm.EmptyDatasetError):
            lstm.train(empty, data, config, seed=0)
        with self.assertRaises(lstm.EmptyDatasetError):
            lstm.train(data, empty, config, seed=0)

    def test_divergence_names_epoch(self):
        data = window_set(SeededRng(1).normal((8, 4, 2), std=10.0),
                          [0, 1] * 4)
        config = lstm.ModelConfig(num_classes=2, hidden_sizes=(3, ),
                                  learning_rate=1e308, batch_size=1,
                                  max_epochs=5, early_stop_patience=10)
        with np.errstate(all='ignore'):
            with self.assertRaises(lstm.DivergenceError) as ctx:
                lstm.train(data, data, config, seed=0)
        self.assertGreaterEqual(ctx.exception.epoch, 1)
        self.assertIn(str(ctx.exception.epoch), str(ctx.exception))


class TestConfig(unittest.TestCase):

    def test_dict_round_trip(self):
        config = lstm.ModelConfig(num_classes=4, hidden_sizes=(8, 6),
                                  clip_norm=2.0)
        self.assertEqual(lstm.ModelConfig.from_dict(config.to_dict()), config)

    def test_validate(self):
        with self.assertRaises(ValueError):
            lstm.ModelConfig(num_classes=1).validate()
        with self.assertRaises(ValueError):
            lstm.ModelConfig(num_classes=2, hidden_sizes=()).validate()


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
