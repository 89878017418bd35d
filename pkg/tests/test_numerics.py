#!/usr/bin/python3

# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

# pylint: disable=missing-docstring

import math
import unittest

import numpy as np

import numerics

from numerics import AdamState, SeededRng


def triple_loop(a, b):
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


class TestMatmul(unittest.TestCase):

    def test_identity(self):
        m = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(numerics.matmul(np.eye(2), m), m)

    def test_row_by_column(self):
        out = numerics.matmul([[1, 2]], [[3], [4]])
        np.testing.assert_array_equal(out, [[11.0]])

    def test_triple_loop_oracle(self):
        rng = SeededRng(3)
        a = rng.uniform(-1, 1, (5, 4))
        b = rng.uniform(-1, 1, (4, 3))
        np.testing.assert_allclose(numerics.matmul(a, b), triple_loop(a, b),
                                   rtol=0, atol=1e-12)

    def test_associativity(self):
        rng = SeededRng(4)
        a, b, c = (rng.uniform(-1, 1, s) for s in ((3, 4), (4, 5), (5, 2)))
        left = numerics.matmul(numerics.matmul(a, b), c)
        right = numerics.matmul(a, numerics.matmul(b, c))
        np.testing.assert_allclose(left, right, rtol=1e-9)

    def test_shape_mismatch(self):
        with self.assertRaises(numerics.ShapeError) as ctx:
            numerics.matmul(np.zeros((2, 3)), np.zeros((2, 3)))
        self.assertIn('(2, 3)', str(ctx.exception))

    def test_non_finite(self):
        with self.assertRaises(numerics.NumericError):
            numerics.matmul([[1e308, 1e308]], [[1e308], [1e308]])


class TestElementwise(unittest.TestCase):

    def test_sigmoid_zero(self):
        self.assertEqual(numerics.elementwise('sigmoid', 0.0), 0.5)

    def test_tanh_zero(self):
        self.assertEqual(numerics.elementwise('tanh', 0.0), 0.0)

    def test_sigmoid_saturation(self):
        out = numerics.elementwise('sigmoid', [-500.0, 500.0, -1000.0])
        self.assertTrue(np.all(out >= 0.0) and np.all(out <= 1.0))
        self.assertAlmostEqual(out[1], 1.0)
        self.assertAlmostEqual(out[0], 0.0)

    def test_sigmoid_symmetry(self):
        x = np.linspace(-40, 40, 161)
        total = numerics.sigmoid(x) + numerics.sigmoid(-x)
        np.testing.assert_allclose(total, 1.0, rtol=0, atol=1e-12)

    def test_add_and_hadamard(self):
        a = np.array([[1.0, 2.0]])
        b = np.array([[3.0, 4.0]])
        np.testing.assert_array_equal(numerics.elementwise('add', a, b),
                                      [[4.0, 6.0]])
        np.testing.assert_array_equal(numerics.elementwise('hadamard', a, b),
                                      [[3.0, 8.0]])

    def test_shape_mismatch(self):
        with self.assertRaises(numerics.ShapeError):
            numerics.elementwise('add', np.zeros(2), np.zeros(3))

    def test_unknown_kind(self):
        with self.assertRaises(ValueError):
            numerics.elementwise('relu', 1.0)


class TestSeededRng(unittest.TestCase):

    def test_same_seed_same_draws(self):
        a = SeededRng(11)
        b = SeededRng(11)
        np.testing.assert_array_equal(a.normal(100), b.normal(100))
        np.testing.assert_array_equal(a.uniform(size=7), b.uniform(size=7))

    def test_algorithm_id(self):
        self.assertEqual(SeededRng(0).algorithm_id, 'pcg64+box-muller')

    def test_gaussian_moments(self):
        draws = SeededRng(2026).normal(100000, mean=2.0, std=3.0)
        stderr = 3.0 / math.sqrt(draws.size)
        self.assertLess(abs(draws.mean() - 2.0), 3 * stderr)
        # standard error of the sample variance is var * sqrt(2 / n)
        var_stderr = 9.0 * math.sqrt(2.0 / draws.size)
        self.assertLess(abs(draws.var() - 9.0), 3 * var_stderr)

    def test_odd_count(self):
        self.assertEqual(SeededRng(1).normal((3, 3)).shape, (3, 3))

    def test_bernoulli_extremes(self):
        rng = SeededRng(5)
        self.assertFalse(rng.bernoulli(0.0, 1000).any())
        self.assertTrue(rng.bernoulli(1.0, 1000).all())

    def test_spawn(self):
        np.testing.assert_array_equal(
            SeededRng(10).spawn(5).uniform(size=4),
            SeededRng(15).uniform(size=4))

    def test_bad_seed(self):
        with self.assertRaises(ValueError):
            SeededRng(-1)


class TestGlorot(unittest.TestCase):

    def test_single_value_bound(self):
        value = numerics.glorot_init(1, 1, SeededRng(9))[0, 0]
        self.assertLessEqual(abs(value), math.sqrt(3.0))

    def test_deterministic(self):
        a = numerics.glorot_init(4, 6, SeededRng(1))
        b = numerics.glorot_init(4, 6, SeededRng(1))
        self.assertEqual(a.tobytes(), b.tobytes())

    def test_mean(self):
        w = numerics.glorot_init(100, 100, SeededRng(8))
        limit = math.sqrt(6.0 / 200)
        stderr = limit / math.sqrt(3.0) / math.sqrt(w.size)
        self.assertLess(abs(w.mean()), 3 * stderr)
        self.assertLessEqual(np.abs(w).max(), limit)

    def test_zero_dimension(self):
        with self.assertRaises(numerics.ShapeError):
            numerics.glorot_init(0, 3, SeededRng(0))


class TestAdam(unittest.TestCase):

    def test_zero_gradient(self):
        params = {'w': np.array([1.0, -2.0])}
        state = AdamState(params)
        out = numerics.adam_update(params, {'w': np.zeros(2)}, state)
        np.testing.assert_array_equal(out['w'], params['w'])
        self.assertEqual(state.step_count, 1)

    def test_first_step_magnitude(self):
        params = {'w': np.array([0.0])}
        state = AdamState(params, learning_rate=0.1)
        out = numerics.adam_update(params, {'w': np.array([1.0])}, state)
        self.assertAlmostEqual(out['w'][0], -0.1, places=6)

    def test_moments_accumulate(self):
        params = {'w': np.array([0.0])}
        state = AdamState(params, learning_rate=0.1)
        first = numerics.adam_update(params, {'w': np.array([1.0])}, state)
        second = numerics.adam_update(params, {'w': np.array([-1.0])},
                                      state)
        self.assertNotEqual(first['w'][0] - params['w'][0],
                            second['w'][0] - params['w'][0])
        self.assertEqual(state.step_count, 2)

    def test_inputs_untouched(self):
        params = {'w': np.ones(3)}
        numerics.adam_update(params, {'w': np.ones(3)}, AdamState(params))
        np.testing.assert_array_equal(params['w'], np.ones(3))

    def test_shape_mismatch(self):
        params = {'w': np.ones(3)}
        with self.assertRaises(numerics.ShapeError):
            numerics.adam_update(params, {'w': np.ones(2)},
                                 AdamState(params))


class TestClipping(unittest.TestCase):

    def test_clip(self):
        grads = {'a': np.array([3.0]), 'b': np.array([4.0])}
        clipped = numerics.clip_by_norm(grads, 1.0)
        self.assertAlmostEqual(numerics.global_norm(clipped), 1.0)

    def test_no_clip(self):
        grads = {'a': np.array([0.3])}
        self.assertIs(numerics.clip_by_norm(grads, 1.0), grads)
        self.assertIs(numerics.clip_by_norm(grads, None), grads)


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
