#!/usr/bin/python3

# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

# pylint: disable=missing-docstring

import math
import unittest

import numpy as np

import baselines
import synth

from synth import ProfileError


class TestAr(unittest.TestCase):

    def test_spectral_radius(self):
        radii = synth.spectral_radius([[0.5, 0.0], [1.1, 0.0], [0.0, -0.25]])
        np.testing.assert_allclose(radii, [0.5, 1.1, 0.5])

    def test_innovation_std_ar1(self):
        std = synth.innovation_std(np.array([[0.5, 0.0]]), np.array([2.0]))
        self.assertAlmostEqual(std[0], 2.0 * math.sqrt(0.75))

    def test_unstable_profile(self):
        profile = synth.separated_profiles(2)[0]
        unstable = profile._replace(ar_coefficients=np.array([[1.2, 0.0],
                                                              [0.5, 0.0]]))
        with self.assertRaises(ProfileError):
            unstable.validate(2)

    def test_profile_checks(self):
        profile = synth.separated_profiles(2)[0]
        with self.assertRaises(ProfileError):
            profile.validate(3)
        with self.assertRaises(ProfileError):
            profile._replace(period=1).validate(2)
        with self.assertRaises(ProfileError):
            profile._replace(event_intensity=1.5).validate(2)
        with self.assertRaises(ProfileError):
            profile._replace(cruise_spread=np.zeros(2)).validate(2)


class TestProfiles(unittest.TestCase):

    def test_default_profiles_valid(self):
        profiles = synth.default_profiles(6, 8, seed=3)
        self.assertEqual(len({p.driver_id for p in profiles}), 6)
        for profile in profiles:
            profile.validate(8)

    def test_feature_names(self):
        names = synth.feature_names(10)
        self.assertEqual(names[0], 'speed')
        self.assertEqual(names[-2:], ['sensor_8', 'sensor_9'])
        self.assertEqual(len(set(names)), 10)


class TestGenerate(unittest.TestCase):

    def test_layout(self):
        table = synth.generate(synth.default_profiles(3, 4), 2, 100, 4,
                               seed=1, max_window=16)
        self.assertEqual(table.n_rows, 600)
        self.assertEqual(table.feature_names,
                         ('speed', 'rpm', 'throttle', 'engine_load'))
        self.assertEqual(table.driver_names(),
                         ('driver_1', 'driver_2', 'driver_3'))
        self.assertEqual(table.trips[0], 'driver_1_trip1')
        self.assertEqual(table.trips[150], 'driver_1_trip2')
        self.assertTrue(np.all(np.isfinite(table.values)))

    def test_deterministic(self):
        profiles = synth.default_profiles(2, 3)
        one = synth.generate(profiles, 1, 64, 3, seed=7, max_window=16)
        two = synth.generate(profiles, 1, 64, 3, seed=7, max_window=16)
        other = synth.generate(profiles, 1, 64, 3, seed=8, max_window=16)
        self.assertEqual(one.values.tobytes(), two.values.tobytes())
        self.assertFalse(np.array_equal(one.values, other.values))

    def test_cruising_band(self):
        table = synth.generate(synth.separated_profiles(2), 1, 4000, 2,
                               seed=2, max_window=16)
        second = table.values[table.drivers == 'driver_2']
        np.testing.assert_allclose(second.mean(axis=0), [10.0, 10.0],
                                   atol=0.5)
        # AR part has unit spread, the sinusoid adds amplitude^2 / 2
        expected = math.sqrt(1.0 + synth.SEASONAL_AMPLITUDE**2 / 2)
        np.testing.assert_allclose(second.std(axis=0), expected, rtol=0.15)

    def test_invalid_requests(self):
        profiles = synth.default_profiles(2, 3)
        with self.assertRaises(ProfileError):
            synth.generate(profiles[:1], 1, 100, 3, max_window=16)
        with self.assertRaises(ProfileError):
            synth.generate([profiles[0], profiles[0]], 1, 100, 3,
                           max_window=16)
        with self.assertRaises(ProfileError):
            synth.generate(profiles, 1, 63, 3, max_window=16)
        with self.assertRaises(ProfileError):
            synth.generate(profiles, 0, 100, 3, max_window=16)


class TestInvariants(unittest.TestCase):

    def test_within_six_spreads(self):
        profiles = synth.default_profiles(5, 8, seed=0)
        table = synth.generate(profiles, 2, 500, 8, seed=4, max_window=16)
        self.assertTrue(np.all(np.isfinite(table.values)))
        for profile in profiles:
            rows = table.values[table.drivers == profile.driver_id]
            deviation = np.abs(rows - profile.cruise_mean)
            self.assertTrue(np.all(deviation <= 6.0 * profile.cruise_spread),
                            profile.driver_id)

    def test_default_drivers_separable(self):
        profiles = synth.default_profiles(5, 8, seed=0)
        means = np.array([p.cruise_mean for p in profiles])
        spread = profiles[0].cruise_spread
        separated = 0
        for f in range(8):
            gaps = np.abs(means[:, None, f] - means[None, :, f])
            off_diagonal = gaps[~np.eye(len(profiles), dtype=bool)]
            separated += bool(np.all(off_diagonal >= spread[f]))
        self.assertGreaterEqual(separated, 4)

    def test_driver_means_follow_profiles(self):
        profiles = synth.default_profiles(5, 8, seed=0)
        table = synth.generate(profiles, 3, 2000, 8, seed=0, max_window=16)
        for profile in profiles:
            rows = table.values[table.drivers == profile.driver_id]
            np.testing.assert_array_less(
                np.abs(rows.mean(axis=0) - profile.cruise_mean),
                0.75 * profile.cruise_spread)

    def test_shallow_tree_separates_extremes(self):
        profiles = synth.separated_profiles(4)
        train = synth.generate(profiles, 2, 400, 4, seed=1, max_window=16)
        test = synth.generate(profiles, 1, 400, 4, seed=2, max_window=16)
        names = train.driver_names()
        tree = baselines.train_tree(train.values,
                                    np.searchsorted(names, train.drivers),
                                    names, max_depth=3)
        self.assertLessEqual(tree.depth(), 3)
        pred = tree.predict_rows(test.values)
        accuracy = np.mean(pred == np.searchsorted(names, test.drivers))
        self.assertGreaterEqual(accuracy, 0.9)


if __name__ == '__main__':  # pragma: no cover
    unittest.main()
