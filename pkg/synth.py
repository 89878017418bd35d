# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Synthetic multi-driver telemetry.

Every feature of every trip is a stationary AR(2) process around the
driver's cruising mean, plus a sinusoid with the driver's behaviour period
and short decaying bursts (hard pedal events) on every other feature.
The innovation variance is chosen so that the AR part alone has standard
deviation equal to the profile's cruising spread.
"""

import math
from typing import List, NamedTuple, Sequence

import numpy as np

import dataset

from numerics import SeededRng

FEATURE_NAMES = ('speed', 'rpm', 'throttle', 'engine_load', 'coolant_temp',
                 'maf', 'accel_pedal', 'fuel_trim')

DEFAULT_DRIVERS = 5

DEFAULT_TRIPS = 3

DEFAULT_ROWS = 2000

BURN_IN = 50

SEASONAL_AMPLITUDE = 0.5

BURST_AMPLITUDE = 1.0


class ProfileError(ValueError):
    """A driver profile violates one of its invariants."""


class DriverProfile(NamedTuple):
    driver_id: str
    ar_coefficients: np.ndarray  # (features, 2): phi1, phi2
    event_intensity: float
    cruise_mean: np.ndarray
    cruise_spread: np.ndarray
    period: int

    def validate(self, feature_count: int) -> 'DriverProfile':
        coef = np.asarray(self.ar_coefficients, dtype=np.float64)
        if coef.shape != (feature_count, 2):
            raise ProfileError('{}: AR coefficients must have shape ({}, 2)'.
                               format(self.driver_id, feature_count))
        if np.asarray(self.cruise_mean).shape != (feature_count, ) or \
           np.asarray(self.cruise_spread).shape != (feature_count, ):
            raise ProfileError('{}: cruising band must cover {} features'.
                               format(self.driver_id, feature_count))
        if spectral_radius(coef).max() >= 1.0:
            raise ProfileError('{}: AR process is not stable (spectral '
                               'radius >= 1)'.format(self.driver_id))
        if self.period < 2:
            raise ProfileError('{}: period must be at least 2'.format(
                self.driver_id))
        if not 0.0 <= self.event_intensity <= 1.0:
            raise ProfileError('{}: event intensity must lie in [0, 1]'.format(
                self.driver_id))
        if np.any(np.asarray(self.cruise_spread) <= 0):
            raise ProfileError('{}: cruising spread must be positive'.format(
                self.driver_id))
        return self


def spectral_radius(coefficients: np.ndarray) -> np.ndarray:
    """Spectral radius of the AR(2) companion matrix of every feature."""
    radii = []
    for phi1, phi2 in np.asarray(coefficients, dtype=np.float64):
        companion = np.array([[phi1, phi2], [1.0, 0.0]])
        radii.append(np.abs(np.linalg.eigvals(companion)).max())
    return np.array(radii)


def innovation_std(coefficients: np.ndarray,
                   target_std: np.ndarray) -> np.ndarray:
    """Innovation std giving a stationary AR(2) the target std."""
    phi1, phi2 = coefficients[:, 0], coefficients[:, 1]
    gain = (1.0 - phi2) / ((1.0 + phi2) * ((1.0 - phi2)**2 - phi1**2))
    return target_std / np.sqrt(gain)


def feature_names(feature_count: int) -> List[str]:
    names = list(FEATURE_NAMES[:feature_count])
    names += ['sensor_{}'.format(i) for i in range(len(names), feature_count)]
    return names


def default_profiles(count: int = DEFAULT_DRIVERS,
                     feature_count: int = len(FEATURE_NAMES),
                     seed: int = 0) -> List[DriverProfile]:
    """Driver set whose cruising means are well apart on even features.

    On every even feature the drivers sit on a ladder of means 1.5 spreads
    apart (in a per-feature random order); odd features differ only
    slightly, so identity there must come from the dynamics.
    """
    rng = SeededRng(seed)
    spread = np.ones(feature_count)
    base = 10.0 * np.arange(1, feature_count + 1)
    ladder = np.stack([rng.permutation(count) for _ in range(feature_count)],
                      axis=1).astype(np.float64)
    step = np.where(np.arange(feature_count) % 2 == 0, 1.5, 0.3)
    periods = [8 + 4 * k for k in range(count)]
    profiles = []
    for k in range(count):
        phi1 = rng.uniform(0.2, 1.2, feature_count)
        phi2 = rng.uniform(-0.5, 0.0, feature_count)
        # keeps the companion matrix inside the stable triangle
        phi1 = np.minimum(phi1, 0.95 * (1.0 - phi2))
        profiles.append(
            DriverProfile(driver_id='driver_{}'.format(k + 1),
                          ar_coefficients=np.stack((phi1, phi2), axis=1),
                          event_intensity=0.02 + 0.03 * k,
                          cruise_mean=base + step * ladder[k] * spread,
                          cruise_spread=spread.copy(),
                          period=periods[k]))
    return profiles


def separated_profiles(feature_count: int = len(FEATURE_NAMES),
                       separation: float = 10.0) -> List[DriverProfile]:
    """Two drivers whose cruising means are `separation` spreads apart."""
    coef = np.tile([0.5, -0.2], (feature_count, 1))
    spread = np.ones(feature_count)
    return [
        DriverProfile('driver_1', coef, 0.0, np.zeros(feature_count), spread,
                      16),
        DriverProfile('driver_2', coef, 0.0,
                      np.full(feature_count, separation), spread, 16),
    ]


def _trip(profile: DriverProfile, rows: int, rng: SeededRng) -> np.ndarray:
    coef = np.asarray(profile.ar_coefficients, dtype=np.float64)
    spread = np.asarray(profile.cruise_spread, dtype=np.float64)
    features = coef.shape[0]
    total = rows + BURN_IN
    shocks = rng.normal((total, features)) * innovation_std(coef, spread)
    state = np.zeros((total, features))
    for t in range(2, total):
        state[t] = coef[:, 0] * state[t - 1] + coef[:, 1] * state[t - 2] + \
            shocks[t]
    state = state[BURN_IN:]

    phase = rng.uniform(0.0, 2.0 * math.pi, features)
    steps = np.arange(rows)[:, None]
    seasonal = SEASONAL_AMPLITUDE * spread * np.sin(
        2.0 * math.pi * steps / profile.period + phase)

    length = max(2, profile.period // 2)
    envelope = np.zeros(rows)
    for start in np.flatnonzero(rng.bernoulli(profile.event_intensity, rows)):
        pulse = np.exp(-np.arange(min(length, rows - start)) / 3.0)
        segment = envelope[start:start + pulse.size]
        envelope[start:start + pulse.size] = np.maximum(segment, pulse)
    pedal = (np.arange(features) % 2 == 0).astype(np.float64)
    bursts = BURST_AMPLITUDE * spread * envelope[:, None] * pedal

    return profile.cruise_mean + state + seasonal + bursts


def generate(profiles: Sequence[DriverProfile],
             trips_per_driver: int = DEFAULT_TRIPS,
             rows_per_trip: int = DEFAULT_ROWS,
             feature_count: int = len(FEATURE_NAMES),
             seed: int = 0,
             max_window: int = dataset.DEFAULT_WINDOW) -> dataset.FrameTable:
    """Table of trips_per_driver trips of rows_per_trip rows per driver."""
    if len(profiles) < 2:
        raise ProfileError('need at least 2 driver profiles')
    if len({p.driver_id for p in profiles}) != len(profiles):
        raise ProfileError('driver ids must be unique')
    if rows_per_trip < 4 * max_window:
        raise ProfileError('rows_per_trip must be at least {}'.format(
            4 * max_window))
    if trips_per_driver < 1:
        raise ProfileError('need at least one trip per driver')
    for profile in profiles:
        profile.validate(feature_count)

    rng = SeededRng(seed)
    blocks = []
    drivers: List[str] = []
    trips: List[str] = []
    for num, profile in enumerate(profiles):
        for trip in range(trips_per_driver):
            blocks.append(_trip(profile, rows_per_trip, rng.spawn(
                1000 * num + trip + 1)))
            drivers += [profile.driver_id] * rows_per_trip
            trips += ['{}_trip{}'.format(profile.driver_id, trip + 1)
                      ] * rows_per_trip
    return dataset.make_table(feature_names(feature_count), drivers, trips,
                              np.concatenate(blocks))
