# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Dense linear algebra helpers, seeded random numbers and the Adam optimizer.

A "matrix" here is a 2-D float64 numpy array (row-major); bias vectors are
1-D arrays.  Every public operation refuses to return NaN or Inf.
"""

import math
from typing import Dict, Optional, Tuple, Union

import numpy as np

Matrix = np.ndarray

ParamSet = Dict[str, np.ndarray]

ELEMENTWISE_KINDS = ('sigmoid', 'tanh', 'add', 'hadamard')

DEFAULT_LEARNING_RATE = 1e-3

DEFAULT_BETA1 = 0.9

DEFAULT_BETA2 = 0.999

DEFAULT_EPSILON = 1e-8


class ShapeError(ValueError):
    """Operand shapes do not fit the operation."""


class NumericError(ArithmeticError):
    """An operation produced NaN or Inf."""


def check_finite(arr, what='result'):
    """Return arr, or raise NumericError if it holds NaN/Inf."""
    if not np.all(np.isfinite(arr)):
        raise NumericError('non-finite values in {}'.format(what))
    return arr


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """Standard matrix product a·b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError('cannot multiply {} by {}'.format(a.shape, b.shape))
    return check_finite(a @ b, 'matmul')


def sigmoid(z):
    """Logistic function 1/(1+e^-z), stable for any magnitude of z."""
    z = np.asarray(z, dtype=np.float64)
    # exp(-|z|) is never larger than 1
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def elementwise(op_kind: str, *args) -> np.ndarray:
    """Apply one of ELEMENTWISE_KINDS to the operands."""
    if op_kind not in ELEMENTWISE_KINDS:
        raise ValueError('unknown elementwise op: {}'.format(op_kind))
    operands = [np.asarray(x, dtype=np.float64) for x in args]
    if op_kind in ('sigmoid', 'tanh'):
        if len(operands) != 1:
            raise ValueError('{} takes one operand'.format(op_kind))
        func = sigmoid if op_kind == 'sigmoid' else np.tanh
        return check_finite(func(operands[0]), op_kind)
    if len(operands) != 2:
        raise ValueError('{} takes two operands'.format(op_kind))
    left, right = operands
    if left.shape != right.shape:
        raise ShapeError('{}: shape {} does not match {}'.format(
            op_kind, left.shape, right.shape))
    out = left + right if op_kind == 'add' else left * right
    return check_finite(out, op_kind)


class SeededRng:
    """Reproducible random stream.

    Uniform draws come from numpy's PCG64 bit generator.  Gaussian draws are
    made from pairs of those uniforms with the Box-Muller transform:

        z0 = sqrt(-2 ln u1) * cos(2 pi u2)
        z1 = sqrt(-2 ln u1) * sin(2 pi u2)

    where u1 is taken from (0, 1] so the logarithm is always defined.  Both
    halves of each pair are used, in the order z0 of all pairs followed by
    z1 of all pairs.
    """

    ALGORITHM_ID = 'pcg64+box-muller'

    def __init__(self, seed: int):
        if not 0 <= int(seed) < 2**64:
            raise ValueError('seed must be a 64-bit unsigned integer')
        self.seed = int(seed)
        self.algorithm_id = self.ALGORITHM_ID
        self.generator = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low=0.0, high=1.0, size=None):
        """Uniform draws from [low, high)."""
        draws = self.generator.random(size)
        return low + (high - low) * draws

    def normal(self, size: Union[int, Tuple[int, ...]], mean=0.0,
               std=1.0) -> np.ndarray:
        """Gaussian draws via Box-Muller."""
        shape = (size, ) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape, dtype=np.int64))
        pairs = (count + 1) // 2
        u1 = 1.0 - self.generator.random(pairs)
        u2 = self.generator.random(pairs)
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * math.pi * u2
        z = np.concatenate((radius * np.cos(angle), radius * np.sin(angle)))
        return mean + std * z[:count].reshape(shape)

    def bernoulli(self, p: float, size) -> np.ndarray:
        """Boolean mask, True with probability p (u < p)."""
        return self.generator.random(size) < p

    def integers(self, low, high=None, size=None):
        """Integers from [low, high)."""
        return self.generator.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        """Random permutation of range(n)."""
        return self.generator.permutation(n)

    def choice(self, n: int, k: int) -> np.ndarray:
        """k distinct indices out of range(n)."""
        return self.generator.choice(n, size=k, replace=False)

    def spawn(self, offset: int) -> 'SeededRng':
        """Independent stream seeded with seed + offset."""
        return SeededRng((self.seed + offset) % 2**64)


def glorot_init(rows: int, cols: int, rng: SeededRng) -> Matrix:
    """Glorot-uniform matrix, entries in ±sqrt(6 / (rows + cols))."""
    if rows < 1 or cols < 1:
        raise ShapeError('cannot initialize {}x{} matrix'.format(rows, cols))
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, (rows, cols))


class AdamState:
    """Moment accumulators of the Adam optimizer.

    Accumulators are keyed like the parameter set they belong to.
    """

    # pylint: disable=too-few-public-methods

    def __init__(self,
                 params: ParamSet,
                 learning_rate=DEFAULT_LEARNING_RATE,
                 beta1=DEFAULT_BETA1,
                 beta2=DEFAULT_BETA2,
                 epsilon=DEFAULT_EPSILON):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.first_moment = {k: np.zeros_like(v) for k, v in params.items()}
        self.second_moment = {k: np.zeros_like(v) for k, v in params.items()}


def adam_update(params: ParamSet, grads: ParamSet,
                state: AdamState) -> ParamSet:
    """Bias-corrected Adam step; returns new parameter arrays.

    The input arrays are left untouched; state is advanced by one step.
    """
    if set(params) != set(grads) or set(params) != set(state.first_moment):
        raise ShapeError('parameter, gradient and state keys differ')
    for name, value in params.items():
        if grads[name].shape != value.shape or \
           state.first_moment[name].shape != value.shape:
            raise ShapeError('{}: gradient shape {} does not match {}'.format(
                name, grads[name].shape, value.shape))

    state.step_count += 1
    bias1 = 1.0 - state.beta1**state.step_count
    bias2 = 1.0 - state.beta2**state.step_count
    updated = {}
    for name, value in params.items():
        grad = grads[name]
        m = state.beta1 * state.first_moment[name] + (1.0 - state.beta1) * grad
        v = state.beta2 * state.second_moment[name] + \
            (1.0 - state.beta2) * grad * grad
        state.first_moment[name] = m
        state.second_moment[name] = v
        step = state.learning_rate * (m / bias1) / \
            (np.sqrt(v / bias2) + state.epsilon)
        updated[name] = check_finite(value - step, name)
    return updated


def global_norm(grads: ParamSet) -> float:
    """Euclidean norm over all gradient arrays."""
    return math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))


def clip_by_norm(grads: ParamSet, max_norm: Optional[float]) -> ParamSet:
    """Rescale gradients so that their global norm is at most max_norm."""
    if not max_norm:
        return grads
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}
