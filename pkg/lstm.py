# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Stacked many-to-one LSTM driver classifier.

Every window is an independent sequence: all layers start from zero hidden
and cell state, layer l consumes the hidden sequence of layer l-1, and the
softmax head reads the top layer's hidden vector after the last time step.

Gate equations (concatenation order is hidden first, then input):

    f_t = sigmoid(W_f [h_{t-1}, x_t] + b_f)
    i_t = sigmoid(W_i [h_{t-1}, x_t] + b_i)
    g_t = tanh(W_c [h_{t-1}, x_t] + b_c)        (candidate cell)
    C_t = f_t * C_{t-1} + i_t * g_t
    o_t = sigmoid(W_o [h_{t-1}, x_t] + b_o)
    h_t = o_t * tanh(C_t)

Gradients are derived by hand (backpropagation through time) and checked
against finite differences in the test suite.
"""

from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

import metrics

from log import log
from numerics import (AdamState, NumericError, ParamSet, SeededRng,
                      ShapeError, adam_update, clip_by_norm, glorot_init,
                      sigmoid)

GATES = ('f', 'i', 'c', 'o')

DEFAULT_HIDDEN_SIZES = (160, 200)

DEFAULT_BATCH_SIZE = 64

DEFAULT_MAX_EPOCHS = 200

DEFAULT_PATIENCE = 10

# Forget gates start mostly open.
FORGET_BIAS_INIT = 1.0


class TrainingError(Exception):
    """Base class of training failures."""


class EmptyDatasetError(TrainingError):
    pass


class DivergenceError(TrainingError):

    def __init__(self, epoch: int, what: str = 'loss'):
        super().__init__('training diverged in epoch {} ({} is not finite)'.
                         format(epoch, what))
        self.epoch = epoch


class ModelConfig(NamedTuple):
    num_classes: int
    hidden_sizes: Tuple[int, ...] = DEFAULT_HIDDEN_SIZES
    window_length: int = 16
    learning_rate: float = 1e-3
    batch_size: int = DEFAULT_BATCH_SIZE
    max_epochs: int = DEFAULT_MAX_EPOCHS
    early_stop_patience: int = DEFAULT_PATIENCE
    clip_norm: Optional[float] = None

    def validate(self) -> 'ModelConfig':
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ValueError('hidden_sizes must be a non-empty list of '
                             'positive counts')
        if self.num_classes < 2:
            raise ValueError('need at least 2 classes')
        if self.batch_size < 1 or self.max_epochs < 0 or \
           self.early_stop_patience < 1:
            raise ValueError('invalid training hyperparameters')
        return self

    def to_dict(self):
        content = self._asdict()
        content['hidden_sizes'] = list(self.hidden_sizes)
        return content

    @staticmethod
    def from_dict(content) -> 'ModelConfig':
        content = dict(content)
        content['hidden_sizes'] = tuple(content['hidden_sizes'])
        return ModelConfig(**content)


class LstmLayerParams(NamedTuple):
    """Weights of one layer; W_* are hidden x (hidden + input)."""
    W_f: np.ndarray
    W_i: np.ndarray
    W_c: np.ndarray
    W_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray

    @property
    def hidden_size(self) -> int:
        return int(self.W_f.shape[0])

    @property
    def input_size(self) -> int:
        return int(self.W_f.shape[1] - self.W_f.shape[0])

    def stacked(self) -> Tuple[np.ndarray, np.ndarray]:
        """All four gates as one (4 hidden) x (hidden + input) matrix."""
        return (np.concatenate((self.W_f, self.W_i, self.W_c, self.W_o)),
                np.concatenate((self.b_f, self.b_i, self.b_c, self.b_o)))


class LstmState(NamedTuple):
    h: np.ndarray
    c: np.ndarray


class ClassifierHead(NamedTuple):
    W_out: np.ndarray
    b_out: np.ndarray


class StepCache(NamedTuple):
    """Intermediate values of one cell step, kept for the backward pass."""
    z: np.ndarray
    f: np.ndarray
    i: np.ndarray
    g: np.ndarray
    o: np.ndarray
    c_prev: np.ndarray
    tanh_c: np.ndarray


def zero_state(hidden_size: int, batch: Optional[int] = None) -> LstmState:
    shape = (hidden_size, ) if batch is None else (batch, hidden_size)
    return LstmState(np.zeros(shape), np.zeros(shape))


def _step(x_t: np.ndarray, prev: LstmState, weights: np.ndarray,
          bias: np.ndarray) -> Tuple[LstmState, StepCache]:
    hidden = prev.h.shape[-1]
    z = np.concatenate((prev.h, x_t), axis=-1)
    act = z @ weights.T + bias
    f = sigmoid(act[..., :hidden])
    i = sigmoid(act[..., hidden:2 * hidden])
    g = np.tanh(act[..., 2 * hidden:3 * hidden])
    o = sigmoid(act[..., 3 * hidden:])
    c = f * prev.c + i * g
    tanh_c = np.tanh(c)
    return LstmState(o * tanh_c, c), StepCache(z, f, i, g, o, prev.c, tanh_c)


def cell_step(x_t: np.ndarray, prev: LstmState,
              params: LstmLayerParams) -> LstmState:
    """Advance one layer by one time step.

    x_t and the state may carry a leading batch axis.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape[-1] != params.input_size:
        raise ShapeError('layer expects {} inputs, got {}'.format(
            params.input_size, x_t.shape[-1]))
    if prev.h.shape[-1] != params.hidden_size or prev.h.shape != prev.c.shape:
        raise ShapeError('state does not match hidden size {}'.format(
            params.hidden_size))
    weights, bias = params.stacked()
    state, _ = _step(x_t, prev, weights, bias)
    return state


def run_layer(params: LstmLayerParams,
              sequence: np.ndarray) -> Tuple[np.ndarray, List[StepCache]]:
    """Run one layer over (batch, time, input); returns hidden sequence."""
    batch, steps, inputs = sequence.shape
    if inputs != params.input_size:
        raise ShapeError('layer expects {} inputs, got {}'.format(
            params.input_size, inputs))
    weights, bias = params.stacked()
    state = zero_state(params.hidden_size, batch)
    outputs = np.empty((batch, steps, params.hidden_size))
    caches = []
    for t in range(steps):
        state, cache = _step(sequence[:, t, :], state, weights, bias)
        outputs[:, t, :] = state.h
        caches.append(cache)
    return outputs, caches


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def loss(probs: np.ndarray, label: int) -> float:
    """Cross-entropy -log(probs[label]) of a single prediction."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[-1]:
        raise IndexError('label {} out of range for {} classes'.format(
            label, probs.shape[-1]))
    return float(-np.log(max(probs[label], np.finfo(np.float64).tiny)))


def logits_loss(logits: np.ndarray, labels: np.ndarray) -> float:
    """Mean cross-entropy over a batch, from logits (log-sum-exp)."""
    logp = log_softmax(logits)
    return float(-logp[np.arange(len(labels)), labels].mean())


class LstmModel:
    """Trained (or freshly initialized) LSTM classifier."""

    kind = 'lstm'

    def __init__(self, config: ModelConfig, layers: Sequence[LstmLayerParams],
                 head: ClassifierHead, label_names: Sequence[str]):
        self.config = config
        self.layers = list(layers)
        self.head = head
        self.label_names = tuple(label_names)
        self.scaler = None
        self.feature_names = None
        assert len(self.layers) == len(config.hidden_sizes)

    @property
    def n_features(self) -> int:
        return self.layers[0].input_size

    def check_windows(self, windows: np.ndarray) -> np.ndarray:
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim == 2:
            windows = windows[None]
        if windows.ndim != 3 or windows.shape[2] != self.n_features:
            raise ShapeError('model expects windows of {} features, '
                             'got shape {}'.format(self.n_features,
                                                   windows.shape))
        if windows.shape[1] != self.config.window_length:
            raise ShapeError('model expects windows of {} time steps, '
                             'got {}'.format(self.config.window_length,
                                             windows.shape[1]))
        return windows

    def logits(self, windows: np.ndarray):
        """Logits plus everything backward needs."""
        sequence = self.check_windows(windows)
        inputs = []
        caches = []
        for layer in self.layers:
            inputs.append(sequence)
            sequence, layer_caches = run_layer(layer, sequence)
            caches.append(layer_caches)
        last = sequence[:, -1, :]
        logits = last @ self.head.W_out.T + self.head.b_out
        return logits, (inputs, caches, last)

    def predict_proba(self, windows: np.ndarray) -> np.ndarray:
        logits, _ = self.logits(windows)
        return softmax(logits)

    def predict_windows(self,
                        windows: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Class indices and probabilities for a batch of windows."""
        windows = self.check_windows(windows)
        probs = [
            self.predict_proba(windows[lo:lo + 1024])
            for lo in range(0, max(len(windows), 1), 1024)
        ]
        probs = np.concatenate(probs) if probs else np.zeros(
            (0, self.config.num_classes))
        return np.argmax(probs, axis=1), probs

    def param_set(self) -> ParamSet:
        params = {}
        for num, layer in enumerate(self.layers):
            for name, value in layer._asdict().items():
                params['layer{}.{}'.format(num, name)] = value
        params['head.W_out'] = self.head.W_out
        params['head.b_out'] = self.head.b_out
        return params

    def with_params(self, params: ParamSet) -> 'LstmModel':
        layers = [
            LstmLayerParams(**{
                name: params['layer{}.{}'.format(num, name)]
                for name in LstmLayerParams._fields
            }) for num in range(len(self.layers))
        ]
        head = ClassifierHead(params['head.W_out'], params['head.b_out'])
        model = LstmModel(self.config, layers, head, self.label_names)
        model.scaler = self.scaler
        model.feature_names = self.feature_names
        return model

    def gradients(self, windows: np.ndarray,
                  labels: np.ndarray) -> Tuple[ParamSet, float]:
        """Mean cross-entropy gradients over a batch, and the loss."""
        labels = np.asarray(labels, dtype=np.int64)
        logits, (inputs, caches, last) = self.logits(windows)
        batch = logits.shape[0]
        probs = softmax(logits)
        dlogits = probs
        dlogits[np.arange(batch), labels] -= 1.0
        dlogits /= batch

        grads = {
            'head.W_out': dlogits.T @ last,
            'head.b_out': dlogits.sum(axis=0),
        }
        steps = inputs[0].shape[1]
        dseq = np.zeros((batch, steps, self.layers[-1].hidden_size))
        dseq[:, -1, :] = dlogits @ self.head.W_out
        for num in reversed(range(len(self.layers))):
            layer_grads, dseq = _layer_backward(self.layers[num], caches[num],
                                                dseq, inputs[num].shape[2])
            for name, value in layer_grads.items():
                grads['layer{}.{}'.format(num, name)] = value
        return grads, logits_loss(logits, labels)


def _layer_backward(params: LstmLayerParams, caches: List[StepCache],
                    dseq: np.ndarray, input_size: int):
    hidden = params.hidden_size
    weights, _ = params.stacked()
    batch, steps, _ = dseq.shape
    dweights = np.zeros_like(weights)
    dbias = np.zeros(4 * hidden)
    dinputs = np.empty((batch, steps, input_size))
    dh_next = np.zeros((batch, hidden))
    dc_next = np.zeros((batch, hidden))
    for t in reversed(range(steps)):
        cache = caches[t]
        dh = dseq[:, t, :] + dh_next
        do = dh * cache.tanh_c
        dc = dc_next + dh * cache.o * (1.0 - cache.tanh_c**2)
        df = dc * cache.c_prev
        di = dc * cache.g
        dg = dc * cache.i
        dc_next = dc * cache.f
        dact = np.concatenate(
            (df * cache.f * (1.0 - cache.f), di * cache.i * (1.0 - cache.i),
             dg * (1.0 - cache.g**2), do * cache.o * (1.0 - cache.o)),
            axis=1)
        dweights += dact.T @ cache.z
        dbias += dact.sum(axis=0)
        dz = dact @ weights
        dh_next = dz[:, :hidden]
        dinputs[:, t, :] = dz[:, hidden:]
    grads = {}
    for num, gate in enumerate(GATES):
        rows = slice(num * hidden, (num + 1) * hidden)
        grads['W_' + gate] = dweights[rows]
        grads['b_' + gate] = dbias[rows]
    return grads, dinputs


def init_model(config: ModelConfig, n_features: int,
               label_names: Sequence[str], rng: SeededRng) -> LstmModel:
    """Glorot-uniform weights, zero biases except the forget gates."""
    config.validate()
    if len(label_names) != config.num_classes:
        raise ValueError('{} label names for {} classes'.format(
            len(label_names), config.num_classes))
    layers = []
    inputs = n_features
    for hidden in config.hidden_sizes:
        weights = {
            'W_' + gate: glorot_init(hidden, hidden + inputs, rng)
            for gate in GATES
        }
        biases = {'b_' + gate: np.zeros(hidden) for gate in GATES}
        biases['b_f'] = np.full(hidden, FORGET_BIAS_INIT)
        layers.append(LstmLayerParams(**weights, **biases))
        inputs = hidden
    head = ClassifierHead(glorot_init(config.num_classes, inputs, rng),
                          np.zeros(config.num_classes))
    return LstmModel(config, layers, head, label_names)


def forward(window: np.ndarray, layers: Sequence[LstmLayerParams],
            head: ClassifierHead) -> np.ndarray:
    """Class probabilities of a single (time x features) window."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2:
        raise ShapeError('expected a 2-D window, got shape {}'.format(
            window.shape))
    config = ModelConfig(num_classes=max(2, head.b_out.shape[0]),
                         hidden_sizes=tuple(l.hidden_size for l in layers),
                         window_length=window.shape[0])
    model = LstmModel(config, layers, head, [''] * config.num_classes)
    return model.predict_proba(window)[0]


def backward(window: np.ndarray, label: int, layers: Sequence[LstmLayerParams],
             head: ClassifierHead) -> ParamSet:
    """Gradient of the loss of one window w.r.t. every weight and bias."""
    config = ModelConfig(num_classes=max(2, head.b_out.shape[0]),
                         hidden_sizes=tuple(l.hidden_size for l in layers),
                         window_length=np.asarray(window).shape[0])
    model = LstmModel(config, layers, head, [''] * config.num_classes)
    grads, _ = model.gradients(np.asarray(window)[None], np.array([label]))
    return grads


def predict(window: np.ndarray, model: LstmModel) -> Tuple[int, np.ndarray]:
    """Most probable class (lowest index on ties) and all probabilities."""
    probs = model.predict_proba(window)[0]
    return int(np.argmax(probs)), probs


class EpochRecord(NamedTuple):
    epoch: int
    loss: float
    val_f1: float
    improved: bool


def minibatches(count: int, batch_size: int, rng: SeededRng):
    order = rng.permutation(count)
    for lo in range(0, count, batch_size):
        yield order[lo:lo + batch_size]


def fit(model, params: ParamSet, train_xy, val_xy, config: ModelConfig,
        rng: SeededRng, validate_f1: Callable[[object], float],
        name: str = 'lstm'):
    """Mini-batch Adam loop shared by every gradient-trained model.

    Keeps the snapshot with the best validation macro-F1 and stops after
    early_stop_patience epochs without improvement.
    """
    x_train, y_train = train_xy
    state = AdamState(params, learning_rate=config.learning_rate)
    best_params = params
    best_f1 = -1.0
    stale = 0
    history: List[EpochRecord] = []
    for epoch in range(1, config.max_epochs + 1):
        total = 0.0
        for batch in minibatches(len(y_train), config.batch_size, rng):
            current = model.with_params(params)
            grads, batch_loss = current.gradients(x_train[batch],
                                                  y_train[batch])
            if not np.isfinite(batch_loss):
                raise DivergenceError(epoch)
            grads = clip_by_norm(grads, config.clip_norm)
            try:
                params = adam_update(params, grads, state)
            except NumericError as err:
                raise DivergenceError(epoch, 'a parameter') from err
            total += batch_loss * len(batch)
        val_f1 = validate_f1(model.with_params(params), val_xy)
        improved = val_f1 > best_f1
        if improved:
            best_f1 = val_f1
            best_params = params
            stale = 0
        else:
            stale += 1
        history.append(EpochRecord(epoch, total / len(y_train), val_f1,
                                   improved))
        log('{} epoch {}: loss {:.5f}, val macro-F1 {:.4f}{}'.format(
            name, epoch, total / len(y_train), val_f1,
            ' *' if improved else ''))
        if stale >= config.early_stop_patience:
            break
    return model.with_params(best_params), history


def _window_f1(model: LstmModel, val_xy) -> float:
    x_val, y_val = val_xy
    pred, _ = model.predict_windows(x_val)
    return metrics.macro_f1(y_val, pred, model.config.num_classes)


def train(train_windows, val_windows, config: ModelConfig,
          seed: int) -> Tuple[LstmModel, List[EpochRecord]]:
    """Train an LSTM on WindowSets; returns best-validation model, history."""
    if train_windows.count == 0 or val_windows.count == 0:
        raise EmptyDatasetError('training and validation windows are '
                                'required')
    if train_windows.n_features != val_windows.n_features or \
       train_windows.window_length != val_windows.window_length:
        raise ShapeError('training and validation windows differ in shape')
    config = config._replace(num_classes=len(train_windows.label_names),
                             window_length=train_windows.window_length)
    rng = SeededRng(seed)
    model = init_model(config, train_windows.n_features,
                       train_windows.label_names, rng)
    return fit(model, model.param_set(),
               (train_windows.windows, train_windows.labels),
               (val_windows.windows, val_windows.labels), config, rng,
               _window_f1)
