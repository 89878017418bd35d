# SPDX-License-Identifier: GPL-2.0-or-later
# Copyright (C) 2026  The drivesig developers

"""
Per-row comparison classifiers: CART decision tree, random forest and a
fully connected network.

These models look at a single time step.  To score them on the same test
windows as the LSTM, every row of a window is classified and the window
label is decided by window_vote().
"""

import math
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

import lstm
import metrics
import toolbox

from log import log
from numerics import ParamSet, SeededRng, ShapeError, glorot_init

LEAF = -1


class BaselineError(Exception):
    """Base class of baseline training problems."""


def gini(counts: np.ndarray) -> np.ndarray:
    """Gini impurity 1 - sum(p^2) of class count vector(s)."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum(axis=-1)
    safe = np.where(total == 0, 1.0, total)
    probs = counts / safe[..., None]
    return np.where(total == 0, 0.0, 1.0 - np.sum(probs * probs, axis=-1))


def window_vote(predictions, probabilities) -> int:
    """Window label from per-row predictions of a single window.

    Majority vote; ties go to the class with the highest summed probability,
    then to the lowest class index.
    """
    pred = np.asarray(predictions, dtype=np.int64)
    probs = np.asarray(probabilities, dtype=np.float64)
    if pred.size == 0:
        raise ValueError('cannot vote over an empty window')
    return int(vote_windows(pred[None], probs[None])[0])


def vote_windows(predictions: np.ndarray,
                 probabilities: np.ndarray) -> np.ndarray:
    """window_vote() over (windows, rows) predictions at once."""
    num_classes = probabilities.shape[-1]
    votes = np.zeros((predictions.shape[0], num_classes), dtype=np.int64)
    for k in range(num_classes):
        votes[:, k] = np.sum(predictions == k, axis=1)
    sums = probabilities.sum(axis=1)
    tied = votes == votes.max(axis=1, keepdims=True)
    return np.argmax(np.where(tied, sums, -np.inf), axis=1)


class RowModel:
    """Common window-level behaviour of per-row classifiers."""

    kind = ''
    label_names: Tuple[str, ...] = ()
    scaler = None
    feature_names = None

    def predict_proba_rows(self, rows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def predict_rows(self, rows: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba_rows(rows), axis=1)

    def predict_windows(self, windows: np.ndarray):
        """Window labels by vote, and mean row probabilities per window."""
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim == 2:
            windows = windows[None]
        count, length, features = windows.shape
        probs = self.predict_proba_rows(windows.reshape(-1, features))
        probs = probs.reshape(count, length, -1)
        pred = np.argmax(probs, axis=2)
        return vote_windows(pred, probs), probs.mean(axis=1)


class DecisionTree(RowModel):
    """CART tree stored as parallel node arrays (LEAF marks leaves)."""

    kind = 'tree'

    def __init__(self, feature, threshold, left, right, counts,
                 label_names: Sequence[str]):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.label_names = tuple(label_names)

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def leaves(self, rows: np.ndarray) -> np.ndarray:
        """Index of the leaf every row ends up in."""
        rows = np.asarray(rows, dtype=np.float64)
        node = np.zeros(rows.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] != LEAF)
        while active.size:
            current = node[active]
            values = rows[active, self.feature[current]]
            go_left = values <= self.threshold[current]
            node[active] = np.where(go_left, self.left[current],
                                    self.right[current])
            active = active[self.feature[node[active]] != LEAF]
        return node

    def predict_proba_rows(self, rows: np.ndarray) -> np.ndarray:
        counts = self.counts[self.leaves(rows)].astype(np.float64)
        return counts / counts.sum(axis=1, keepdims=True)

    def to_state(self):
        return {
            'feature': self.feature,
            'threshold': self.threshold,
            'left': self.left,
            'right': self.right,
            'counts': self.counts,
        }


class Split(NamedTuple):
    feature: int
    threshold: float
    impurity: float


def best_split(rows: np.ndarray, labels: np.ndarray, num_classes: int,
               features: Sequence[int]) -> Optional[Split]:
    """Split with the lowest weighted Gini impurity among given features.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values.  Returns None if every candidate feature is constant.
    """
    count = labels.shape[0]
    onehot = np.zeros((count, num_classes), dtype=np.int64)
    total = np.bincount(labels, minlength=num_classes)
    best = None
    for feature in features:
        order = np.argsort(rows[:, feature], kind='stable')
        values = rows[order, feature]
        valid = np.flatnonzero(values[:-1] < values[1:])
        if valid.size == 0:
            continue
        onehot[:] = 0
        onehot[np.arange(count), labels[order]] = 1
        left = np.cumsum(onehot, axis=0)[valid]
        right = total - left
        n_left = (valid + 1).astype(np.float64)
        n_right = count - n_left
        impurity = (n_left * gini(left) + n_right * gini(right)) / count
        pos = int(np.argmin(impurity))
        if best is None or impurity[pos] < best.impurity:
            lo, hi = values[valid[pos]], values[valid[pos] + 1]
            threshold = (lo + hi) / 2.0
            if not lo <= threshold < hi:
                threshold = lo
            best = Split(int(feature), float(threshold), float(impurity[pos]))
    return best


def train_tree(rows: np.ndarray,
               labels: np.ndarray,
               label_names: Sequence[str],
               max_depth: Optional[int] = None,
               min_samples_split: int = 2,
               rng: Optional[SeededRng] = None,
               features_per_split: Optional[int] = None) -> DecisionTree:
    """Grow a CART tree with Gini impurity.

    A node becomes a leaf when it is pure, has fewer than min_samples_split
    rows, sits at max_depth, or no feature can separate its rows.  With
    features_per_split set, each split looks at a random feature subset
    first and falls back to all features only if that subset is constant.
    """
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if rows.shape[0] == 0:
        raise BaselineError('cannot train a tree on zero rows')
    if rows.shape[0] != labels.shape[0]:
        raise ShapeError('{} rows but {} labels'.format(
            rows.shape[0], labels.shape[0]))
    num_classes = len(label_names)
    n_features = rows.shape[1]
    subset = features_per_split if features_per_split and \
        features_per_split < n_features else None
    assert subset is None or rng is not None, 'feature subsets need an rng'

    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    counts: List[np.ndarray] = []

    def new_node(members):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        counts.append(np.bincount(labels[members], minlength=num_classes))
        return len(feature) - 1

    stack = [(new_node(np.arange(rows.shape[0])), np.arange(rows.shape[0]),
              0)]
    while stack:
        node, members, depth = stack.pop()
        node_labels = labels[members]
        if np.count_nonzero(counts[node]) <= 1 or \
           members.size < min_samples_split or \
           (max_depth is not None and depth >= max_depth):
            continue
        node_rows = rows[members]
        if subset is not None:
            candidates = np.sort(rng.choice(n_features, subset))
            split = best_split(node_rows, node_labels, num_classes,
                               candidates)
            if split is None:
                split = best_split(node_rows, node_labels, num_classes,
                                   range(n_features))
        else:
            split = best_split(node_rows, node_labels, num_classes,
                               range(n_features))
        if split is None:
            continue
        goes_left = node_rows[:, split.feature] <= split.threshold
        feature[node] = split.feature
        threshold[node] = split.threshold
        left_members = members[goes_left]
        right_members = members[~goes_left]
        left[node] = new_node(left_members)
        right[node] = new_node(right_members)
        # right first so the left subtree is grown (and numbered) first
        stack.append((right[node], right_members, depth + 1))
        stack.append((left[node], left_members, depth + 1))

    return DecisionTree(feature, threshold, left, right, np.array(counts),
                        label_names)


class ForestConfig(NamedTuple):
    n_trees: int = 100
    features_per_split: Optional[int] = None
    bootstrap: bool = True
    max_depth: Optional[int] = None

    def resolve(self, n_features: int) -> 'ForestConfig':
        """Fill in the default feature subset size ceil(sqrt(d))."""
        per_split = self.features_per_split or \
            int(math.ceil(math.sqrt(n_features)))
        if self.n_trees < 1:
            raise ValueError('a forest needs at least one tree')
        if not 1 <= per_split <= n_features:
            raise ValueError('features_per_split must lie in [1, {}]'.format(
                n_features))
        return self._replace(features_per_split=per_split)


class RandomForest(RowModel):
    """Bagged CART trees; majority vote, ties to the lowest class index."""

    kind = 'forest'

    def __init__(self, trees: Sequence[DecisionTree], config: ForestConfig,
                 label_names: Sequence[str]):
        self.trees = list(trees)
        self.config = config
        self.label_names = tuple(label_names)

    def tree_votes(self, rows: np.ndarray) -> np.ndarray:
        """(rows, trees) matrix of per-tree predictions."""
        return np.stack([tree.predict_rows(rows) for tree in self.trees],
                        axis=1)

    def predict_proba_rows(self, rows: np.ndarray) -> np.ndarray:
        """Fraction of trees voting for each class."""
        votes = self.tree_votes(rows)
        share = np.zeros((votes.shape[0], len(self.label_names)))
        for k in range(len(self.label_names)):
            share[:, k] = np.mean(votes == k, axis=1)
        return share


def train_forest(rows: np.ndarray,
                 labels: np.ndarray,
                 label_names: Sequence[str],
                 config: ForestConfig,
                 seed: int,
                 jobs: int = 1) -> RandomForest:
    """Train config.n_trees trees; tree k draws from stream seed + k."""
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if rows.shape[0] == 0:
        raise BaselineError('cannot train a forest on zero rows')
    config = config.resolve(rows.shape[1])
    base = SeededRng(seed)

    def grow(index):
        rng = base.spawn(index)
        if config.bootstrap:
            sample = rng.integers(0, rows.shape[0], rows.shape[0])
        else:
            sample = np.arange(rows.shape[0])
        return train_tree(rows[sample], labels[sample], label_names,
                          max_depth=config.max_depth, rng=rng,
                          features_per_split=config.features_per_split)

    trees = toolbox.ordered_map(grow, range(config.n_trees), jobs)
    log('forest: {} trees, {} nodes in total'.format(
        len(trees), sum(t.n_nodes for t in trees)))
    return RandomForest(trees, config, label_names)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class FcnnModel(RowModel):
    """ReLU multilayer perceptron with a softmax head, one row as input."""

    kind = 'fcnn'

    def __init__(self, config: lstm.ModelConfig, params: ParamSet,
                 label_names: Sequence[str]):
        self.config = config
        self.params = dict(params)
        self.label_names = tuple(label_names)

    @property
    def n_layers(self) -> int:
        return len(self.config.hidden_sizes)

    @property
    def n_features(self) -> int:
        return int(self.params['dense0.W'].shape[1])

    def with_params(self, params: ParamSet) -> 'FcnnModel':
        model = FcnnModel(self.config, params, self.label_names)
        model.scaler = self.scaler
        model.feature_names = self.feature_names
        return model

    def param_set(self) -> ParamSet:
        return dict(self.params)

    def _forward(self, rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.n_features:
            raise ShapeError('model expects rows of {} features, got shape '
                             '{}'.format(self.n_features, rows.shape))
        activations = [rows]
        for num in range(self.n_layers):
            pre = activations[-1] @ self.params['dense{}.W'.format(num)].T + \
                self.params['dense{}.b'.format(num)]
            activations.append(relu(pre))
        logits = activations[-1] @ self.params['head.W_out'].T + \
            self.params['head.b_out']
        return logits, activations

    def predict_proba_rows(self, rows: np.ndarray) -> np.ndarray:
        logits, _ = self._forward(rows)
        return lstm.softmax(logits)

    def gradients(self, rows: np.ndarray,
                  labels: np.ndarray) -> Tuple[ParamSet, float]:
        """Mean cross-entropy gradients over a batch of rows."""
        labels = np.asarray(labels, dtype=np.int64)
        logits, activations = self._forward(rows)
        batch = logits.shape[0]
        delta = lstm.softmax(logits)
        delta[np.arange(batch), labels] -= 1.0
        delta /= batch
        grads = {
            'head.W_out': delta.T @ activations[-1],
            'head.b_out': delta.sum(axis=0),
        }
        upstream = delta @ self.params['head.W_out']
        for num in reversed(range(self.n_layers)):
            dpre = upstream * (activations[num + 1] > 0)
            grads['dense{}.W'.format(num)] = dpre.T @ activations[num]
            grads['dense{}.b'.format(num)] = dpre.sum(axis=0)
            upstream = dpre @ self.params['dense{}.W'.format(num)]
        return grads, lstm.logits_loss(logits, labels)

    def to_state(self):
        return dict(self.params)


def init_fcnn(config: lstm.ModelConfig, n_features: int,
              label_names: Sequence[str], rng: SeededRng) -> FcnnModel:
    config.validate()
    params = {}
    inputs = n_features
    for num, hidden in enumerate(config.hidden_sizes):
        params['dense{}.W'.format(num)] = glorot_init(hidden, inputs, rng)
        params['dense{}.b'.format(num)] = np.zeros(hidden)
        inputs = hidden
    params['head.W_out'] = glorot_init(len(label_names), inputs, rng)
    params['head.b_out'] = np.zeros(len(label_names))
    return FcnnModel(config, params, label_names)


def _vote_f1(model: RowModel, val_xy) -> float:
    x_val, y_val = val_xy
    pred, _ = model.predict_windows(x_val)
    return metrics.macro_f1(y_val, pred, len(model.label_names))


def train_fcnn(rows: np.ndarray, labels: np.ndarray, val_windows,
               config: lstm.ModelConfig,
               seed: int) -> Tuple[FcnnModel, List[lstm.EpochRecord]]:
    """Train the per-row network with the LSTM's Adam / early-stop loop.

    Validation macro-F1 is measured on voted windows, like evaluation.
    """
    rows = np.asarray(rows, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    label_names = val_windows.label_names
    if rows.shape[0] == 0 or val_windows.count == 0:
        raise lstm.EmptyDatasetError('training rows and validation windows '
                                     'are required')
    if labels.shape != (rows.shape[0], ):
        raise ShapeError('{} rows but {} labels'.format(
            rows.shape[0], labels.size))
    per_class = np.bincount(labels, minlength=len(label_names))
    if per_class.size > len(label_names):
        raise BaselineError('labels beyond the {} known drivers'.format(
            len(label_names)))
    if per_class.min() == 0:
        missing = [n for n, c in zip(label_names, per_class) if c == 0]
        raise BaselineError('no training rows for driver(s): {}'.format(
            ', '.join(missing)))
    config = config._replace(num_classes=len(label_names))
    rng = SeededRng(seed)
    model = init_fcnn(config, rows.shape[1], label_names, rng)
    return lstm.fit(model, model.param_set(), (rows, labels),
                    (val_windows.windows, val_windows.labels), config, rng,
                    _vote_f1, name='fcnn')
