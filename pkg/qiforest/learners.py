"""
Base regressors: a fully grown CART regression tree and a least-squares
linear model, each trained on one fixed feature subset.

Both sit behind the same contract: train on (x, y, subset) where x has the
full dimensionality m, predict from rows of full dimensionality, project onto
the subset internally.
"""

import enum
from dataclasses import dataclass

import numpy as np

from qiforest.errors import InvalidInput
from qiforest.matrix_core import as_data_matrix, as_target_vector, ols_solve
from qiforest.qis import FeatureSubset

LEAF = -1

# a split must remove more than this fraction of the node's SSE
_MIN_RELATIVE_GAIN = 1e-12


class LearnerKind(str, enum.Enum):
    TREE = "tree"
    LINEAR = "linear"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidInput(f"unknown learner kind {value!r} (choose from tree, linear)") from None


@dataclass(frozen=True)
class RegressionTree:
    """
    Binary regression tree stored as parallel node arrays.

    Node 0 is the root. For internal nodes `feature` holds the column index
    within the learner's subset and rows with value <= threshold go left.
    Leaves have feature == LEAF and predict `value`, the mean of their
    training targets.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self):
        return int(self.feature.shape[0])

    @property
    def leaf_count(self):
        return int(np.count_nonzero(self.feature == LEAF))

    @property
    def depth(self):
        depths = np.zeros(self.node_count, dtype=np.intp)
        for node in range(self.node_count):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, x_subset):
        """Leaf index reached by every row of a subset-projected matrix."""
        nodes = np.zeros(x_subset.shape[0], dtype=np.intp)
        rows = np.arange(x_subset.shape[0])
        active = self.feature[nodes] != LEAF
        while np.any(active):
            r = rows[active]
            n = nodes[r]
            goes_left = x_subset[r, self.feature[n]] <= self.threshold[n]
            nodes[r] = np.where(goes_left, self.left[n], self.right[n])
            active = self.feature[nodes] != LEAF
        return nodes

    def predict(self, x_subset):
        return self.value[self.apply(x_subset)]


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    intercept: float

    def predict(self, x_subset):
        return x_subset @ self.weights + self.intercept


@dataclass(frozen=True)
class TrainedLearner:
    """A trained base regressor together with the feature subset it sees."""

    kind: LearnerKind
    model: object
    subset: FeatureSubset
    n_features: int

    def project(self, x):
        if x.shape[1] != self.n_features:
            raise InvalidInput(
                f"learner expects {self.n_features} features, got {x.shape[1]}"
            )
        return x[:, self.subset.as_array()]


def _check_training_input(x, y, subset):
    x = as_data_matrix(x)
    y = as_target_vector(y, n_rows=x.shape[0])
    if not isinstance(subset, FeatureSubset):
        subset = FeatureSubset(tuple(subset))
    if subset.indices[-1] >= x.shape[1]:
        raise InvalidInput(f"feature subset {subset.indices} out of range for {x.shape[1]} features")
    return x, y, subset


def _best_split(x_node, y_node):
    """
    Exhaustive best split of one node.

    Scans every feature in index order and every midpoint between consecutive
    distinct sorted values, maximising the SSE reduction. Ties keep the lowest
    feature index, then the lowest threshold.

    Returns:
        (feature, threshold, gain) or None when no candidate exists
    """
    n = y_node.shape[0]
    # centred targets keep the gain formula free of cancellation
    y_node = y_node - y_node.mean()
    total = y_node.sum()
    parent_term = total * total / n

    best = None
    for feature in range(x_node.shape[1]):
        order = np.argsort(x_node[:, feature], kind="stable")
        xs = x_node[order, feature]
        ys = y_node[order]

        distinct = np.flatnonzero(xs[:-1] < xs[1:])
        if distinct.size == 0:
            continue

        left_sum = np.cumsum(ys)[distinct]
        left_n = distinct + 1.0
        right_sum = total - left_sum
        right_n = n - left_n
        # SSE reduction = left_sum^2/left_n + right_sum^2/right_n - total^2/n
        gains = left_sum**2 / left_n + right_sum**2 / right_n - parent_term

        position = int(np.argmax(gains))
        gain = float(gains[position])
        if best is None or gain > best[2]:
            i = distinct[position]
            threshold = 0.5 * (xs[i] + xs[i + 1])
            if not xs[i] <= threshold < xs[i + 1]:
                # adjacent floats: the midpoint rounds onto the upper value
                threshold = xs[i]
            best = (feature, float(threshold), gain)
    return best


def _grow_tree(x, y):
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(rows):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[rows].mean()))
        return len(feature) - 1

    root = new_node(np.arange(y.shape[0]))
    stack = [(root, np.arange(y.shape[0]))]
    while stack:
        node, rows = stack.pop()
        y_node = y[rows]
        if rows.shape[0] < 2 or np.all(y_node == y_node[0]):
            continue

        split = _best_split(x[rows], y_node)
        if split is None:
            continue
        node_sse = float(np.sum((y_node - y_node.mean()) ** 2))
        split_feature, split_threshold, gain = split
        if gain <= _MIN_RELATIVE_GAIN * node_sse:
            continue

        goes_left = x[rows, split_feature] <= split_threshold
        left_rows, right_rows = rows[goes_left], rows[~goes_left]

        feature[node] = split_feature
        threshold[node] = split_threshold
        left[node] = new_node(left_rows)
        right[node] = new_node(right_rows)
        stack.append((right[node], right_rows))
        stack.append((left[node], left_rows))

    return RegressionTree(
        feature=np.asarray(feature, dtype=np.intp),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.intp),
        right=np.asarray(right, dtype=np.intp),
        value=np.asarray(value, dtype=np.float64),
    )


def train_tree(x, y, subset):
    """
    Fully grown CART regression tree on the subset columns of x.

    No depth limit and no minimum leaf size: growth stops only at pure nodes
    or when no split reduces the squared error.
    """
    x, y, subset = _check_training_input(x, y, subset)
    tree = _grow_tree(x[:, subset.as_array()], y)
    return TrainedLearner(LearnerKind.TREE, tree, subset, x.shape[1])


def train_linear(x, y, subset):
    """Least-squares linear model with intercept on the subset columns of x."""
    x, y, subset = _check_training_input(x, y, subset)
    xs = x[:, subset.as_array()]
    x_mean = xs.mean(axis=0)
    y_mean = float(y.mean())
    weights = ols_solve(xs - x_mean, y - y_mean)
    intercept = y_mean - float(x_mean @ weights)
    return TrainedLearner(LearnerKind.LINEAR, LinearModel(weights, intercept), subset, x.shape[1])


def train_learner(kind, x, y, subset):
    if LearnerKind.parse(kind) is LearnerKind.TREE:
        return train_tree(x, y, subset)
    return train_linear(x, y, subset)


def predict_many(learner, x):
    """Predictions for every row of a full-dimensional matrix."""
    x = as_data_matrix(x)
    return learner.model.predict(learner.project(x))


def predict(learner, x_row):
    """Prediction for one full-dimensional feature vector."""
    row = np.asarray(x_row, dtype=np.float64)
    if row.ndim != 1:
        raise InvalidInput(f"expected a single feature vector, got shape {row.shape}")
    return float(predict_many(learner, row[np.newaxis, :])[0])
