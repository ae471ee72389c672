"""CART trees, random forest and gradient boosting."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
import logging
import math
from typing import Any

import numpy as np
from scipy.special import logsumexp, softmax

from .const import (
    CONF_BOOTSTRAP,
    CONF_LEARNING_RATE,
    CONF_MAX_DEPTH,
    CONF_MAX_FEATURES,
    CONF_MIN_LEAF,
    CONF_N_ROUNDS,
    CONF_N_TREES,
    KIND_GB,
    KIND_RF,
    N_CLASSES,
)
from .learners import MAX_HALVINGS, Classifier
from .utils import one_hot

_LOGGER = logging.getLogger(__name__)

LEAF = -1


@dataclass(eq=False)
class DecisionTree:
    """Binary tree in parallel arrays; node 0 is the root.

    ``feature`` is LEAF for leaves. Rows with ``x[feature] <= threshold`` go
    left. ``value`` holds one output vector per node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def node_count(self) -> int:
        """Number of nodes, leaves included."""
        return int(self.feature.shape[0])

    @property
    def depth(self) -> int:
        """Length of the longest root-to-leaf path."""
        depths = np.zeros(self.node_count, dtype=np.int64)
        for node in range(self.node_count):
            if self.feature[node] != LEAF:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Index of the leaf each row falls into."""
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[nodes] != LEAF)
        while active.size:
            current = nodes[active]
            go_left = X[active, self.feature[current]] <= self.threshold[current]
            nodes[active] = np.where(go_left, self.left[current], self.right[current])
            active = active[self.feature[nodes[active]] != LEAF]
        return nodes

    def predict_value(self, X: np.ndarray) -> np.ndarray:
        """Leaf output vector per row."""
        return self.value[self.apply(X)]

    def to_dict(self) -> dict[str, list]:
        """JSON-friendly form."""
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> DecisionTree:
        """Inverse of to_dict."""
        tree = cls(
            feature=np.asarray(data["feature"], dtype=np.int64),
            threshold=np.asarray(data["threshold"], dtype=np.float64),
            left=np.asarray(data["left"], dtype=np.int64),
            right=np.asarray(data["right"], dtype=np.int64),
            value=np.asarray(data["value"], dtype=np.float64),
        )
        n = tree.node_count
        if not (tree.threshold.shape[0] == tree.left.shape[0] == tree.right.shape[0] == n):
            raise ValueError("tree arrays differ in length")
        if tree.value.ndim != 2 or tree.value.shape[0] != n:
            raise ValueError("tree values must hold one row per node")
        return tree


def _best_split(
    X: np.ndarray,
    targets: np.ndarray,
    features: np.ndarray,
    min_leaf: int,
) -> tuple[int, float] | None:
    """Best (feature, threshold) among ``features`` or None.

    Maximizes sum(left_sums**2)/n_left + sum(right_sums**2)/n_right, which
    minimizes Gini impurity for one-hot targets and squared error for
    real-valued ones. Splits only fall between distinct feature values.
    """
    n = X.shape[0]
    sizes = np.arange(1, n, dtype=np.float64)
    best_score = -math.inf
    best: tuple[int, float] | None = None
    totals = targets.sum(axis=0)
    for feature in features:
        order = np.argsort(X[:, feature], kind="stable")
        values = X[order, feature]
        left_sums = np.cumsum(targets[order], axis=0)[:-1]
        right_sums = totals - left_sums
        valid = (values[1:] > values[:-1]) & (sizes >= min_leaf) & (n - sizes >= min_leaf)
        if not valid.any():
            continue
        scores = (left_sums**2).sum(axis=1) / sizes + (right_sums**2).sum(axis=1) / (n - sizes)
        scores[~valid] = -math.inf
        position = int(np.argmax(scores))
        if scores[position] > best_score:
            best_score = float(scores[position])
            low, high = values[position], values[position + 1]
            threshold = (low + high) / 2.0
            if not low <= threshold < high:
                threshold = low
            best = (int(feature), float(threshold))
    return best


def grow_tree(
    X: np.ndarray,
    targets: np.ndarray,
    *,
    max_depth: int | None,
    min_leaf: int,
    max_features: int | None,
    rng: np.random.Generator,
) -> DecisionTree:
    """Grow a CART tree on ``targets`` (one-hot classes or real residuals).

    At every node ``max_features`` candidate features are drawn; when none
    of them admits a split the remaining features are tried before the node
    becomes a leaf. Leaf values are target means.
    """
    n_features = X.shape[1]
    draw = n_features if max_features is None else max(1, min(max_features, n_features))

    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    value: list[np.ndarray] = []

    def _new_node(rows: np.ndarray) -> int:
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(targets[rows].mean(axis=0))
        return len(feature) - 1

    stack = [(_new_node(np.arange(X.shape[0])), np.arange(X.shape[0]), 0)]
    while stack:
        node, rows, depth = stack.pop()
        node_targets = targets[rows]
        if (
            (max_depth is not None and depth >= max_depth)
            or rows.size < 2 * min_leaf
            or not np.ptp(node_targets, axis=0).any()
        ):
            continue
        permutation = rng.permutation(n_features)
        node_X = X[rows]
        split = _best_split(node_X, node_targets, permutation[:draw], min_leaf)
        if split is None and draw < n_features:
            split = _best_split(node_X, node_targets, permutation[draw:], min_leaf)
        if split is None:
            continue
        feature[node], threshold[node] = split
        goes_left = node_X[:, split[0]] <= split[1]
        left_rows, right_rows = rows[goes_left], rows[~goes_left]
        left[node] = _new_node(left_rows)
        right[node] = _new_node(right_rows)
        stack.append((right[node], right_rows, depth + 1))
        stack.append((left[node], left_rows, depth + 1))

    return DecisionTree(
        feature=np.asarray(feature, dtype=np.int64),
        threshold=np.asarray(threshold, dtype=np.float64),
        left=np.asarray(left, dtype=np.int64),
        right=np.asarray(right, dtype=np.int64),
        value=np.vstack(value),
    )


# ── Random forest ─────────────────────────────────────────────


class RandomForestClassifier(Classifier):
    """Bagged Gini trees; probabilities are the fraction of tree votes."""

    kind = KIND_RF

    def __init__(self, hyperparameters: Mapping[str, Any] | None = None, seed: int = 0) -> None:
        super().__init__(hyperparameters, seed)
        self.trees: list[DecisionTree] = []

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        hp = self.hyperparameters
        n = X.shape[0]
        max_features = hp[CONF_MAX_FEATURES] or math.ceil(math.sqrt(X.shape[1]))
        targets = one_hot(y, N_CLASSES)
        self.trees = []
        for child in np.random.SeedSequence(self.seed).spawn(int(hp[CONF_N_TREES])):
            rng = np.random.default_rng(child)
            rows = rng.integers(0, n, size=n) if hp[CONF_BOOTSTRAP] else np.arange(n)
            self.trees.append(
                grow_tree(
                    X[rows],
                    targets[rows],
                    max_depth=hp[CONF_MAX_DEPTH],
                    min_leaf=int(hp[CONF_MIN_LEAF]),
                    max_features=int(max_features),
                    rng=rng,
                )
            )
        _LOGGER.debug(
            "Random forest: %d trees, mean depth %.1f",
            len(self.trees),
            float(np.mean([tree.depth for tree in self.trees])),
        )

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros((X.shape[0], N_CLASSES))
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            votes[rows, np.argmax(tree.predict_value(X), axis=1)] += 1.0
        return votes / len(self.trees)

    def _get_state(self) -> dict[str, Any]:
        return {"trees": [tree.to_dict() for tree in self.trees]}

    def _set_state(self, state: Mapping[str, Any]) -> None:
        self.trees = [DecisionTree.from_dict(tree) for tree in state["trees"]]
        if not self.trees:
            raise ValueError("random forest without trees")


# ── Gradient boosting ─────────────────────────────────────────


def multinomial_log_loss(scores: np.ndarray, y: np.ndarray) -> float:
    """Mean multinomial deviance of raw class scores."""
    return float(np.mean(logsumexp(scores, axis=1) - scores[np.arange(y.shape[0]), y]))


class GradientBoostingClassifier(Classifier):
    """Multinomial-deviance boosting with one regression tree per class and round.

    Scores start at zero (uniform probabilities). Leaf values take one Newton
    step on the deviance. A round whose shrunken step would raise the
    training loss is halved until it does not; the accepted factor is kept in
    ``shrinkage``.
    """

    kind = KIND_GB

    def __init__(self, hyperparameters: Mapping[str, Any] | None = None, seed: int = 0) -> None:
        super().__init__(hyperparameters, seed)
        self.rounds: list[list[DecisionTree]] = []
        self.shrinkage: list[float] = []
        self.constant_class: int | None = None
        self.loss_trace: list[float] = []

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        hp = self.hyperparameters
        n_rounds = int(hp[CONF_N_ROUNDS])
        self.rounds, self.shrinkage, self.constant_class = [], [], None
        present = np.unique(y)
        if present.size == 1 and n_rounds > 0:
            self.constant_class = int(present[0])
            self.loss_trace = [0.0]
            return

        rng = np.random.default_rng(self.seed)
        targets = one_hot(y, N_CLASSES)
        scores = np.zeros((X.shape[0], N_CLASSES))
        loss = multinomial_log_loss(scores, y)
        self.loss_trace = [loss]
        factor = (N_CLASSES - 1) / N_CLASSES
        step = float(hp[CONF_LEARNING_RATE])

        for _ in range(n_rounds):
            residuals = targets - softmax(scores, axis=1)
            trees: list[DecisionTree] = []
            update = np.zeros_like(scores)
            for k in range(N_CLASSES):
                tree = grow_tree(
                    X,
                    residuals[:, [k]],
                    max_depth=int(hp[CONF_MAX_DEPTH]),
                    min_leaf=int(hp[CONF_MIN_LEAF]),
                    max_features=None,
                    rng=rng,
                )
                leaves = tree.apply(X)
                r = residuals[:, k]
                numerator = np.bincount(leaves, weights=r, minlength=tree.node_count)
                denominator = np.bincount(
                    leaves, weights=np.abs(r) * (1.0 - np.abs(r)), minlength=tree.node_count
                )
                safe = denominator > 1e-12
                tree.value[:, 0] = np.where(
                    safe, factor * numerator / np.where(safe, denominator, 1.0), 0.0
                )
                trees.append(tree)
                update[:, k] = tree.value[leaves, 0]

            shrink = step
            for _ in range(MAX_HALVINGS):
                new_loss = multinomial_log_loss(scores + shrink * update, y)
                if new_loss <= loss:
                    break
                shrink /= 2.0
            else:
                shrink, new_loss = 0.0, loss
            scores = scores + shrink * update
            loss = new_loss
            self.rounds.append(trees)
            self.shrinkage.append(shrink)
            self.loss_trace.append(loss)

        _LOGGER.debug(
            "Gradient boosting: %d rounds, loss %.6g -> %.6g",
            len(self.rounds),
            self.loss_trace[0],
            self.loss_trace[-1],
        )

    def decision_scores(self, X: np.ndarray) -> np.ndarray:
        """Raw per-class scores of prepared rows."""
        scores = np.zeros((X.shape[0], N_CLASSES))
        for shrink, trees in zip(self.shrinkage, self.rounds):
            for k, tree in enumerate(trees):
                scores[:, k] += shrink * tree.predict_value(X)[:, 0]
        return scores

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        if self.constant_class is not None:
            return one_hot(np.full(X.shape[0], self.constant_class), N_CLASSES)
        return softmax(self.decision_scores(X), axis=1)

    def _get_state(self) -> dict[str, Any]:
        return {
            "constant_class": self.constant_class,
            "shrinkage": list(self.shrinkage),
            "rounds": [[tree.to_dict() for tree in trees] for trees in self.rounds],
        }

    def _set_state(self, state: Mapping[str, Any]) -> None:
        constant = state["constant_class"]
        self.constant_class = None if constant is None else int(constant)
        self.shrinkage = [float(s) for s in state["shrinkage"]]
        self.rounds = [
            [DecisionTree.from_dict(tree) for tree in trees] for trees in state["rounds"]
        ]
        if len(self.rounds) != len(self.shrinkage):
            raise ValueError("one shrinkage factor per boosting round expected")
        if any(len(trees) != N_CLASSES for trees in self.rounds):
            raise ValueError(f"each boosting round needs {N_CLASSES} trees")
