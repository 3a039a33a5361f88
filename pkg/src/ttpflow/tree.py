"""Binary decision trees grown by maximising class-weighted Gini gain.

CART-style axis-aligned splits: candidate thresholds are midpoints between
consecutive distinct sorted feature values, a node sends `feature <= threshold`
left and the rest right, growth stops on purity, depth, minimum leaf size, or
absence of a positive-gain split. The only randomness is the seeded feature
evaluation order, which decides ties between equal-gain splits; everything
else is deterministic, so identical inputs yield structurally identical trees.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import SingleClassError

LABEL_BENIGN = 0
LABEL_MALICIOUS = 1


@dataclass
class TreeNode:
    """One node; internal nodes carry a split, every node keeps its training tallies."""

    n: int
    weight_benign: float
    weight_malicious: float
    feature: int | None = None
    threshold: float | None = None
    gain: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def prediction(self) -> int:
        # Ties in weighted mass resolve to malicious (fail-safe).
        return LABEL_MALICIOUS if self.weight_malicious >= self.weight_benign else LABEL_BENIGN


class DecisionTree:
    """A trained tree plus the hyperparameters and seed that produced it."""

    def __init__(self, root: TreeNode, max_depth: int | None, min_leaf: int,
                 seed: int, n_features: int):
        self.root = root
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.seed = seed
        self.n_features = n_features

    # -- prediction ---------------------------------------------------------

    def predict(self, x) -> tuple[int, list[tuple[int, str, float]]]:
        """Classify one vector; also return the predicate path taken.

        The path is the ordered conjunction of (feature, comparator, threshold)
        tests satisfied on the way to the leaf; evaluating it against `x` is
        always true.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n_features,):
            raise ValueError(
                f"expected vector of dimension {self.n_features}, got shape {x.shape}"
            )
        node = self.root
        path: list[tuple[int, str, float]] = []
        while not node.is_leaf:
            if x[node.feature] <= node.threshold:
                path.append((node.feature, "<=", node.threshold))
                node = node.left
            else:
                path.append((node.feature, ">", node.threshold))
                node = node.right
        return node.prediction, path

    def predict_label(self, x, depth_limit: int | None = None) -> int:
        """Label only; `depth_limit` evaluates the tree as if cut at that depth."""
        x = np.asarray(x, dtype=np.float64)
        node = self.root
        depth = 0
        while not node.is_leaf and (depth_limit is None or depth < depth_limit):
            node = node.left if x[node.feature] <= node.threshold else node.right
            depth += 1
        return node.prediction

    def predict_many(self, X, depth_limit: int | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return np.array([self.predict_label(x, depth_limit) for x in X], dtype=np.int64)

    # -- structure ----------------------------------------------------------

    def nodes_preorder(self) -> list[tuple[TreeNode, int]]:
        """(node, depth) pairs in preorder, iteratively (trees may be deep)."""
        out = []
        stack = [(self.root, 0)]
        while stack:
            node, depth = stack.pop()
            out.append((node, depth))
            if not node.is_leaf:
                stack.append((node.right, depth + 1))
                stack.append((node.left, depth + 1))
        return out

    def depth(self) -> int:
        return max(d for _, d in self.nodes_preorder())

    def n_leaves(self) -> int:
        return sum(1 for node, _ in self.nodes_preorder() if node.is_leaf)

    def truncated(self, depth: int) -> "DecisionTree":
        """A copy evaluated as if grown with max_depth=depth.

        Internal nodes at the cut become leaves predicting from their stored
        weighted tallies; this is exactly the tree the grower would have built
        with that bound, because growth is top-down and split choices do not
        look ahead.
        """
        def cut(node: TreeNode, level: int) -> TreeNode:
            if node.is_leaf or level >= depth:
                return TreeNode(node.n, node.weight_benign, node.weight_malicious)
            return TreeNode(
                node.n, node.weight_benign, node.weight_malicious,
                feature=node.feature, threshold=node.threshold, gain=node.gain,
                left=cut(node.left, level + 1), right=cut(node.right, level + 1),
            )

        return DecisionTree(cut(self.root, 0), depth, self.min_leaf, self.seed,
                            self.n_features)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        order = [node for node, _ in self.nodes_preorder()]
        index = {id(node): i for i, node in enumerate(order)}
        nodes = []
        for node in order:
            nodes.append({
                "feature": node.feature,
                "threshold": node.threshold,
                "gain": node.gain,
                "n": node.n,
                "weight_benign": node.weight_benign,
                "weight_malicious": node.weight_malicious,
                "left": None if node.is_leaf else index[id(node.left)],
                "right": None if node.is_leaf else index[id(node.right)],
            })
        return {
            "kind": "decision_tree",
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "seed": self.seed,
            "n_features": self.n_features,
            "nodes": nodes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DecisionTree":
        raw = data["nodes"]
        nodes = [
            TreeNode(
                n=item["n"],
                weight_benign=item["weight_benign"],
                weight_malicious=item["weight_malicious"],
                feature=item["feature"],
                threshold=item["threshold"],
                gain=item["gain"],
            )
            for item in raw
        ]
        for node, item in zip(nodes, raw):
            if item["left"] is not None:
                node.left = nodes[item["left"]]
                node.right = nodes[item["right"]]
        return cls(nodes[0], data["max_depth"], data["min_leaf"], data["seed"],
                   data["n_features"])

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as stream:
            json.dump(self.to_dict(), stream, indent=1, sort_keys=True)
            stream.write("\n")

    @classmethod
    def load(cls, path) -> "DecisionTree":
        with open(path, encoding="utf-8") as stream:
            return cls.from_dict(json.load(stream))


def _best_split(X: np.ndarray, w0: np.ndarray, w1: np.ndarray, min_leaf: int,
                feature_order: np.ndarray) -> tuple[int, float, float] | None:
    """Highest weighted-Gini-gain split over all features and midpoints.

    Returns (feature, threshold, gain) or None when no candidate has strictly
    positive gain. Ties go to the earliest feature in `feature_order`, then to
    the lowest threshold within a feature.
    """
    n = X.shape[0]
    if n < 2 * min_leaf or n < 2:
        return None

    order = np.argsort(X, axis=0, kind="stable")
    Xs = np.take_along_axis(X, order, axis=0)
    W0 = np.cumsum(w0[order], axis=0)
    W1 = np.cumsum(w1[order], axis=0)
    tot0 = W0[-1, 0]
    tot1 = W1[-1, 0]
    total = tot0 + tot1
    parent_gini = 1.0 - (tot0 / total) ** 2 - (tot1 / total) ** 2

    left_counts = np.arange(1, n)
    size_ok = (left_counts >= min_leaf) & ((n - left_counts) >= min_leaf)
    valid = (Xs[:-1] != Xs[1:]) & size_ok[:, None]
    if not valid.any():
        return None

    WL0, WL1 = W0[:-1], W1[:-1]
    WL = WL0 + WL1
    WR0, WR1 = tot0 - WL0, tot1 - WL1
    WR = WR0 + WR1
    gini_left = 1.0 - (WL0 / WL) ** 2 - (WL1 / WL) ** 2
    gini_right = 1.0 - (WR0 / WR) ** 2 - (WR1 / WR) ** 2
    gains = parent_gini - (WL * gini_left + WR * gini_right) / total
    gains[~valid] = -np.inf

    best: tuple[int, float, float] | None = None
    best_gain = 0.0
    for feat in feature_order:
        pos = int(np.argmax(gains[:, feat]))
        gain = float(gains[pos, feat])
        if gain > best_gain:
            lo, hi = Xs[pos, feat], Xs[pos + 1, feat]
            threshold = (lo + hi) / 2.0
            if threshold >= hi:  # adjacent floats: keep the partition exact
                threshold = float(lo)
            best = (int(feat), float(threshold), gain)
            best_gain = gain
    return best


def train_tree(X, y, class_weight: tuple[float, float], max_depth: int | None = None,
               min_leaf: int = 1, seed: int = 0) -> DecisionTree:
    """Grow a tree greedily on (X, y) with per-class weights (benign, malicious).

    Raises :class:`SingleClassError` when `y` contains fewer than two classes.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) with one label per row")
    if X.shape[0] == 0 or np.unique(y).size < 2:
        raise SingleClassError("training data must contain both classes")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if max_depth is not None and max_depth < 0:
        raise ValueError("max_depth must be None or >= 0")

    w_benign, w_malicious = class_weight
    w0 = np.where(y == LABEL_BENIGN, w_benign, 0.0)
    w1 = np.where(y == LABEL_MALICIOUS, w_malicious, 0.0)
    feature_order = np.random.default_rng(seed).permutation(X.shape[1])

    def make_node(idx: np.ndarray) -> TreeNode:
        return TreeNode(
            n=int(idx.size),
            weight_benign=float(w0[idx].sum()),
            weight_malicious=float(w1[idx].sum()),
        )

    root = make_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if max_depth is not None and depth >= max_depth:
            continue
        if node.weight_benign == 0.0 or node.weight_malicious == 0.0:
            continue  # pure
        split = _best_split(X[idx], w0[idx], w1[idx], min_leaf, feature_order)
        if split is None:
            continue
        feature, threshold, gain = split
        node.feature, node.threshold, node.gain = feature, threshold, gain
        mask = X[idx, feature] <= threshold
        left_idx, right_idx = idx[mask], idx[~mask]
        node.left = make_node(left_idx)
        node.right = make_node(right_idx)
        stack.append((node.left, left_idx, depth + 1))
        stack.append((node.right, right_idx, depth + 1))
    return DecisionTree(root, max_depth, min_leaf, seed, X.shape[1])
