"""Independent reference implementations used to check the library's results.

Deliberately naive: plain loops and direct formula evaluation, sharing no code
with the implementations under test.
"""

from __future__ import annotations

import numpy as np


def gini_weighted(w_benign: float, w_malicious: float) -> float:
    total = w_benign + w_malicious
    if total == 0.0:
        return 0.0
    return 1.0 - (w_benign / total) ** 2 - (w_malicious / total) ** 2


def split_gain(X, y, weights, feature, threshold) -> float:
    """Weighted Gini gain of one explicit split, by direct evaluation."""
    left = X[:, feature] <= threshold
    right = ~left
    def mass(mask, label):
        return float(weights[mask & (y == label)].sum())
    w0, w1 = mass(np.ones(len(y), bool), 0), mass(np.ones(len(y), bool), 1)
    l0, l1 = mass(left, 0), mass(left, 1)
    r0, r1 = mass(right, 0), mass(right, 1)
    total = w0 + w1
    parent = gini_weighted(w0, w1)
    children = ((l0 + l1) * gini_weighted(l0, l1) + (r0 + r1) * gini_weighted(r0, r1)) / total
    return parent - children


def enumerate_candidates(X, min_leaf=1):
    """All (feature, midpoint) candidates whose sides both hold >= min_leaf rows."""
    n, d = X.shape
    for feature in range(d):
        values = np.sort(np.unique(X[:, feature]))
        for lo, hi in zip(values, values[1:]):
            threshold = (lo + hi) / 2.0
            if threshold >= hi:
                threshold = float(lo)
            n_left = int((X[:, feature] <= threshold).sum())
            if n_left >= min_leaf and (n - n_left) >= min_leaf:
                yield feature, threshold


def best_gain(X, y, weights, min_leaf=1) -> float:
    """Exhaustive-enumeration maximum weighted Gini gain."""
    best = 0.0
    for feature, threshold in enumerate_candidates(X, min_leaf):
        best = max(best, split_gain(X, y, weights, feature, threshold))
    return best


def node_training_subsets(tree, X):
    """Route the training matrix down the tree: node id -> row indices.

    Works from outside the implementation: only the public (feature,
    threshold, children) structure is used.
    """
    subsets = {}
    stack = [(tree.root, np.arange(len(X)))]
    while stack:
        node, idx = stack.pop()
        subsets[id(node)] = idx
        if node.is_leaf:
            continue
        mask = X[idx, node.feature] <= node.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return subsets


def trapezoid(points) -> float:
    """Trapezoidal area under fpr-sorted points, by直接 pairwise evaluation."""
    pts = sorted(points)
    area = 0.0
    for i in range(1, len(pts)):
        x0, y0 = pts[i - 1]
        x1, y1 = pts[i]
        area += (x1 - x0) * (y1 + y0) / 2.0
    return area
