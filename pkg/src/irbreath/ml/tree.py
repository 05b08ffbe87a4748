"""CART classification tree.

Binary splits ``f_j <= t`` chosen greedily to minimise the weighted child
impurity. Thresholds are midpoints between consecutive distinct values.
Ties are resolved deterministically: lowest feature index, then lowest
threshold; leaf votes go to the lowest label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

N_CLASSES = 8
# splits whose impurity differs by less than this are treated as tied
TIE_EPS = 1e-12


def _check_counts(counts) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 0):
        raise ValueError("class counts must be non-negative")
    if counts.sum() <= 0:
        raise ValueError("impurity of an empty node is undefined")
    return counts


def gini(counts) -> float:
    """Gini impurity ``1 - sum(p_i ** 2)``."""
    counts = _check_counts(counts)
    p = counts / counts.sum()
    return float(1.0 - np.sum(p * p))


def entropy(counts) -> float:
    """Shannon entropy in bits; empty classes contribute zero."""
    counts = _check_counts(counts)
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log2(p))) + 0.0


IMPURITY = {"gini": gini, "entropy": entropy}


@dataclass(frozen=True)
class SplitCandidate:
    feature: int
    threshold: float


@dataclass(frozen=True)
class TreeHyperparams:
    max_depth: Optional[int] = 10
    min_samples_split: int = 2
    impurity: str = "gini"

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.impurity not in IMPURITY:
            raise ValueError(f"unknown impurity {self.impurity!r}")


@dataclass
class TreeNode:
    counts: np.ndarray
    depth: int = 0
    split: Optional[SplitCandidate] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    # features the split search was allowed to look at
    candidates: tuple[int, ...] = field(default=(), repr=False)

    @property
    def is_leaf(self) -> bool:
        return self.split is None

    @property
    def prediction(self) -> int:
        return int(np.argmax(self.counts))

    @property
    def n_samples(self) -> int:
        return int(self.counts.sum())

    def iter_nodes(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)

    def max_depth(self) -> int:
        return max(node.depth for node in self.iter_nodes()) - self.depth


def split_quality(X, y, split: SplitCandidate, impurity: str = "gini", n_classes: int = N_CLASSES):
    """Weighted child impurity of ``split``, or ``None`` if one side is empty."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    mask = X[:, split.feature] <= split.threshold
    n_left = int(mask.sum())
    n = y.size
    if n_left == 0 or n_left == n:
        return None
    f = IMPURITY[impurity]
    left = np.bincount(y[mask], minlength=n_classes)
    right = np.bincount(y[~mask], minlength=n_classes)
    return n_left / n * f(left) + (n - n_left) / n * f(right)


def _child_impurity(cum: np.ndarray, total: np.ndarray, impurity: str) -> np.ndarray:
    """Weighted impurity for every prefix split given cumulative class counts."""
    n = total.sum()
    n_left = cum.sum(axis=1)
    n_right = n - n_left
    right = total - cum
    if impurity == "gini":
        g_left = n_left - np.sum(cum * cum, axis=1) / n_left
        g_right = n_right - np.sum(right * right, axis=1) / n_right
        return (g_left + g_right) / n
    with np.errstate(divide="ignore", invalid="ignore"):
        pl = cum / n_left[:, None]
        pr = right / n_right[:, None]
        hl = -np.sum(np.where(cum > 0, pl * np.log2(np.where(pl > 0, pl, 1.0)), 0.0), axis=1)
        hr = -np.sum(np.where(right > 0, pr * np.log2(np.where(pr > 0, pr, 1.0)), 0.0), axis=1)
    return (n_left * hl + n_right * hr) / n


def _feature_scan(col, y, n_classes, impurity):
    order = np.argsort(col, kind="stable")
    v = col[order]
    cum = np.cumsum(np.eye(n_classes)[y[order]], axis=0)
    cut = np.flatnonzero(v[:-1] < v[1:])
    if cut.size == 0:
        return None
    G = _child_impurity(cum[cut], cum[-1], impurity)
    lo, hi = v[cut], v[cut + 1]
    thresholds = (lo + hi) / 2.0
    # adjacent floats: the midpoint may round onto the upper value
    thresholds = np.where(thresholds >= hi, lo, thresholds)
    return G, thresholds


def best_split(
    X,
    y,
    features=None,
    impurity: str = "gini",
    n_classes: int = N_CLASSES,
) -> Optional[tuple[SplitCandidate, float]]:
    """Split minimising the weighted child impurity.

    Returns ``(split, G)`` or ``None`` when no feature in ``features`` takes
    two distinct values.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if features is None:
        features = range(X.shape[1])
    scans = []
    for j in sorted(int(f) for f in features):
        res = _feature_scan(X[:, j], y, n_classes, impurity)
        if res is not None:
            scans.append((j, *res))
    if not scans:
        return None
    g_min = min(float(G.min()) for _, G, _ in scans)
    for j, G, thresholds in scans:
        hits = np.flatnonzero(G <= g_min + TIE_EPS)
        if hits.size:
            i = hits[0]
            return SplitCandidate(j, float(thresholds[i])), float(G[i])
    raise AssertionError("unreachable")


FeatureSampler = Callable[[int], np.ndarray]


def fit_tree(
    X,
    y,
    h: TreeHyperparams = TreeHyperparams(),
    feature_sampler: Optional[FeatureSampler] = None,
    n_classes: int = N_CLASSES,
) -> TreeNode:
    """Grow a CART tree depth-first.

    A node becomes a leaf when it is pure, holds fewer than
    ``min_samples_split`` samples, sits at ``max_depth`` or has no usable
    split among its candidate features. ``feature_sampler(p)`` returns the
    feature indices a node may split on.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if y.size == 0:
        raise ValueError("cannot fit a tree on an empty training set")
    if y.min() < 0 or y.max() >= n_classes:
        raise ValueError(f"labels must lie in [0, {n_classes})")
    p = X.shape[1]

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        counts = np.bincount(y[idx], minlength=n_classes)
        node = TreeNode(counts, depth)
        if (
            (h.max_depth is not None and depth >= h.max_depth)
            or idx.size < h.min_samples_split
            or np.count_nonzero(counts) <= 1
        ):
            return node
        feats = tuple(range(p)) if feature_sampler is None else tuple(
            int(f) for f in feature_sampler(p)
        )
        node.candidates = feats
        found = best_split(X[idx], y[idx], feats, h.impurity, n_classes)
        if found is None:
            return node
        node.split = found[0]
        mask = X[idx, node.split.feature] <= node.split.threshold
        node.left = grow(idx[mask], depth + 1)
        node.right = grow(idx[~mask], depth + 1)
        return node

    return grow(np.arange(y.size), 0)


def predict_tree(tree: TreeNode, X) -> np.ndarray | int:
    """Descend from the root for each row of ``X``; a single row gives an int."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        return int(predict_tree(tree, X[None, :])[0])
    out = np.empty(X.shape[0], dtype=int)
    stack = [(tree, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        if idx.size == 0:
            continue
        if node.is_leaf:
            out[idx] = node.prediction
            continue
        mask = X[idx, node.split.feature] <= node.split.threshold
        stack.append((node.left, idx[mask]))
        stack.append((node.right, idx[~mask]))
    return out


@dataclass
class DecisionTreeModel:
    root: TreeNode
    hyperparams: TreeHyperparams = TreeHyperparams()
    n_classes: int = N_CLASSES

    @classmethod
    def fit(cls, X, y, hyperparams: TreeHyperparams = TreeHyperparams(), n_classes: int = N_CLASSES):
        return cls(fit_tree(X, y, hyperparams, n_classes=n_classes), hyperparams, n_classes)

    def predict(self, X):
        return predict_tree(self.root, X)

    @property
    def depth(self) -> int:
        return self.root.max_depth()

    @property
    def n_leaves(self) -> int:
        return sum(1 for node in self.root.iter_nodes() if node.is_leaf)


def information_gain(parent_counts, split_g: float, impurity: str = "gini") -> float:
    return IMPURITY[impurity](parent_counts) - split_g


__all__ = [
    "N_CLASSES",
    "gini",
    "entropy",
    "IMPURITY",
    "SplitCandidate",
    "TreeHyperparams",
    "TreeNode",
    "split_quality",
    "best_split",
    "fit_tree",
    "predict_tree",
    "DecisionTreeModel",
    "information_gain",
]
