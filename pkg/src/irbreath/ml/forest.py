"""Bagged random forest built from :mod:`irbreath.ml.tree`."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .tree import N_CLASSES, TreeHyperparams, TreeNode, fit_tree, predict_tree


@dataclass(frozen=True)
class ForestHyperparams:
    """``max_features`` is the size of the random feature subset tried at
    every node; ``bootstrap_size`` defaults to the training-set size."""

    n_trees: int = 12
    max_features: int = 2
    bootstrap: bool = True
    bootstrap_size: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("a forest needs at least one tree")
        if self.max_features < 1:
            raise ValueError("max_features must be >= 1")


@dataclass
class RandomForestModel:
    trees: list[TreeNode]
    hyperparams: ForestHyperparams = ForestHyperparams()
    tree_hyperparams: TreeHyperparams = TreeHyperparams()
    n_classes: int = N_CLASSES
    # row indices each tree was trained on
    samples: list[np.ndarray] = field(default_factory=list, repr=False)

    @classmethod
    def fit(
        cls,
        X,
        y,
        hyperparams: ForestHyperparams = ForestHyperparams(),
        tree_hyperparams: TreeHyperparams = TreeHyperparams(),
        n_classes: int = N_CLASSES,
    ):
        return fit_forest(X, y, hyperparams, tree_hyperparams, n_classes)

    def predict(self, X):
        return predict_forest(self, X)


def fit_forest(
    X,
    y,
    h: ForestHyperparams = ForestHyperparams(),
    tree_h: TreeHyperparams = TreeHyperparams(),
    n_classes: int = N_CLASSES,
) -> RandomForestModel:
    """Fit ``h.n_trees`` trees, each on its own bootstrap sample.

    Each tree owns an RNG stream spawned from ``h.seed``; that stream draws
    the bootstrap rows first and then a fresh feature subset at every node.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    n, p = X.shape
    if n == 0:
        raise ValueError("cannot fit a forest on an empty training set")
    k = min(h.max_features, p)
    size = n if h.bootstrap_size is None else int(h.bootstrap_size)
    trees, samples = [], []
    for ss in np.random.SeedSequence(h.seed).spawn(h.n_trees):
        rng = np.random.default_rng(ss)
        rows = rng.integers(0, n, size) if h.bootstrap else np.arange(n)

        def sampler(p_, rng=rng):
            return np.sort(rng.choice(p_, k, replace=False))

        trees.append(fit_tree(X[rows], y[rows], tree_h, sampler, n_classes))
        samples.append(rows)
    return RandomForestModel(trees, h, tree_h, n_classes, samples)


def majority_vote(votes: np.ndarray, n_classes: int = N_CLASSES) -> np.ndarray:
    """Row-wise most frequent label of an ``(n_samples, n_voters)`` array; ties
    go to the lowest label."""
    votes = np.asarray(votes, dtype=int)
    tally = np.zeros((votes.shape[0], n_classes), dtype=int)
    rows = np.arange(votes.shape[0])
    for col in votes.T:
        np.add.at(tally, (rows, col), 1)
    return np.argmax(tally, axis=1)


def predict_forest(forest: RandomForestModel, X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        return int(predict_forest(forest, X[None, :])[0])
    votes = np.column_stack([predict_tree(t, X) for t in forest.trees])
    return majority_vote(votes, forest.n_classes)
