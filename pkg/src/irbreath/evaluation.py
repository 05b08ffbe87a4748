"""Train/validation/test protocol, hyperparameter sweeps and k-fold CV."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .ml import (
    N_CLASSES,
    DecisionTreeModel,
    ForestHyperparams,
    RandomForestModel,
    TreeHyperparams,
)

SATURATION_TOL = 0.01


@dataclass(frozen=True)
class DatasetSplit:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int

    @property
    def pool(self) -> np.ndarray:
        """Train and validation indices together, the cross-validation pool."""
        return np.sort(np.concatenate([self.train, self.validation]))


def _stratified_order(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Permutation that interleaves classes evenly.

    Each record gets a position ``(i + 0.5) / n_c`` from its rank ``i`` in a
    shuffled copy of its class; sorting by position spreads every class
    evenly along the permutation, so any prefix holds each class within one
    record of its share.
    """
    pos = np.empty(labels.size)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        pos[idx] = (np.arange(idx.size) + 0.5) / idx.size
    tiebreak = rng.random(labels.size)
    return np.lexsort((tiebreak, pos))


def stratified_split(
    labels,
    seed: int,
    fractions: Sequence[float] = (0.6, 0.2, 0.2),
    stratify: bool = True,
    min_per_class: int = 5,
) -> DatasetSplit:
    """Random 60/20/20 split of record indices, stratified by class."""
    labels = np.asarray(labels, dtype=int)
    n = labels.size
    if stratify:
        _, counts = np.unique(labels, return_counts=True)
        if counts.min() < min_per_class:
            raise ValueError(
                f"every class needs at least {min_per_class} records to split, "
                f"smallest has {counts.min()}"
            )
    elif n < 3:
        raise ValueError("need at least 3 records to split")
    rng = np.random.default_rng(seed)
    order = _stratified_order(labels, rng) if stratify else rng.permutation(n)
    n_train = int(round(fractions[0] * n))
    n_val = int(round(fractions[1] * n))
    return DatasetSplit(
        np.sort(order[:n_train]),
        np.sort(order[n_train : n_train + n_val]),
        np.sort(order[n_train + n_val :]),
        seed,
    )


def accuracy(predictions, labels) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")
    if labels.size == 0:
        raise ValueError("accuracy of an empty set is undefined")
    return float(np.mean(predictions == labels))


def confusion_matrix(predictions, labels, n_classes: int = N_CLASSES) -> np.ndarray:
    """``m[i, j]`` counts records of true class ``i`` predicted as ``j``."""
    predictions = np.asarray(predictions, dtype=int)
    labels = np.asarray(labels, dtype=int)
    for arr in (predictions, labels):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValueError(f"label outside [0, {n_classes})")
    m = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(m, (labels, predictions), 1)
    return m


# -- model families ---------------------------------------------------------


class MajorityBaseline:
    """Predicts the most common training label (lowest label on ties)."""

    def __init__(self, label: int):
        self.label = label

    @classmethod
    def fit(cls, X, y, n_classes: int = N_CLASSES):
        return cls(int(np.argmax(np.bincount(np.asarray(y, int), minlength=n_classes))))

    def predict(self, X):
        return np.full(np.asarray(X).shape[0], self.label, dtype=int)


@dataclass(frozen=True)
class ModelFamily:
    """A named way of fitting a model at a given hyperparameter value.

    ``fit(X, y, value)`` returns an object with ``predict``; ``default`` is
    the value used when no sweep result is supplied.
    """

    name: str
    fit: Callable
    default: Optional[int] = None


def tree_family(tree_h: TreeHyperparams = TreeHyperparams()) -> ModelFamily:
    def fit(X, y, depth=None):
        h = tree_h if depth is None else replace(tree_h, max_depth=depth)
        return DecisionTreeModel.fit(X, y, h)

    return ModelFamily("decision_tree", fit, tree_h.max_depth)


def forest_family(
    forest_h: ForestHyperparams = ForestHyperparams(),
    tree_h: TreeHyperparams = TreeHyperparams(max_depth=None),
) -> ModelFamily:
    def fit(X, y, n_trees=None):
        h = forest_h if n_trees is None else replace(forest_h, n_trees=n_trees)
        return RandomForestModel.fit(X, y, h, tree_h)

    return ModelFamily("random_forest", fit, forest_h.n_trees)


def majority_family() -> ModelFamily:
    return ModelFamily("majority", lambda X, y, value=None: MajorityBaseline.fit(X, y))


# -- sweeps -----------------------------------------------------------------


@dataclass
class SweepCurve:
    name: str
    values: list[int]
    train: list[float]
    validation: list[float]
    chosen: int

    def rows(self):
        return zip(self.values, self.train, self.validation)


def saturation_point(values: Sequence[int], scores: Sequence[float], tol: float = SATURATION_TOL) -> int:
    """Smallest value whose score is within ``tol`` of the best score."""
    if not values:
        raise ValueError("empty sweep grid")
    best = max(scores)
    for v, s in zip(values, scores):
        if s >= best - tol - 1e-12:
            return v
    raise AssertionError("unreachable")


def sweep(
    family: ModelFamily,
    grid: Sequence[int],
    X,
    y,
    split: DatasetSplit,
    tol: float = SATURATION_TOL,
) -> SweepCurve:
    """Fit on the training part for every grid value, score train and validation."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    tr, va = split.train, split.validation
    train_acc, val_acc = [], []
    for value in grid:
        model = family.fit(X[tr], y[tr], value)
        train_acc.append(accuracy(model.predict(X[tr]), y[tr]))
        val_acc.append(accuracy(model.predict(X[va]), y[va]))
    values = [int(v) for v in grid]
    return SweepCurve(family.name, values, train_acc, val_acc, saturation_point(values, val_acc, tol))


# -- cross-validation -------------------------------------------------------


@dataclass
class CVResult:
    train: list[float]
    test: list[float]
    folds: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def mean_train(self) -> float:
        return float(np.mean(self.train))

    @property
    def mean_test(self) -> float:
        return float(np.mean(self.test))


def kfold_indices(labels, k: int, seed: int, stratify: bool = True) -> list[np.ndarray]:
    labels = np.asarray(labels, dtype=int)
    n = labels.size
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > n:
        raise ValueError(f"{k} folds requested for only {n} records")
    rng = np.random.default_rng(seed)
    if not stratify:
        order = rng.permutation(n)
        return [np.sort(order[i::k]) for i in range(k)]
    # deal each shuffled class round-robin, continuing where the previous
    # class stopped: per-class and total fold sizes both differ by at most one
    fold_of = np.empty(n, dtype=int)
    start = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        fold_of[idx] = (start + np.arange(idx.size)) % k
        start += idx.size
    return [np.flatnonzero(fold_of == i) for i in range(k)]


def kfold_cv(
    family: ModelFamily,
    X,
    y,
    value=None,
    k: int = 10,
    seed: int = 0,
    stratify: bool = True,
) -> CVResult:
    """``k``-fold cross-validation on a pool; each fold is held out once."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    folds = kfold_indices(y, k, seed, stratify)
    train_acc, test_acc = [], []
    everything = np.arange(y.size)
    for held in folds:
        fit_idx = np.setdiff1d(everything, held, assume_unique=True)
        model = family.fit(X[fit_idx], y[fit_idx], value)
        train_acc.append(accuracy(model.predict(X[fit_idx]), y[fit_idx]))
        test_acc.append(accuracy(model.predict(X[held]), y[held]))
    return CVResult(train_acc, test_acc, folds)


# -- full protocol ----------------------------------------------------------


@dataclass
class EvalReport:
    """Accuracies for one model on one dataset, as laid out in the result tables."""

    name: str
    value: Optional[int]
    train: float
    validation: float
    test: float
    cv_train: float
    cv_test: float
    final_test: float
    confusion: np.ndarray
    sweep: Optional[SweepCurve] = None
    split: Optional[DatasetSplit] = field(default=None, repr=False)


def evaluate(
    family: ModelFamily,
    X,
    y,
    split: DatasetSplit,
    value=None,
    k: int = 10,
    cv_seed: int = 0,
    grid: Optional[Sequence[int]] = None,
    stratify: bool = True,
    tol: float = SATURATION_TOL,
) -> EvalReport:
    """Run the whole protocol for one model family.

    An optional sweep over ``grid`` is recorded for plotting; the model is
    then fitted at ``value`` (the family default when ``None``) on the
    training part, scored on all three parts, cross-validated on the
    train + validation pool and finally scored once more on the untouched
    test part after refitting on the whole pool.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    curve = sweep(family, grid, X, y, split, tol) if grid else None
    if value is None:
        value = family.default
    tr, va, te = split.train, split.validation, split.test
    model = family.fit(X[tr], y[tr], value)
    pool = split.pool
    cv = kfold_cv(family, X[pool], y[pool], value, k, cv_seed, stratify)
    final = family.fit(X[pool], y[pool], value)
    test_pred = final.predict(X[te])
    return EvalReport(
        name=family.name,
        value=value,
        train=accuracy(model.predict(X[tr]), y[tr]),
        validation=accuracy(model.predict(X[va]), y[va]),
        test=accuracy(model.predict(X[te]), y[te]),
        cv_train=cv.mean_train,
        cv_test=cv.mean_test,
        final_test=accuracy(test_pred, y[te]),
        confusion=confusion_matrix(test_pred, y[te]),
        sweep=curve,
        split=split,
    )
