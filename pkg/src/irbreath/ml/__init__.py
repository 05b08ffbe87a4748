"""From-scratch CART trees and random forests."""

from .forest import (
    ForestHyperparams,
    RandomForestModel,
    fit_forest,
    majority_vote,
    predict_forest,
)
from .tree import (
    IMPURITY,
    N_CLASSES,
    DecisionTreeModel,
    SplitCandidate,
    TreeHyperparams,
    TreeNode,
    best_split,
    entropy,
    fit_tree,
    gini,
    information_gain,
    predict_tree,
    split_quality,
)

__all__ = [
    "IMPURITY",
    "N_CLASSES",
    "DecisionTreeModel",
    "ForestHyperparams",
    "RandomForestModel",
    "SplitCandidate",
    "TreeHyperparams",
    "TreeNode",
    "best_split",
    "entropy",
    "fit_forest",
    "fit_tree",
    "gini",
    "information_gain",
    "majority_vote",
    "predict_forest",
    "predict_tree",
    "split_quality",
]
