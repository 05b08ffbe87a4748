"""Plain-text model files.

Format (one item per line, ``#`` starts a comment)::

    model tree|forest
    classes <n_classes>
    params key=value ...
    tree <n_nodes>
    node <id> split <feature> <threshold> <left_id> <right_id> <depth>
    node <id> leaf <count_0> ... <count_{n-1}> <depth>
    end

A forest file repeats the ``tree`` block once per tree. Node 0 is the root;
thresholds are written with ``repr`` so they round-trip exactly.
"""

from __future__ import annotations

from dataclasses import asdict, fields

import numpy as np

from .forest import ForestHyperparams, RandomForestModel
from .tree import DecisionTreeModel, SplitCandidate, TreeHyperparams, TreeNode


class ModelFormatError(ValueError):
    pass


def _params_line(*dcs) -> str:
    items = []
    for prefix, dc in dcs:
        for key, value in asdict(dc).items():
            items.append(f"{prefix}.{key}={value}")
    return "params " + " ".join(items)


def _tree_lines(root: TreeNode) -> list[str]:
    nodes = list(root.iter_nodes())
    ids = {id(node): i for i, node in enumerate(nodes)}
    lines = [f"tree {len(nodes)}"]
    for i, node in enumerate(nodes):
        if node.is_leaf:
            counts = " ".join(str(int(c)) for c in node.counts)
            lines.append(f"node {i} leaf {counts} {node.depth}")
        else:
            s = node.split
            lines.append(
                f"node {i} split {s.feature} {float(s.threshold)!r} "
                f"{ids[id(node.left)]} {ids[id(node.right)]} {node.depth}"
            )
    return lines


def dumps(model) -> str:
    if isinstance(model, DecisionTreeModel):
        head = ["model tree", f"classes {model.n_classes}",
                _params_line(("tree", model.hyperparams))]
        body = _tree_lines(model.root)
    elif isinstance(model, RandomForestModel):
        head = ["model forest", f"classes {model.n_classes}",
                _params_line(("forest", model.hyperparams), ("tree", model.tree_hyperparams))]
        body = [line for t in model.trees for line in _tree_lines(t)]
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    return "\n".join(head + body + ["end"]) + "\n"


def _coerce(cls, raw: dict):
    out = {}
    for f in fields(cls):
        if f.name not in raw:
            continue
        value = raw[f.name]
        if value == "None":
            out[f.name] = None
        elif value in ("True", "False"):
            out[f.name] = value == "True"
        elif f.name == "impurity":
            out[f.name] = value
        else:
            out[f.name] = int(value)
    return cls(**out)


def _build_tree(rows: list[list[str]], n_classes: int) -> TreeNode:
    nodes: dict[int, TreeNode] = {}
    links = {}
    for row in rows:
        if row[0] != "node":
            raise ModelFormatError(f"expected node line, got {' '.join(row)!r}")
        i = int(row[1])
        if row[2] == "leaf":
            counts = np.array([int(c) for c in row[3 : 3 + n_classes]])
            nodes[i] = TreeNode(counts, int(row[3 + n_classes]))
        elif row[2] == "split":
            split = SplitCandidate(int(row[3]), float(row[4]))
            nodes[i] = TreeNode(np.zeros(n_classes, dtype=int), int(row[7]), split)
            links[i] = (int(row[5]), int(row[6]))
        else:
            raise ModelFormatError(f"unknown node kind {row[2]!r}")

    def resolve(i: int) -> TreeNode:
        node = nodes[i]
        if i in links:
            node.left, node.right = resolve(links[i][0]), resolve(links[i][1])
            node.counts = node.left.counts + node.right.counts
        return node

    return resolve(0)


def loads(text: str):
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    try:
        kind = rows[0][1]
        n_classes = int(rows[1][1])
        params: dict[str, dict] = {"tree": {}, "forest": {}}
        for item in rows[2][1:]:
            key, value = item.split("=", 1)
            prefix, name = key.split(".", 1)
            params[prefix][name] = value
        trees, pos = [], 3
        while rows[pos][0] == "tree":
            count = int(rows[pos][1])
            trees.append(_build_tree(rows[pos + 1 : pos + 1 + count], n_classes))
            pos += 1 + count
        if rows[pos][0] != "end":
            raise ModelFormatError("missing end marker")
    except (IndexError, ValueError, KeyError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed model file: {exc}") from exc
    tree_h = _coerce(TreeHyperparams, params["tree"])
    if kind == "tree":
        return DecisionTreeModel(trees[0], tree_h, n_classes)
    if kind == "forest":
        forest_h = _coerce(ForestHyperparams, params["forest"])
        return RandomForestModel(trees, forest_h, tree_h, n_classes)
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save(model, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(model))


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
