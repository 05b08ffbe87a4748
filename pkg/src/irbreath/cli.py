"""Command-line entry point.

Subcommands::

    irbreath synth      --out DIR                 data.csv, timestamps.csv, distances.txt, noise_<tag>.csv
    irbreath features   DATA_CSV -o FEATURES_CSV
    irbreath train      FEATURES_CSV -o MODEL --model tree|forest
    irbreath evaluate   MODEL FEATURES_CSV
    irbreath sweep      FEATURES_CSV --model tree|forest [-o CURVE_CSV]
    irbreath cv         FEATURES_CSV --model tree|forest
    irbreath reproduce  --out DIR

Every subcommand accepts ``--config PATH``; ``--seed N`` replaces the seed
that the subcommand consumes.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import evaluation as ev
from . import experiment, formats
from .config import DISTANCE_SETS, ConfigError, load_config
from .features import FEATURE_NAMES
from .ml import DecisionTreeModel, RandomForestModel, serialize

log = logging.getLogger("irbreath")


def _config(args, **overrides):
    cfg = load_config(args.config)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return cfg.with_overrides(**overrides) if overrides else cfg


def _family(cfg, model: str):
    if model == "tree":
        return ev.tree_family(cfg.tree_hyperparams), cfg["eval.depth_grid"]
    return ev.forest_family(cfg.forest_hyperparams, cfg.forest_tree_hyperparams), cfg["eval.forest_grid"]


def cmd_synth(args) -> int:
    distances = tuple(args.distances.split(",")) if args.distances else None
    cfg = _config(args, seed=args.seed, counts_per_class=args.counts, distances=distances)
    paths = experiment.write_synth(cfg, args.out)
    for p in paths:
        print(p)
    return 0


def _parse_noise_args(items, data_path: Path, tags) -> dict[str, np.ndarray]:
    given = {}
    for item in items or ():
        tag, sep, path = item.partition("=")
        if not sep:
            raise ValueError(f"--noise expects TAG=PATH, got {item!r}")
        given[tag] = Path(path)
    noise = {}
    for tag in dict.fromkeys(tags):
        path = given.get(tag, data_path.parent / formats.noise_file(tag))
        noise[tag] = formats.read_noise(path)
    return noise


def cmd_features(args) -> int:
    cfg = _config(args)
    data_path = Path(args.data)
    samples, labels = formats.read_records(data_path)
    tags_path = Path(args.tags) if args.tags else data_path.parent / formats.TAGS_FILE
    tags = formats.read_tags(tags_path)
    if len(tags) != len(labels):
        raise ValueError(f"{tags_path}: {len(tags)} tags for {len(labels)} data rows")
    name = args.distance_set or cfg["distance_set"]
    set_tags = tuple(dict.fromkeys(tags)) if name == "auto" else DISTANCE_SETS[name]
    noise = _parse_noise_args(args.noise, data_path, set_tags)
    refs = experiment.noise_references(noise, cfg["dsp.window"])
    vectors = experiment.extract_set(samples, labels, tags, refs, set_tags, cfg.feature_config)
    formats.write_features(args.out, vectors)
    print(f"{len(vectors)} feature rows -> {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args, forest_seed=args.seed, tree__max_depth=args.max_depth,
                  forest__n_trees=args.n_trees)
    X, y = formats.read_features(args.features)
    if args.model == "tree":
        model = DecisionTreeModel.fit(X, y, cfg.tree_hyperparams)
    else:
        model = RandomForestModel.fit(X, y, cfg.forest_hyperparams, cfg.forest_tree_hyperparams)
    serialize.save(model, args.out)
    acc = ev.accuracy(model.predict(X), y)
    print(f"trained {args.model} on {y.size} rows, training accuracy {acc:.4f} -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    model = serialize.load(args.model)
    X, y = formats.read_features(args.features)
    pred = model.predict(X)
    text = (
        f"records {y.size}\naccuracy {ev.accuracy(pred, y):.6f}\n"
        + experiment.confusion_csv(ev.confusion_matrix(pred, y, model.n_classes))
    )
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args, split_seed=args.seed)
    X, y = formats.read_features(args.features)
    family, grid = _family(cfg, args.model)
    split = ev.stratified_split(y, cfg["split_seed"], stratify=cfg["eval.stratify"])
    curve = ev.sweep(family, grid, X, y, split, cfg["eval.saturation_tol"])
    text = experiment.sweep_csv(curve)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    print(f"chosen {curve.chosen}")
    return 0


def cmd_cv(args) -> int:
    cfg = _config(args, split_seed=args.seed)
    X, y = formats.read_features(args.features)
    family, _ = _family(cfg, args.model)
    split = ev.stratified_split(y, cfg["split_seed"], stratify=cfg["eval.stratify"])
    rep = ev.evaluate(family, X, y, split, k=cfg["eval.folds"], cv_seed=cfg["cv_seed"],
                      stratify=cfg["eval.stratify"])
    print(f"model {rep.name} ({rep.value})")
    for name in ("train", "validation", "test", "cv_train", "cv_test", "final_test"):
        print(f"{name} {getattr(rep, name):.6f}")
    return 0


def cmd_reproduce(args) -> int:
    cfg = _config(args, seed=args.seed)
    sets = (args.distance_set,) if args.distance_set else tuple(DISTANCE_SETS)
    for p in experiment.reproduce(cfg, args.out, sets):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irbreath", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="experiment config file (defaults are built in)")
        p.add_argument("--seed", type=int, help="override the seed this command uses")
        p.set_defaults(func=func)
        return p

    p = add("synth", cmd_synth, "synthesise labelled recordings and noise captures")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--counts", type=int, help="records per class per distance")
    p.add_argument("--distances", help="comma-separated distance tags, e.g. near,far")

    p = add("features", cmd_features, "extract the four features from a data CSV")
    p.add_argument("data", help="data CSV written by 'synth'")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--tags", help="distance tag file (default: distances.txt next to DATA)")
    p.add_argument("--noise", action="append", metavar="TAG=PATH",
                   help="noise CSV for a distance (default: noise_<tag>.csv next to DATA)")
    p.add_argument("--distance-set", choices=("auto", *DISTANCE_SETS),
                   help="records to keep; one distance uses its own noise reference, "
                        "several share an averaged one")

    for name, func, help_ in (
        ("train", cmd_train, "fit a model on a feature CSV"),
        ("sweep", cmd_sweep, "hyperparameter sweep on the train/validation split"),
        ("cv", cmd_cv, "split, k-fold cross-validation and final test accuracy"),
    ):
        p = add(name, func, help_)
        p.add_argument("features", help="feature CSV")
        p.add_argument("--model", choices=("tree", "forest"), default="tree")
        if name == "train":
            p.add_argument("-o", "--out", required=True, help="model file")
            p.add_argument("--max-depth", type=int)
            p.add_argument("--n-trees", type=int)
        elif name == "sweep":
            p.add_argument("-o", "--out", help="curve CSV")

    p = add("evaluate", cmd_evaluate, "score a saved model on a feature CSV")
    p.add_argument("model", help="model file written by 'train'")
    p.add_argument("features", help="feature CSV")
    p.add_argument("-o", "--out", help="report file")

    p = add("reproduce", cmd_reproduce, "run the full protocol and write result tables")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--distance-set", choices=tuple(DISTANCE_SETS),
                   help="run one row instead of all six")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"irbreath {args.command}: error: {exc}", file=sys.stderr)
        return 1


__all__ = ["main", "build_parser", "FEATURE_NAMES"]
