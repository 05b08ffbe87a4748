"""End-to-end pipeline: synthesis, features per distance set, evaluation tables."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import evaluation as ev
from . import formats
from .config import DISTANCE_SETS, ExperimentConfig
from .features import (
    FeatureConfig,
    FeatureVector,
    NoiseReference,
    average_reference,
    extract_samples,
)
from .synth import SynthDataset, synth_dataset

log = logging.getLogger(__name__)

TABLE_COLUMNS = ("Training", "Validation", "Test", "CV Training", "CV Test")
MODEL_TITLES = {"decision_tree": "decision tree", "random_forest": "random forest"}


def synthesize(cfg: ExperimentConfig, distances=None, counts=None) -> SynthDataset:
    return synth_dataset(
        cfg["counts_per_class"] if counts is None else counts,
        cfg.selected_presets(distances),
        cfg["seed"],
        channel=cfg.channel,
        sensor=cfg.sensor,
        duration=cfg["duration"],
        sample_rate=cfg["sample_rate"],
        pattern=cfg["pattern"],
        offset=cfg["offset"],
    )


def noise_references(noise: Mapping[str, np.ndarray], window: int) -> dict[str, NoiseReference]:
    """References from raw stand-still traces keyed by distance tag."""
    return {tag: NoiseReference.from_trace(tag, raw, window) for tag, raw in noise.items()}


def reference_for(tags: Sequence[str], refs: Mapping[str, NoiseReference]):
    """Per-distance mapping for a single distance, one averaged reference otherwise."""
    missing = [t for t in tags if t not in refs]
    if missing:
        raise KeyError(f"no noise reference for {', '.join(missing)}")
    if len(tags) == 1:
        return {tags[0]: refs[tags[0]]}
    return average_reference([refs[t] for t in tags])


def extract_set(
    samples: np.ndarray,
    labels: Sequence[int],
    record_tags: Sequence[str],
    refs: Mapping[str, NoiseReference],
    set_tags: Sequence[str],
    fc: FeatureConfig,
) -> list[FeatureVector]:
    """Features for the records whose distance tag belongs to ``set_tags``, in order."""
    chosen = reference_for(set_tags, refs)
    out = []
    for row, label, tag in zip(samples, labels, record_tags):
        if tag not in set_tags:
            continue
        ref = chosen if isinstance(chosen, NoiseReference) else chosen[tag]
        out.append(extract_samples(row, label, ref, fc))
    return out


def distance_label(cfg: ExperimentConfig, tags: Sequence[str]) -> str:
    presets = cfg.presets
    return ", ".join(f"{presets[t].distance:g} m" for t in tags)


@dataclass
class RowResult:
    set_name: str
    label: str
    reports: dict[str, ev.EvalReport]


def evaluate_features(X, y, cfg: ExperimentConfig, with_sweeps: bool = True) -> dict[str, ev.EvalReport]:
    split = ev.stratified_split(y, cfg["split_seed"], stratify=cfg["eval.stratify"])
    families = [
        (ev.tree_family(cfg.tree_hyperparams), cfg["eval.depth_grid"]),
        (ev.forest_family(cfg.forest_hyperparams, cfg.forest_tree_hyperparams), cfg["eval.forest_grid"]),
    ]
    reports = {}
    for family, grid in families:
        reports[family.name] = ev.evaluate(
            family, X, y, split,
            k=cfg["eval.folds"], cv_seed=cfg["cv_seed"],
            grid=grid if with_sweeps else None,
            stratify=cfg["eval.stratify"],
            tol=cfg["eval.saturation_tol"],
        )
    return reports


def run_rows(
    cfg: ExperimentConfig,
    set_names: Sequence[str] = tuple(DISTANCE_SETS),
    with_sweeps: bool = True,
) -> list[RowResult]:
    wanted = {t for name in set_names for t in DISTANCE_SETS[name]}
    needed = [t for t in cfg.presets if t in wanted]
    data = synthesize(cfg, needed)
    samples = np.vstack([r.samples for r in data.records])
    labels = [r.label for r in data.records]
    tags = [r.distance_tag for r in data.records]
    refs = noise_references({t: r.samples for t, r in data.noise.items()}, cfg["dsp.window"])
    fc = cfg.feature_config
    rows = []
    for name in set_names:
        set_tags = DISTANCE_SETS[name]
        X, y = _matrix(extract_set(samples, labels, tags, refs, set_tags, fc))
        log.info("evaluating %s (%d records)", name, y.size)
        rows.append(RowResult(name, distance_label(cfg, set_tags), evaluate_features(X, y, cfg, with_sweeps)))
    return rows


def _matrix(vectors):
    X = np.array([v.as_array() for v in vectors])
    y = np.array([v.label for v in vectors], dtype=int)
    return X, y


def _pct(x: float) -> str:
    return f"{100 * x:.1f}%"


def table_text(rows: Sequence[RowResult], model: str) -> str:
    first = rows[0].reports[model]
    param = "max_depth" if model == "decision_tree" else "n_trees"
    lines = [f"Training, validation and test accuracies using {MODEL_TITLES[model]} model "
             f"({param}={first.value})"]
    width = max(len("Distances"), *(len(r.label) for r in rows)) + 2
    header = "Distances".ljust(width) + "".join(c.ljust(13) for c in TABLE_COLUMNS)
    lines += [header.rstrip(), "-" * len(header.rstrip())]
    for r in rows:
        rep = r.reports[model]
        cells = (rep.train, rep.validation, rep.test, rep.cv_train, rep.cv_test)
        lines.append((r.label.ljust(width) + "".join(_pct(c).ljust(13) for c in cells)).rstrip())
    return "\n".join(lines) + "\n"


def table_csv(rows: Sequence[RowResult], model: str) -> str:
    lines = ["distances,training,validation,test,cv_training,cv_test,final_test"]
    for r in rows:
        rep = r.reports[model]
        cells = (rep.train, rep.validation, rep.test, rep.cv_train, rep.cv_test, rep.final_test)
        lines.append(f'"{r.label}",' + ",".join(f"{c:.6f}" for c in cells))
    return "\n".join(lines) + "\n"


def sweep_csv(curve: ev.SweepCurve) -> str:
    lines = ["value,train_accuracy,validation_accuracy"]
    lines += [f"{v},{t:.6f},{a:.6f}" for v, t, a in curve.rows()]
    return "\n".join(lines) + "\n"


def confusion_csv(m: np.ndarray) -> str:
    n = m.shape[0]
    lines = ["true\\pred," + ",".join(str(j) for j in range(n))]
    lines += [f"{i}," + ",".join(str(int(c)) for c in m[i]) for i in range(n)]
    return "\n".join(lines) + "\n"


def _write(path: Path, text: str) -> Path:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def write_reports(rows: Sequence[RowResult], out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    summary = ["distance_set,model,chosen,used"]
    for model in ("decision_tree", "random_forest"):
        written.append(_write(out / f"table_{model}.txt", table_text(rows, model)))
        written.append(_write(out / f"table_{model}.csv", table_csv(rows, model)))
        for r in rows:
            rep = r.reports[model]
            written.append(_write(out / f"confusion_{model}_{r.set_name}.csv", confusion_csv(rep.confusion)))
            if rep.sweep is not None:
                written.append(_write(out / f"sweep_{model}_{r.set_name}.csv", sweep_csv(rep.sweep)))
                summary.append(f"{r.set_name},{model},{rep.sweep.chosen},{rep.value}")
    written.append(_write(out / "sweep_summary.csv", "\n".join(summary) + "\n"))
    return written


def reproduce(cfg: ExperimentConfig, out_dir, set_names: Sequence[str] = tuple(DISTANCE_SETS)) -> list[Path]:
    """Run every distance-set row for both models and write the report files."""
    return write_reports(run_rows(cfg, set_names), out_dir)


def write_synth(cfg: ExperimentConfig, out_dir) -> list[Path]:
    data = synthesize(cfg)
    return formats.write_dataset(out_dir, data.records, data.noise)
