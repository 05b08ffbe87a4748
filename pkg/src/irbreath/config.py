"""Experiment configuration: a flat ``key = value`` text file.

The packaged ``data/default.cfg`` documents every key. Loading a user file
overlays it on the defaults; unknown keys are rejected so typos surface
early.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from .features import FeatureConfig
from .ml import ForestHyperparams, TreeHyperparams
from .synth import ChannelParams, DistancePreset, SensorParams

DISTANCE_SETS = {
    "near": ("near",),
    "mid": ("mid",),
    "far": ("far",),
    "near+mid": ("near", "mid"),
    "mid+far": ("mid", "far"),
    "all": ("near", "mid", "far"),
}


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    low = s.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _opt_int(s: str) -> Optional[int]:
    return None if s.lower() == "none" else int(s)


def _tags(s: str) -> tuple[str, ...]:
    return tuple(t.strip() for t in s.split(",") if t.strip())


def _grid(s: str) -> tuple[int, ...]:
    """``1-25`` or ``1,2,5,10``."""
    m = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", s)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        return tuple(range(lo, hi + 1))
    return tuple(int(v) for v in s.split(","))


SCHEMA = {
    "seed": int,
    "split_seed": int,
    "cv_seed": int,
    "forest_seed": int,
    "counts_per_class": int,
    "distances": _tags,
    "distance_set": str,
    "duration": float,
    "sample_rate": float,
    "pattern": int,
    "offset": float,
    "channel.P_t": float,
    "channel.A": float,
    "channel.gamma": float,
    "channel.phi_deg": float,
    "channel.theta_deg": float,
    "channel.half_angle_deg": float,
    "sensor.responsivity": float,
    "sensor.dark_current": float,
    "sensor.gain": float,
    "sensor.ref_amplitude": float,
    "sensor.full_scale": float,
    "sensor.sensitivity": float,
    "sensor.reflectance": float,
    "sensor.reflectance_slope": float,
    "dsp.window": int,
    "dsp.order": int,
    "features.threshold": float,
    "features.n_bins": int,
    "features.search_lo": int,
    "features.search_hi": int,
    "tree.max_depth": _opt_int,
    "tree.min_samples_split": int,
    "tree.impurity": str,
    "forest.n_trees": int,
    "forest.max_features": int,
    "forest.bootstrap": _bool,
    "forest.tree_max_depth": _opt_int,
    "eval.folds": int,
    "eval.stratify": _bool,
    "eval.depth_grid": _grid,
    "eval.forest_grid": _grid,
    "eval.saturation_tol": float,
}
PRESET_FIELDS = {"distance": float, "sigma": float, "drift": float}
_PRESET_KEY = re.compile(r"preset\.([A-Za-z0-9_]+)\.([a-z]+)")


def parse_text(text: str, source: str = "<config>") -> dict[str, str]:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    return raw


def _convert(raw: dict[str, str], source: str) -> dict[str, Any]:
    values = {}
    for key, text in raw.items():
        m = _PRESET_KEY.fullmatch(key)
        if m:
            conv = PRESET_FIELDS.get(m.group(2))
        else:
            conv = SCHEMA.get(key)
        if conv is None:
            raise ConfigError(f"{source}: unknown key {key!r}")
        try:
            values[key] = conv(text)
        except ValueError as exc:
            raise ConfigError(f"{source}: bad value for {key!r}: {exc}") from None
    return values


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict

    def __getitem__(self, key: str):
        return self.values[key]

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Copy with keys replaced; dots in keys are written as ``__``."""
        values = dict(self.values)
        for key, value in overrides.items():
            key = key.replace("__", ".")
            if key not in values:
                raise ConfigError(f"unknown key {key!r}")
            values[key] = value
        cfg = ExperimentConfig(values)
        cfg.validate()
        return cfg

    @property
    def presets(self) -> dict[str, DistancePreset]:
        tags = dict.fromkeys(
            _PRESET_KEY.fullmatch(k).group(1) for k in self.values if k.startswith("preset.")
        )
        out = {}
        for tag in tags:
            out[tag] = DistancePreset(
                tag,
                self.values[f"preset.{tag}.distance"],
                self.values[f"preset.{tag}.sigma"],
                self.values[f"preset.{tag}.drift"],
            )
        return out

    def selected_presets(self, tags=None) -> list[DistancePreset]:
        presets = self.presets
        return [presets[t] for t in (tags or self["distances"])]

    @property
    def channel(self) -> ChannelParams:
        v = self.values
        return ChannelParams(
            P_t=v["channel.P_t"], A=v["channel.A"], gamma=v["channel.gamma"],
            phi=math.radians(v["channel.phi_deg"]),
            theta=math.radians(v["channel.theta_deg"]),
            half_angle=math.radians(v["channel.half_angle_deg"]),
        )

    @property
    def sensor(self) -> SensorParams:
        return SensorParams(**{
            k.split(".", 1)[1]: v for k, v in self.values.items() if k.startswith("sensor.")
        })

    @property
    def feature_config(self) -> FeatureConfig:
        v = self.values
        return FeatureConfig(
            window=v["dsp.window"], order=v["dsp.order"],
            threshold=v["features.threshold"], n_bins=v["features.n_bins"],
            search_range=(v["features.search_lo"], v["features.search_hi"]),
            sample_rate=v["sample_rate"],
        )

    @property
    def tree_hyperparams(self) -> TreeHyperparams:
        v = self.values
        return TreeHyperparams(v["tree.max_depth"], v["tree.min_samples_split"], v["tree.impurity"])

    @property
    def forest_tree_hyperparams(self) -> TreeHyperparams:
        v = self.values
        return TreeHyperparams(v["forest.tree_max_depth"], v["tree.min_samples_split"], v["tree.impurity"])

    @property
    def forest_hyperparams(self) -> ForestHyperparams:
        v = self.values
        return ForestHyperparams(
            n_trees=v["forest.n_trees"], max_features=v["forest.max_features"],
            bootstrap=v["forest.bootstrap"], seed=v["forest_seed"],
        )

    def validate(self) -> None:
        v = self.values
        tags = {_PRESET_KEY.fullmatch(k).group(1) for k in v if k.startswith("preset.")}
        for tag in sorted(tags):
            for fld in PRESET_FIELDS:
                if f"preset.{tag}.{fld}" not in v:
                    raise ConfigError(f"preset {tag!r} lacks {fld!r}")
        presets = self.presets
        for tag in v["distances"]:
            if tag not in presets:
                raise ConfigError(f"distance {tag!r} has no preset")
        if v["distance_set"] != "auto" and v["distance_set"] not in DISTANCE_SETS:
            raise ConfigError(
                f"distance_set must be auto or one of {', '.join(DISTANCE_SETS)}, "
                f"got {v['distance_set']!r}"
            )
        if v["counts_per_class"] < 1:
            raise ConfigError("counts_per_class must be >= 1")
        if not 1 <= v["forest.max_features"] < 4:
            raise ConfigError("forest.max_features must satisfy 1 <= k < 4")
        missing = [k for k in SCHEMA if k not in v]
        if missing:
            raise ConfigError(f"missing keys: {', '.join(missing)}")


def default_text() -> str:
    return resources.files("irbreath").joinpath("data/default.cfg").read_text(encoding="utf-8")


def load_config(path=None, text: Optional[str] = None) -> ExperimentConfig:
    """Defaults overlaid with ``path`` (or literal ``text``) when given."""
    values = _convert(parse_text(default_text(), "default.cfg"), "default.cfg")
    if path is not None:
        values.update(_convert(parse_text(Path(path).read_text(encoding="utf-8"), str(path)), str(path)))
    if text is not None:
        values.update(_convert(parse_text(text), "<config>"))
    cfg = ExperimentConfig(values)
    cfg.validate()
    return cfg
