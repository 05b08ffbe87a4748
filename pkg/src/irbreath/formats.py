"""On-disk formats.

Data CSV
    One record per row: the voltage samples followed by the integer class
    label. No header. Numbers use 9 significant digits.
Timestamp CSV
    Row-aligned with the data CSV; seconds from the start of each record.
Distance tags
    Row-aligned text file, one distance tag per line.
Noise CSV
    A single row of stand-still samples for one distance.
Feature CSV
    One record per row: peak-to-peak (V), rate (BPM), effective spectral
    amplitude (%), SNR (dB), label. No header.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .features import FeatureVector
from .synth import SensedRecord

PRECISION = 9
DATA_FILE = "data.csv"
TIMESTAMP_FILE = "timestamps.csv"
TAGS_FILE = "distances.txt"


class FormatError(ValueError):
    pass


def fmt(value: float) -> str:
    return f"{value:.{PRECISION}g}"


def _write_lines(path, lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def _read_rows(path) -> list[list[str]]:
    with open(path, encoding="utf-8") as fh:
        rows = [line.rstrip("\r\n") for line in fh]
    while rows and not rows[-1].strip():
        rows.pop()
    if not rows:
        raise FormatError(f"{path}: file is empty")
    return [r.split(",") for r in rows]


def _floats(fields: Sequence[str], path, row: int) -> np.ndarray:
    try:
        return np.array([float(f) for f in fields])
    except ValueError as exc:
        raise FormatError(f"{path}: row {row}: non-numeric field ({exc})") from None


def write_records(path, records: Sequence[SensedRecord]) -> None:
    _write_lines(
        path,
        (",".join(fmt(v) for v in r.samples) + f",{int(r.label)}" for r in records),
    )


def read_records(path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(samples, labels)``; rows must all have the same width."""
    rows = _read_rows(path)
    width = len(rows[0])
    if width < 2:
        raise FormatError(f"{path}: row 1: need samples and a label")
    samples = np.empty((len(rows), width - 1))
    labels = np.empty(len(rows), dtype=int)
    for i, fields in enumerate(rows, 1):
        if len(fields) != width:
            raise FormatError(f"{path}: row {i}: expected {width} fields, found {len(fields)}")
        samples[i - 1] = _floats(fields[:-1], path, i)
        try:
            labels[i - 1] = int(fields[-1])
        except ValueError:
            raise FormatError(f"{path}: row {i}: label {fields[-1]!r} is not an integer") from None
    return samples, labels


def write_timestamps(path, records: Sequence[SensedRecord]) -> None:
    _write_lines(path, (",".join(fmt(t) for t in r.timestamps) for r in records))


def read_timestamps(path) -> np.ndarray:
    rows = _read_rows(path)
    return np.vstack([_floats(r, path, i) for i, r in enumerate(rows, 1)])


def write_tags(path, tags: Iterable[str]) -> None:
    _write_lines(path, tags)


def read_tags(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def noise_file(tag: str) -> str:
    return f"noise_{tag}.csv"


def write_noise(path, record: SensedRecord) -> None:
    _write_lines(path, [",".join(fmt(v) for v in record.samples)])


def read_noise(path) -> np.ndarray:
    rows = _read_rows(path)
    if len(rows) != 1:
        raise FormatError(f"{path}: expected one row of noise samples, found {len(rows)}")
    return _floats(rows[0], path, 1)


def write_features(path, vectors: Sequence[FeatureVector]) -> None:
    _write_lines(
        path,
        (",".join(fmt(x) for x in v.as_array()) + f",{int(v.label)}" for v in vectors),
    )


def read_features(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path)
    X = np.empty((len(rows), 4))
    y = np.empty(len(rows), dtype=int)
    for i, fields in enumerate(rows, 1):
        if len(fields) != 5:
            raise FormatError(f"{path}: row {i}: expected 5 fields, found {len(fields)}")
        X[i - 1] = _floats(fields[:4], path, i)
        try:
            y[i - 1] = int(fields[4])
        except ValueError:
            raise FormatError(f"{path}: row {i}: label {fields[4]!r} is not an integer") from None
    return X, y


def write_dataset(out_dir, records: Sequence[SensedRecord], noise: dict) -> list[Path]:
    """Write the data, timestamp, tag and per-distance noise files into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / DATA_FILE, out / TIMESTAMP_FILE, out / TAGS_FILE]
    write_records(paths[0], records)
    write_timestamps(paths[1], records)
    write_tags(paths[2], (r.distance_tag for r in records))
    for tag, rec in noise.items():
        paths.append(out / noise_file(tag))
        write_noise(paths[-1], rec)
    return paths
