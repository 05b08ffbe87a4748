"""Handcrafted features of a processed breathing trace.

Four features per record: peak-to-peak amplitude, breathing rate,
effective spectral amplitude and SNR against a stand-still noise capture.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

import numpy as np

from . import dsp
from .dsp import ParameterError

FEATURE_NAMES = ("peak_to_peak", "rate", "effective_spectral_amplitude", "snr")
DEFAULT_THRESHOLD = 20.0
DEFAULT_N_BINS = 100
AVERAGE_TAG = "average"


@dataclass(frozen=True)
class FeatureVector:
    peak_to_peak: float
    rate: float
    effective_spectral_amplitude: float
    snr: float
    label: int

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.peak_to_peak, self.rate, self.effective_spectral_amplitude, self.snr]
        )


@dataclass(frozen=True)
class NoiseReference:
    """Mean-subtracted noise capture for one distance (or an average).

    ``trace`` is ``None`` for an averaged reference, which carries only its
    RMS level.
    """

    distance_tag: str
    rms: float
    trace: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.rms > 0:
            raise ParameterError(f"noise reference {self.distance_tag!r} has zero energy")

    @classmethod
    def from_trace(cls, distance_tag: str, raw, window: int = dsp.DEFAULT_WINDOW):
        """Build a reference from a raw noise record.

        The record goes through the same moving average as the breathing data
        so both sides of the SNR ratio share one noise bandwidth.
        """
        y = dsp.moving_average(raw, window) if window > 1 else np.asarray(raw, float)
        y = y - y.mean()
        return cls(distance_tag, float(np.sqrt(np.mean(y**2))), y)


def average_reference(refs: Sequence[NoiseReference], tag: str = AVERAGE_TAG) -> NoiseReference:
    """Power-domain average of several references: ``sqrt(mean(rms_i ** 2))``."""
    if not refs:
        raise ParameterError("no noise references to average")
    rms = math.sqrt(sum(r.rms**2 for r in refs) / len(refs))
    return NoiseReference(tag, rms)


@dataclass(frozen=True)
class FeatureConfig:
    window: int = dsp.DEFAULT_WINDOW
    order: int = dsp.DEFAULT_ORDER
    threshold: float = DEFAULT_THRESHOLD
    n_bins: int = DEFAULT_N_BINS
    search_range: tuple = dsp.DEFAULT_SEARCH
    sample_rate: float = 100.0


def peak_to_peak(z) -> float:
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise ParameterError("empty trace")
    return float(z.max() - z.min())


def breathing_rate(spectrum: dsp.Spectrum, search_range=dsp.DEFAULT_SEARCH) -> float:
    """Rate in BPM of the dominant spectral bin."""
    k, _ = dsp.peak_bin(spectrum, search_range)
    return k * spectrum.bin_to_bpm


def effective_spectral_amplitude(
    spectrum: dsp.Spectrum, t: float = DEFAULT_THRESHOLD, n_bins: int = DEFAULT_N_BINS
) -> float:
    """Percentage of the first ``n_bins`` bins reaching ``t`` percent of their peak."""
    if not 0 < t < 100:
        raise ParameterError(f"threshold t={t} must lie in (0, 100)")
    if n_bins < 1 or n_bins > len(spectrum):
        raise ParameterError(f"n_bins={n_bins} must lie in [1, {len(spectrum)}]")
    mags = spectrum.magnitudes[:n_bins]
    peak = mags.max()
    count = int(np.count_nonzero(mags >= (t / 100.0) * peak))
    return 100.0 * count / n_bins


def snr_db(z, noise: NoiseReference) -> float:
    """``20 log10`` of the signal-to-noise energy ratio (equal lengths)."""
    z = np.asarray(z, dtype=float)
    if noise.trace is not None:
        if noise.trace.size != z.size:
            raise ParameterError(
                f"trace length {z.size} differs from noise length {noise.trace.size}"
            )
        denom = math.sqrt(float(np.sum(noise.trace**2)))
        if denom == 0:
            raise ZeroDivisionError("noise reference has zero energy")
        return 20.0 * math.log10(math.sqrt(float(np.sum(z**2))) / denom)
    # averaged reference: equal N cancels, compare RMS levels
    return 20.0 * math.log10(math.sqrt(float(np.mean(z**2))) / noise.rms)


def select_reference(
    distance_tag: str, noise_refs: Mapping[str, NoiseReference] | NoiseReference
) -> NoiseReference:
    if isinstance(noise_refs, NoiseReference):
        return noise_refs
    try:
        return noise_refs[distance_tag]
    except KeyError:
        raise ParameterError(f"no noise reference for distance {distance_tag!r}") from None


def extract_samples(
    samples, label: int, noise: NoiseReference, config: FeatureConfig = FeatureConfig()
) -> FeatureVector:
    y = dsp.moving_average(samples, config.window)
    z, _ = dsp.polyfit_detrend(y, config.order)
    spec = dsp.dft_magnitudes(z, config.sample_rate)
    return FeatureVector(
        peak_to_peak=peak_to_peak(z),
        rate=breathing_rate(spec, config.search_range),
        effective_spectral_amplitude=effective_spectral_amplitude(
            spec, config.threshold, config.n_bins
        ),
        # SNR uses the filtered data with only its mean removed
        snr=snr_db(y - y.mean(), noise),
        label=int(label),
    )


def extract(record, noise_refs, config: FeatureConfig = FeatureConfig()) -> FeatureVector:
    """Features of a :class:`~irbreath.synth.SensedRecord`.

    ``noise_refs`` is either one reference applied to every record (the mixed
    distance mode) or a mapping from distance tag to reference.
    """
    ref = select_reference(record.distance_tag, noise_refs)
    if config.sample_rate != record.sample_rate:
        config = replace(config, sample_rate=record.sample_rate)
    return extract_samples(record.samples, record.label, ref, config)


def feature_matrix(vectors: Sequence[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([v.as_array() for v in vectors]).reshape(-1, len(FEATURE_NAMES))
    y = np.array([v.label for v in vectors], dtype=int)
    return X, y
