"""Synthetic infrared respiration recordings.

A breathing chest is modelled as a ``sin**n`` excursion that modulates the
light scattered back from a Lambertian IR source. The scattered power goes
through the photodetector and the lock-in output scaling, and the resulting
voltage trace is contaminated with white noise, slow polynomial drift and,
for the faulty class, transient bursts and line-of-sight dropouts.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from numpy.polynomial import Legendre, Polynomial

from .dsp import ParameterError

MAX_TRAVEL_MM = 30.0
PATTERNS = (1, 2, 4, 6)
DEFAULT_PATTERN = 6
DEFAULT_SAMPLE_RATE = 100.0
DEFAULT_DURATION = 60.0
FAULTY = 7
APNEA = 1


class PatternError(ValueError):
    pass


@dataclass(frozen=True)
class ClassSpec:
    label: int
    name: str
    rate_range: tuple[int, int]
    depth_range: tuple[int, int]

    def contains(self, rate: float, depth: float) -> bool:
        return (
            self.rate_range[0] <= rate <= self.rate_range[1]
            and self.depth_range[0] <= depth <= self.depth_range[1]
        )


CLASS_SPECS = (
    ClassSpec(0, "Eupnea", (12, 20), (30, 58)),
    ClassSpec(1, "Apnea", (0, 0), (0, 0)),
    ClassSpec(2, "Tachypnea", (21, 50), (30, 58)),
    ClassSpec(3, "Bradypnea", (1, 11), (30, 58)),
    ClassSpec(4, "Hyperpnea", (12, 20), (59, 100)),
    ClassSpec(5, "Hypopnea", (12, 20), (1, 29)),
    ClassSpec(6, "Kussmaul's", (21, 50), (59, 100)),
    # faulty data admits any robot setting
    ClassSpec(7, "Faulty data", (0, 50), (0, 100)),
)
N_CLASSES = len(CLASS_SPECS)


@dataclass(frozen=True)
class MotionParams:
    rate: float
    depth: float
    offset: float = 0.0
    duration: float = DEFAULT_DURATION
    sample_rate: float = DEFAULT_SAMPLE_RATE
    pattern: int = DEFAULT_PATTERN

    @property
    def n_samples(self) -> int:
        return n_samples(self.duration, self.sample_rate)


@dataclass(frozen=True)
class ChannelParams:
    P_t: float = 1.0
    A: float = 1e-4
    d: float = 0.5
    gamma: float = 2.0
    phi: float = 0.0
    theta: float = 0.0
    half_angle: float = math.radians(60.0)

    @property
    def lambert_order(self) -> float:
        return -math.log(2.0) / math.log(math.cos(self.half_angle))


@dataclass(frozen=True)
class SensorParams:
    """Photodetector, lock-in scaling and the chest reflectance map.

    ``reflectance`` gives the fraction of incident power scattered back to
    the detector at chest position 0; every millimetre of chest travel adds
    ``reflectance_slope``.
    """

    responsivity: float = 0.6
    dark_current: float = 1e-9
    gain: float = 4.75e4
    ref_amplitude: float = 1.0
    full_scale: float = 10.0
    sensitivity: float = 1.0
    reflectance: float = 0.05
    reflectance_slope: float = 2e-4


@dataclass(frozen=True)
class NoiseModel:
    """Additive impairments applied to a clean voltage trace.

    ``drift`` is a polynomial in normalised time ``t / duration``, highest
    power first, in volts. ``bursts`` are ``(start, length, amplitude)``
    transients and ``dropouts`` are ``(start, length, fraction)`` segments
    where the received light falls ``fraction`` of the way to darkness.
    """

    gaussian_sigma: float = 0.0
    drift: tuple[float, ...] = ()
    bursts: tuple[tuple[int, int, float], ...] = ()
    dropouts: tuple[tuple[int, int, float], ...] = ()
    seed: Optional[int] = None


@dataclass(frozen=True)
class DistancePreset:
    tag: str
    distance: float
    gaussian_sigma: float
    drift_scale: float


@dataclass
class SensedRecord:
    samples: np.ndarray
    timestamps: np.ndarray
    label: int
    distance_tag: str
    motion: Optional[MotionParams] = field(default=None, repr=False)

    @property
    def sample_rate(self) -> float:
        if self.timestamps.size < 2:
            return DEFAULT_SAMPLE_RATE
        return 1.0 / (self.timestamps[1] - self.timestamps[0])


def n_samples(duration: float, sample_rate: float) -> int:
    n = duration * sample_rate
    if n < 1 or abs(n - round(n)) > 1e-9:
        raise ParameterError(f"{duration} s at {sample_rate} Hz is not a whole number of samples")
    return int(round(n))


def timestamps(duration: float = DEFAULT_DURATION, sample_rate: float = DEFAULT_SAMPLE_RATE):
    return np.arange(n_samples(duration, sample_rate)) / sample_rate


def pattern_wave(phase, exponent: int):
    """``|sin|`` for exponent 1, ``sin**n`` otherwise; values in ``[0, 1]``."""
    if exponent not in PATTERNS:
        raise PatternError(f"unsupported pattern exponent {exponent!r}, expected one of {PATTERNS}")
    s = np.sin(phase)
    return np.abs(s) if exponent == 1 else s**exponent


def chest_motion(p: MotionParams) -> np.ndarray:
    """Chest position in mm, ``offset + depth% * 30 mm * sin^n(pi f t)``."""
    if not 0 <= p.rate <= 50:
        raise ParameterError(f"rate {p.rate} BPM outside [0, 50]")
    if not 0 <= p.depth <= 100:
        raise ParameterError(f"depth {p.depth}% outside [0, 100]")
    if p.pattern not in PATTERNS:
        raise PatternError(f"unsupported pattern exponent {p.pattern!r}, expected one of {PATTERNS}")
    t = timestamps(p.duration, p.sample_rate)
    if p.rate == 0:
        return np.full(t.size, float(p.offset))
    wave = pattern_wave(np.pi * (p.rate / 60.0) * t, p.pattern)
    return p.offset + (p.depth / 100.0) * MAX_TRAVEL_MM * wave


def sample_class_params(
    spec: ClassSpec,
    rng: np.random.Generator,
    *,
    duration: float = DEFAULT_DURATION,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    pattern: int = DEFAULT_PATTERN,
    offset: float = 0.0,
) -> MotionParams:
    # integer BPM keeps the true rate on a DFT bin of a 60 s window
    rate = int(rng.integers(spec.rate_range[0], spec.rate_range[1] + 1))
    depth = int(rng.integers(spec.depth_range[0], spec.depth_range[1] + 1))
    return MotionParams(rate, depth, offset, duration, sample_rate, pattern)


def lambertian_power(c: ChannelParams) -> float:
    """Optical power reaching distance ``d`` from a Lambertian point source."""
    if c.theta >= c.half_angle:
        return 0.0
    n = c.lambert_order
    return (
        (n + 1) * c.A * c.P_t / (2 * math.pi * c.d**c.gamma)
        * math.cos(c.phi) ** n * math.cos(c.theta)
    )


def sensor_voltage(P_r, s: SensorParams):
    """Scaled lock-in magnitude for received optical power ``P_r``."""
    if s.sensitivity <= 0:
        raise ParameterError("lock-in sensitivity must be positive")
    v_sig = s.gain * (s.dark_current + s.responsivity * np.asarray(P_r, dtype=float))
    return (s.full_scale * s.ref_amplitude) / (2.0 * s.sensitivity) * v_sig


def received_power(chest_mm, c: ChannelParams, s: SensorParams) -> np.ndarray:
    """Linearised reflectance map from chest position to scattered power."""
    incident = lambertian_power(c)
    return incident * (s.reflectance + s.reflectance_slope * np.asarray(chest_mm, dtype=float))


def _bump(length: int) -> np.ndarray:
    return np.sin(np.pi * (np.arange(length) + 0.5) / length)


def apply_noise(
    clean,
    noise: NoiseModel,
    *,
    dark_level: float = 0.0,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Add drift, bursts, dropouts and white noise to a clean trace.

    Dropouts pull the trace toward ``dark_level`` (the output with no light).
    With a zero-sigma model and no impairments the input is returned as is.
    """
    out = np.array(clean, dtype=float)
    L = out.size
    for start, length, fraction in noise.dropouts:
        seg = slice(max(int(start), 0), min(int(start) + int(length), L))
        out[seg] += fraction * (dark_level - out[seg])
    if noise.drift:
        u = np.arange(L) / max(L - 1, 1)
        out += np.polyval(noise.drift, u)
    for start, length, amplitude in noise.bursts:
        lo, hi = max(int(start), 0), min(int(start) + int(length), L)
        if hi > lo:
            out[lo:hi] += amplitude * _bump(int(length))[lo - int(start) : hi - int(start)]
    if noise.gaussian_sigma > 0:
        gen = np.random.default_rng(noise.seed) if noise.seed is not None else rng
        if gen is None:
            raise ParameterError("Gaussian noise needs a seed or a generator")
        out += gen.normal(0.0, noise.gaussian_sigma, L)
    return out


def render(
    motion: MotionParams,
    c: ChannelParams,
    s: SensorParams,
    noise: NoiseModel = NoiseModel(),
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Voltage trace for an explicit robot setting."""
    chest = chest_motion(motion)
    clean = sensor_voltage(received_power(chest, c, s), s)
    dark = float(sensor_voltage(0.0, s))
    return apply_noise(clean, noise, dark_level=dark, rng=rng)


def random_drift(rng: np.random.Generator, scale: float, max_order: int = 5) -> tuple[float, ...]:
    """Random polynomial of order 1..``max_order`` whose size is about ``scale`` volts."""
    if scale <= 0:
        return ()
    order = int(rng.integers(1, max_order + 1))
    coef = np.zeros(order + 1)
    coef[1:] = rng.normal(0.0, scale, order) / np.sqrt(np.arange(1, order + 1))
    poly = Legendre(coef, domain=[0.0, 1.0]).convert(kind=Polynomial)
    return tuple(float(v) for v in poly.coef[::-1])


def random_faults(
    rng: np.random.Generator, level: float, n: int, sample_rate: float = DEFAULT_SAMPLE_RATE
) -> tuple[tuple, tuple]:
    """Bursts and dropouts imitating people walking through the beam.

    ``level`` is the resting output voltage; burst amplitudes are drawn as a
    fraction of it. At least one event is always produced.
    """
    n_bursts = int(rng.integers(0, 4))
    n_drops = int(rng.integers(0 if n_bursts else 1, 3))
    bursts = []
    for _ in range(n_bursts):
        length = int(rng.uniform(0.5, 5.0) * sample_rate)
        start = int(rng.integers(0, max(n - length, 1)))
        amp = float(rng.uniform(0.05, 0.5) * level * rng.choice((-1.0, 1.0)))
        bursts.append((start, length, amp))
    drops = []
    for _ in range(n_drops):
        length = int(rng.uniform(1.0, 8.0) * sample_rate)
        start = int(rng.integers(0, max(n - length, 1)))
        drops.append((start, length, float(rng.uniform(0.3, 1.0))))
    return tuple(bursts), tuple(drops)


def synth_record(
    spec: ClassSpec,
    c: ChannelParams,
    s: SensorParams,
    noise: NoiseModel,
    rng: np.random.Generator,
    *,
    distance_tag: str = "near",
    duration: float = DEFAULT_DURATION,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    pattern: int = DEFAULT_PATTERN,
    offset: float = 0.0,
) -> SensedRecord:
    """Draw a robot setting for ``spec`` and render its sensed trace.

    For the faulty class, random bursts and dropouts are added unless
    ``noise`` already lists some.
    """
    motion = sample_class_params(
        spec, rng, duration=duration, sample_rate=sample_rate, pattern=pattern, offset=offset
    )
    if spec.label == FAULTY and not (noise.bursts or noise.dropouts):
        level = float(sensor_voltage(received_power(offset, c, s), s))
        bursts, drops = random_faults(rng, level, motion.n_samples, sample_rate)
        noise = NoiseModel(noise.gaussian_sigma, noise.drift, bursts, drops, noise.seed)
    samples = render(motion, c, s, noise, rng)
    return SensedRecord(samples, timestamps(duration, sample_rate), spec.label, distance_tag, motion)


def noise_record(
    c: ChannelParams,
    s: SensorParams,
    sigma: float,
    rng: np.random.Generator,
    *,
    distance_tag: str = "near",
    duration: float = DEFAULT_DURATION,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    offset: float = 0.0,
) -> SensedRecord:
    """Stand-still capture: the resting output plus the white noise floor."""
    motion = MotionParams(0, 0, offset, duration, sample_rate)
    samples = render(motion, c, s, NoiseModel(sigma), rng)
    return SensedRecord(samples, timestamps(duration, sample_rate), -1, distance_tag, motion)


@dataclass
class SynthDataset:
    records: list[SensedRecord]
    noise: dict[str, SensedRecord]


def synth_dataset(
    counts: int | Mapping[int, int],
    presets: Sequence[DistancePreset],
    seed: int,
    *,
    channel: ChannelParams = ChannelParams(),
    sensor: SensorParams = SensorParams(),
    duration: float = DEFAULT_DURATION,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
    pattern: int = DEFAULT_PATTERN,
    offset: float = 0.0,
    classes: Iterable[ClassSpec] = CLASS_SPECS,
) -> SynthDataset:
    """Labelled records for every (distance, class) plus one noise record per distance.

    Records are ordered by distance, then class, then repetition. Each
    distance draws from a stream keyed by ``seed`` and its tag, and each
    record from its own child of that stream, so a distance's records do not
    depend on which other distances are synthesised alongside it.
    """
    classes = list(classes)
    if isinstance(counts, int):
        counts = {spec.label: counts for spec in classes}
    if any(counts.get(spec.label, 0) < 1 for spec in classes):
        raise ParameterError("every class needs a count of at least 1")
    per_distance = [
        np.random.SeedSequence([seed, zlib.crc32(p.tag.encode("utf-8"))]) for p in presets
    ]
    records: list[SensedRecord] = []
    noise: dict[str, SensedRecord] = {}
    for preset, ss in zip(presets, per_distance):
        ch = ChannelParams(
            channel.P_t, channel.A, preset.distance, channel.gamma,
            channel.phi, channel.theta, channel.half_angle,
        )
        noise_ss, *class_ss = ss.spawn(1 + len(classes))
        noise[preset.tag] = noise_record(
            ch, sensor, preset.gaussian_sigma, np.random.default_rng(noise_ss),
            distance_tag=preset.tag, duration=duration, sample_rate=sample_rate, offset=offset,
        )
        for spec, css in zip(classes, class_ss):
            for rss in css.spawn(counts[spec.label]):
                rng = np.random.default_rng(rss)
                model = NoiseModel(preset.gaussian_sigma, random_drift(rng, preset.drift_scale))
                records.append(
                    synth_record(
                        spec, ch, sensor, model, rng, distance_tag=preset.tag,
                        duration=duration, sample_rate=sample_rate, pattern=pattern,
                        offset=offset,
                    )
                )
    return SynthDataset(records, noise)
