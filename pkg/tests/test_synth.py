import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irbreath import synth
from irbreath.synth import (
    CLASS_SPECS,
    ChannelParams,
    DistancePreset,
    MotionParams,
    NoiseModel,
    SensorParams,
)

NEAR = DistancePreset("near", 0.5, 0.002, 0.09)
FAR = DistancePreset("far", 1.5, 0.006, 0.01)


def local_maxima(x):
    return np.flatnonzero((x[1:-1] > x[:-2]) & (x[1:-1] >= x[2:])) + 1


# -- chest motion -----------------------------------------------------------


def test_apnea_motion_is_flat_zero():
    np.testing.assert_array_equal(synth.chest_motion(MotionParams(0, 0)), 0.0)


def test_motion_20bpm_full_depth():
    x = synth.chest_motion(MotionParams(20, 100, pattern=6))
    t = np.arange(6000) / 100.0
    np.testing.assert_allclose(x, 30.0 * np.sin(np.pi * t / 3.0) ** 6, atol=1e-12)
    assert x.max() == pytest.approx(30.0)
    peaks = local_maxima(x)
    assert np.all(np.diff(peaks) == 300)


def test_motion_50bpm_half_depth_peak_count():
    x = synth.chest_motion(MotionParams(50, 50))
    assert x.max() == pytest.approx(15.0)
    assert local_maxima(x).size == 50


@pytest.mark.parametrize("pattern", synth.PATTERNS)
def test_patterns_stay_within_travel(pattern):
    x = synth.chest_motion(MotionParams(17, 80, offset=2.0, pattern=pattern))
    assert x.min() >= 2.0 - 1e-12
    assert x.max() <= 2.0 + 24.0 + 1e-12


def test_bad_pattern():
    with pytest.raises(synth.PatternError):
        synth.chest_motion(MotionParams(10, 40, pattern=3))


@pytest.mark.parametrize("rate,depth", [(51, 40), (-1, 40), (10, 101)])
def test_motion_out_of_range(rate, depth):
    with pytest.raises(synth.ParameterError):
        synth.chest_motion(MotionParams(rate, depth))


def test_fractional_sample_count_rejected():
    with pytest.raises(synth.ParameterError):
        synth.timestamps(1.005, 100.0)


# -- class parameters -------------------------------------------------------


def test_class_table():
    by_label = {s.label: s for s in CLASS_SPECS}
    assert len(by_label) == 8
    assert (by_label[2].rate_range, by_label[2].depth_range) == ((21, 50), (30, 58))
    assert (by_label[1].rate_range, by_label[1].depth_range) == ((0, 0), (0, 0))
    assert (by_label[6].rate_range, by_label[6].depth_range) == ((21, 50), (59, 100))


@given(st.integers(0, 2**32 - 1))
def test_sampled_params_are_valid_integers(seed):
    rng = np.random.default_rng(seed)
    for spec in CLASS_SPECS:
        p = synth.sample_class_params(spec, rng)
        assert spec.contains(p.rate, p.depth)
        assert float(p.rate).is_integer() and float(p.depth).is_integer()


def test_apnea_always_zero():
    rng = np.random.default_rng(1)
    for _ in range(50):
        p = synth.sample_class_params(CLASS_SPECS[1], rng)
        assert (p.rate, p.depth) == (0, 0)


# -- optics and electronics -------------------------------------------------


def test_lambert_order_one_at_sixty_degrees():
    c = ChannelParams(P_t=2.0, A=1e-4, d=0.8)
    assert c.lambert_order == pytest.approx(1.0)
    assert synth.lambertian_power(c) == pytest.approx(c.A * c.P_t / (math.pi * c.d**2))


def test_inverse_square():
    p1 = synth.lambertian_power(ChannelParams(d=0.5))
    p2 = synth.lambertian_power(ChannelParams(d=1.0))
    assert p2 == pytest.approx(p1 / 4)


@given(st.floats(0.0, 89.0), st.floats(1.0, 89.0))
def test_field_of_view(theta_deg, half_deg):
    c = ChannelParams(theta=math.radians(theta_deg), half_angle=math.radians(half_deg))
    p = synth.lambertian_power(c)
    if theta_deg >= half_deg:
        assert p == 0.0
    else:
        assert p > 0.0


@given(st.floats(0.05, 10.0), st.floats(0.05, 10.0), st.floats(0.1, 4.0))
def test_distance_monotone(d1, d2, gamma):
    if d1 == d2:
        return
    lo, hi = sorted((d1, d2))
    assert synth.lambertian_power(ChannelParams(d=lo, gamma=gamma)) > synth.lambertian_power(
        ChannelParams(d=hi, gamma=gamma)
    )


def test_sensor_voltage_worked_example():
    s = SensorParams(responsivity=0.5, dark_current=0.0, gain=1e6, full_scale=10,
                     ref_amplitude=1, sensitivity=10)
    assert float(synth.sensor_voltage(2e-6, s)) == pytest.approx(0.5)


def test_sensor_voltage_dark_and_sensitivity():
    s = SensorParams()
    dark = float(synth.sensor_voltage(0.0, s))
    assert dark == pytest.approx(s.gain * s.dark_current * s.full_scale * s.ref_amplitude / 2)
    halved = SensorParams(sensitivity=2 * s.sensitivity)
    assert float(synth.sensor_voltage(1e-6, halved)) == pytest.approx(
        float(synth.sensor_voltage(1e-6, s)) / 2
    )
    with pytest.raises(synth.ParameterError):
        synth.sensor_voltage(1e-6, SensorParams(sensitivity=0.0))


# -- rendering --------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 50), st.integers(1, 100), st.sampled_from(synth.PATTERNS),
       st.floats(0.3, 3.0))
def test_clean_channel_is_affine_in_chest_position(rate, depth, pattern, d):
    m = MotionParams(rate, depth, duration=10.0, pattern=pattern)
    v = synth.render(m, ChannelParams(d=d), SensorParams())
    x = synth.chest_motion(m)
    assert np.corrcoef(v, x)[0, 1] == pytest.approx(1.0, abs=1e-9)


def test_apnea_clean_channel_constant():
    rec = synth.synth_record(CLASS_SPECS[1], ChannelParams(), SensorParams(), NoiseModel(),
                             np.random.default_rng(0))
    assert np.ptp(rec.samples) == 0.0


def test_same_seed_bit_identical():
    a = synth.synth_dataset(2, [NEAR], seed=5)
    b = synth.synth_dataset(2, [NEAR], seed=5)
    for ra, rb in zip(a.records, b.records):
        assert ra.samples.tobytes() == rb.samples.tobytes()
    assert a.noise["near"].samples.tobytes() == b.noise["near"].samples.tobytes()


def test_distance_records_independent_of_other_distances():
    alone = synth.synth_dataset(1, [FAR], seed=9)
    both = synth.synth_dataset(1, [NEAR, FAR], seed=9)
    far = [r for r in both.records if r.distance_tag == "far"]
    for ra, rb in zip(alone.records, far):
        np.testing.assert_array_equal(ra.samples, rb.samples)


def test_faulty_exceeds_clean_eupnea():
    c, s = ChannelParams(), SensorParams()
    rng = np.random.default_rng(3)
    motion = MotionParams(15, 45)
    clean = synth.render(motion, c, s)
    level = float(synth.sensor_voltage(synth.received_power(0.0, c, s), s))
    burst = NoiseModel(bursts=((1000, 200, 0.3 * level),))
    faulty = synth.render(motion, c, s, burst, rng)
    assert np.ptp(faulty) > np.ptp(clean)


def test_random_faults_never_empty():
    rng = np.random.default_rng(0)
    for _ in range(200):
        bursts, drops = synth.random_faults(rng, 1.0, 6000)
        assert bursts or drops


def test_dropout_pulls_toward_dark():
    out = synth.apply_noise(np.ones(10), NoiseModel(dropouts=((2, 3, 1.0),)), dark_level=0.25)
    np.testing.assert_allclose(out[2:5], 0.25)
    np.testing.assert_allclose(out[5:], 1.0)


def test_gaussian_noise_needs_randomness():
    with pytest.raises(synth.ParameterError):
        synth.apply_noise(np.zeros(4), NoiseModel(gaussian_sigma=0.1))


def test_drift_polynomial_in_normalised_time():
    out = synth.apply_noise(np.zeros(101), NoiseModel(drift=(2.0, -1.0, 0.5)))
    u = np.arange(101) / 100
    np.testing.assert_allclose(out, 2 * u**2 - u + 0.5)


@given(st.integers(0, 2**32 - 1))
def test_random_drift_order_and_size(seed):
    coef = synth.random_drift(np.random.default_rng(seed), 0.1)
    assert 2 <= len(coef) <= 6
    assert synth.random_drift(np.random.default_rng(seed), 0.0) == ()


# -- datasets ---------------------------------------------------------------


def test_dataset_counts():
    presets = [NEAR, DistancePreset("mid", 1.0, 0.004, 0.0225), FAR]
    data = synth.synth_dataset(1, presets, seed=0)
    assert len(data.records) == 24
    assert sorted(data.noise) == ["far", "mid", "near"]
    one = synth.synth_dataset(1, [NEAR], seed=0)
    assert len(one.records) == 8 and len(one.noise) == 1


def test_dataset_labels_and_class_validity():
    data = synth.synth_dataset(3, [NEAR], seed=2)
    labels = [r.label for r in data.records]
    assert labels == [c for c in range(8) for _ in range(3)]
    for r in data.records:
        assert CLASS_SPECS[r.label].contains(r.motion.rate, r.motion.depth)
        assert r.samples.size == 6000


def test_far_noise_record_larger_rms():
    data = synth.synth_dataset(1, [NEAR, FAR], seed=4)

    def rms(rec):
        x = rec.samples - rec.samples.mean()
        return float(np.sqrt(np.mean(x**2)))

    assert rms(data.noise["far"]) > rms(data.noise["near"])


def test_zero_count_rejected():
    with pytest.raises(synth.ParameterError):
        synth.synth_dataset({0: 1}, [NEAR], seed=0)
