import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irbreath import dsp
from irbreath import features as F
from irbreath import synth
from irbreath.synth import CLASS_SPECS, ChannelParams, MotionParams, NoiseModel, SensorParams


def clean_trace(rate, depth=45, d=0.5, pattern=6):
    return synth.render(MotionParams(rate, depth, pattern=pattern), ChannelParams(d=d), SensorParams())


def noise_ref(sigma=0.002, seed=0, tag="near", n=6000):
    raw = 0.9 + np.random.default_rng(seed).normal(0, sigma, n)
    return F.NoiseReference.from_trace(tag, raw)


# -- single features --------------------------------------------------------


def test_peak_to_peak_examples():
    assert F.peak_to_peak(np.full(7, 3.3)) == 0.0
    assert F.peak_to_peak([-1, 2, 0.5]) == 3.0


def test_rate_from_bin():
    spec = dsp.Spectrum(np.zeros(3001), 100.0, 6000)
    spec.magnitudes[20] = 1.0
    assert F.breathing_rate(spec) == 20.0


def test_esa_examples():
    mags = np.zeros(200)
    mags[7] = 5.0
    assert F.effective_spectral_amplitude(dsp.Spectrum(mags, 100.0, 398)) == 1.0
    flat = dsp.Spectrum(np.ones(200), 100.0, 398)
    assert F.effective_spectral_amplitude(flat) == 100.0


@pytest.mark.parametrize("t,n_bins", [(0, 100), (100, 100), (20, 0), (20, 201)])
def test_esa_rejects_parameters(t, n_bins):
    with pytest.raises(F.ParameterError):
        F.effective_spectral_amplitude(dsp.Spectrum(np.ones(200), 100.0, 398), t, n_bins)


@given(st.lists(st.floats(0, 1e3), min_size=100, max_size=300), st.floats(0.5, 99.5))
def test_esa_bounds(mags, t):
    spec = dsp.Spectrum(np.array(mags), 100.0, 2 * len(mags) - 2)
    s = F.effective_spectral_amplitude(spec, t, 100)
    assert 1.0 <= s <= 100.0


def test_snr_examples():
    ref = noise_ref()
    assert F.snr_db(ref.trace, ref) == pytest.approx(0.0)
    assert F.snr_db(10 * ref.trace, ref) == pytest.approx(20.0)


def test_snr_length_mismatch_and_zero_noise():
    ref = noise_ref(n=100)
    with pytest.raises(F.ParameterError):
        F.snr_db(np.ones(99), ref)
    with pytest.raises(F.ParameterError):
        F.NoiseReference("near", 0.0)


def test_average_reference_power_mean():
    a, b = F.NoiseReference("a", 3.0), F.NoiseReference("b", 4.0)
    avg = F.average_reference([a, b])
    assert avg.rms == pytest.approx(np.sqrt(12.5))
    assert avg.trace is None
    z = np.full(10, avg.rms * 10)
    assert F.snr_db(z, avg) == pytest.approx(20.0)


def test_noise_reference_is_filtered_and_centred():
    raw = 2.0 + np.random.default_rng(1).normal(0, 0.01, 6000)
    ref = F.NoiseReference.from_trace("near", raw, window=50)
    assert ref.trace.mean() == pytest.approx(0.0, abs=1e-12)
    # averaging 50 white samples cuts the RMS by about sqrt(50)
    assert ref.rms == pytest.approx(0.01 / np.sqrt(50), rel=0.25)


# -- the full extractor -----------------------------------------------------


def test_tachypnea_35_bpm_exact():
    v = F.extract_samples(clean_trace(35, 40), 2, noise_ref())
    assert v.rate == 35.0


@pytest.mark.parametrize("rate,depth,label", [(15, 45, 0), (8, 40, 3), (49, 80, 6), (21, 20, 5)])
def test_clean_rates_on_bin(rate, depth, label):
    v = F.extract_samples(clean_trace(rate, depth), label, noise_ref())
    assert v.rate == rate


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0, 2, 3, 4, 5, 6]))
def test_clean_synthesised_rates_exact(seed, label):
    rec = synth.synth_record(CLASS_SPECS[label], ChannelParams(), SensorParams(), NoiseModel(),
                             np.random.default_rng(seed))
    rate = F.extract(rec, {"near": noise_ref()}).rate
    if rec.motion.rate >= 3:
        assert rate == rec.motion.rate


@pytest.mark.parametrize("rate", [1, 2])
def test_slowest_rates_absorbed_by_detrend(rate):
    # one or two cycles per minute are largely fitted by the order-5 polynomial
    v = F.extract_samples(clean_trace(rate, 45), 3, noise_ref())
    assert v.rate != rate
    y = dsp.moving_average(clean_trace(rate, 45))
    assert F.breathing_rate(dsp.dft_magnitudes(y - y.mean())) == rate


def test_eupnea_near_preset_rate():
    rng = np.random.default_rng(12)
    rec = synth.render(MotionParams(15, 45), ChannelParams(d=0.5), SensorParams(),
                       NoiseModel(0.002, synth.random_drift(rng, 0.09)), rng)
    assert F.extract_samples(rec, 0, noise_ref()).rate == 15.0


def test_clean_apnea_is_flat_with_spread_spectrum():
    rec = synth.synth_record(CLASS_SPECS[1], ChannelParams(), SensorParams(), NoiseModel(),
                             np.random.default_rng(0))
    apnea = F.extract(rec, {"near": noise_ref()})
    breathing = F.extract_samples(clean_trace(23, 45), 2, noise_ref())
    assert apnea.peak_to_peak < 1e-9
    assert apnea.effective_spectral_amplitude > breathing.effective_spectral_amplitude


def test_noisy_apnea_esa_far_above_clean_breathing():
    rng = np.random.default_rng(2)
    apnea = synth.render(MotionParams(0, 0), ChannelParams(), SensorParams(), NoiseModel(0.002), rng)
    a = F.extract_samples(apnea, 1, noise_ref())
    b = F.extract_samples(clean_trace(23, 45), 2, noise_ref())
    assert a.effective_spectral_amplitude >= 10 * b.effective_spectral_amplitude
    assert b.effective_spectral_amplitude < 10


def test_detrending_halves_far_peak_to_peak():
    # far-distance eupnea with slow drift: the detrended swing sits near 0.011 V
    before, after = [], []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        v = synth.render(MotionParams(20, 45), ChannelParams(d=1.5), SensorParams(),
                         NoiseModel(0.006, synth.random_drift(rng, 0.01)), rng)
        y = dsp.moving_average(v)
        z, _ = dsp.polyfit_detrend(y)
        before.append(F.peak_to_peak(y - y.mean()))
        after.append(F.peak_to_peak(z))
    assert all(a < b for a, b in zip(after, before))
    assert 0.008 <= np.median(after) <= 0.016
    assert np.median(before) >= 1.8 * np.median(after)


def test_reference_choice_only_moves_snr():
    v = clean_trace(18, 50) + np.random.default_rng(0).normal(0, 0.002, 6000)
    own = F.extract_samples(v, 0, noise_ref())
    avg = F.extract_samples(v, 0, F.average_reference([noise_ref(), noise_ref(0.006, 1, "far")]))
    np.testing.assert_array_equal(own.as_array()[:3], avg.as_array()[:3])
    assert own.snr != avg.snr


def test_extract_picks_reference_by_tag():
    rec = synth.synth_record(CLASS_SPECS[0], ChannelParams(), SensorParams(), NoiseModel(),
                             np.random.default_rng(0), distance_tag="far")
    with pytest.raises(F.ParameterError):
        F.extract(rec, {"near": noise_ref()})
    F.extract(rec, {"far": noise_ref(tag="far")})


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 20.0), st.integers(0, 1000))
def test_scale_equivariance(c, seed):
    rng = np.random.default_rng(seed)
    v = clean_trace(int(rng.integers(5, 50)), int(rng.integers(10, 100)))
    v = v + rng.normal(0, 0.003, v.size)
    ref = noise_ref(seed=seed)
    a = F.extract_samples(v, 0, ref)
    b = F.extract_samples(c * v, 0, ref)
    assert b.peak_to_peak == pytest.approx(c * a.peak_to_peak, rel=1e-9)
    assert b.rate == a.rate
    assert b.effective_spectral_amplitude == a.effective_spectral_amplitude
    assert b.snr == pytest.approx(a.snr + 20 * np.log10(c), abs=1e-9)


def test_snr_does_not_rise_with_sigma():
    # same unit-variance draws scaled by sigma in the record and in the reference
    e_rec = np.random.default_rng(0).normal(size=6000)
    e_ref = np.random.default_rng(1).normal(size=6000)
    clean = clean_trace(16, 45)
    snrs = []
    for sigma in (0.0005, 0.001, 0.002, 0.004, 0.008, 0.016):
        ref = F.NoiseReference.from_trace("near", 0.9 + sigma * e_ref)
        snrs.append(F.extract_samples(clean + sigma * e_rec, 0, ref).snr)
    assert all(b <= a for a, b in zip(snrs, snrs[1:]))


def test_feature_matrix_shape():
    vs = [F.FeatureVector(1, 2, 3, 4, 5), F.FeatureVector(6, 7, 8, 9, 0)]
    X, y = F.feature_matrix(vs)
    assert X.shape == (2, 4)
    np.testing.assert_array_equal(y, [5, 0])
