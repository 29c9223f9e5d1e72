import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mmcontact.features import (
    FEATURE_NAMES,
    audio_power,
    dft_magnitude,
    extract_features,
    spectral_centroid,
    spectral_features,
    spectral_flux,
    spectral_spread,
)
from mmcontact.signal_core import (
    AUDIO_FRAMES,
    WRENCH_FRAMES,
    MultimodalRecording,
    SignalError,
    TimeSeries,
    frame_signal,
    magnitude,
)

import oracles

# exact zeros or normal floats; subnormals lose the scale in alpha * m
magnitude_values = st.one_of(st.just(0.0), st.floats(1e-6, 1e6))
mags_strategy = arrays(float, st.integers(1, 64), elements=magnitude_values)


def test_audio_power_examples():
    assert audio_power(np.zeros(512)) == 0.0
    assert audio_power(np.full(512, 0.5)) == 0.25
    impulse = np.zeros(512)
    impulse[7] = 1.0
    assert audio_power(impulse) == pytest.approx(0.001953125, rel=1e-15)
    with pytest.raises(SignalError):
        audio_power([])


def test_dft_examples():
    assert np.all(dft_magnitude(np.zeros(160)).dft_magnitudes == 0)
    mags = dft_magnitude(np.ones(160)).dft_magnitudes
    assert mags[0] == pytest.approx(160.0)
    assert np.max(mags[1:]) < 1e-9
    with pytest.raises(SignalError):
        dft_magnitude(np.ones(10), n_coeffs=160)


def test_dft_matches_direct_summation():
    x = np.random.default_rng(0).normal(size=160)
    ref = oracles.dft_magnitudes(x)
    got = dft_magnitude(x).dft_magnitudes
    np.testing.assert_allclose(got, ref, rtol=1e-9, atol=1e-9 * np.max(ref))


def test_centroid_examples():
    single = np.zeros(160)
    single[9] = 3.0  # bin k=10
    assert spectral_centroid(single) == pytest.approx(0.0625)
    assert spectral_centroid(np.full(160, 2.0)) == pytest.approx(0.503125)
    assert spectral_centroid(np.zeros(160)) == 0.0


def test_spread_examples():
    single = np.zeros(160)
    single[9] = 1.0
    assert spectral_spread(single) == 0.0
    two = np.zeros(160)
    two[[9, 19]] = 1.0
    assert spectral_centroid(two) == pytest.approx(15 / 160)
    assert spectral_spread(two) == pytest.approx(0.03125)
    assert spectral_spread(np.ones(160)) == pytest.approx(np.sqrt((160**2 - 1) / 12) / 160)
    assert spectral_spread(np.ones(160)) == pytest.approx(0.28867, abs=1e-5)
    assert spectral_spread(np.zeros(160)) == 0.0


def test_flux_examples():
    a = np.random.default_rng(1).random(160)
    assert spectral_flux(a, a) == 0.0
    e1, e2 = np.zeros(160), np.zeros(160)
    e1[0], e2[1] = 1.0, 1.0
    assert spectral_flux(e1, e2) == 2.0
    with pytest.raises(SignalError):
        spectral_flux(np.ones(4), np.ones(5))


def test_flux_matches_direct_sum():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b = rng.random(160) * rng.uniform(0.1, 10), rng.random(160)
        assert spectral_flux(a, b) == pytest.approx(oracles.flux(a, b), abs=1e-12)


def test_flux_of_zero_spectrum_uses_uniform():
    e1 = np.zeros(8)
    e1[0] = 1.0
    expected = (1 - 1 / 8) ** 2 + 7 * (1 / 8) ** 2
    assert spectral_flux(e1, np.zeros(8)) == pytest.approx(expected)
    assert spectral_flux(np.ones(8), np.zeros(8)) == pytest.approx(0.0)


@given(mags_strategy)
def test_centroid_spread_in_unit_interval(m):
    assert 0.0 <= spectral_centroid(m) <= 1.0
    assert 0.0 <= spectral_spread(m) <= 1.0


@given(mags_strategy, st.floats(1e-3, 1e3))
def test_centroid_spread_scale_invariant(m, alpha):
    assert spectral_centroid(alpha * m) == pytest.approx(spectral_centroid(m), rel=1e-9, abs=1e-12)
    assert spectral_spread(alpha * m) == pytest.approx(spectral_spread(m), rel=1e-9, abs=1e-9)


@given(st.integers(1, 40).flatmap(lambda n: st.tuples(
    arrays(float, n, elements=st.floats(0, 1e6)), arrays(float, n, elements=st.floats(0, 1e6)))))
def test_flux_symmetric_and_bounded(pair):
    a, b = pair
    f = spectral_flux(a, b)
    assert f == spectral_flux(b, a)
    assert 0.0 <= f <= 2.0
    assert spectral_flux(a, a) == 0.0


@given(arrays(float, st.integers(1, 600), elements=st.floats(-10, 10)), st.floats(-100, 100))
def test_power_homogeneity(x, alpha):
    p = audio_power(x)
    assert p >= 0
    assert audio_power(alpha * x) == pytest.approx(alpha**2 * p, rel=1e-9, abs=1e-300)


def test_vectorized_features_match_scalar_functions():
    rng = np.random.default_rng(3)
    mags = rng.random((6, 32))
    mags[2] = 0.0
    out = spectral_features(mags)
    assert out[0, 2] == 0.0  # first frame without history
    for i, row in enumerate(mags):
        assert out[i, 0] == pytest.approx(spectral_centroid(row), abs=1e-15)
        assert out[i, 1] == pytest.approx(spectral_spread(row), abs=1e-15)
        if i:
            assert out[i, 2] == pytest.approx(spectral_flux(row, mags[i - 1]), abs=1e-15)
    with_prev = spectral_features(mags[3:], previous=mags[2])
    np.testing.assert_array_equal(with_prev, out[3:])


def _recording(audio, wrench, rate_a=44100.0, rate_w=100.0):
    return MultimodalRecording(TimeSeries(audio, rate_a), TimeSeries(wrench, rate_w))


def test_twenty_second_trial_has_5510_rows():
    rng = np.random.default_rng(4)
    rec = _recording(0.01 * rng.normal(size=882000), rng.normal(size=(6, 2000)))
    fm = extract_features(rec)
    assert len(fm) == (882000 - 512) // 160 + 1 == 5510
    assert fm.columns == FEATURE_NAMES
    assert np.all(np.diff(fm.timestamps) > 0)
    np.testing.assert_allclose(np.diff(fm.timestamps), 160 / 44100, rtol=1e-9)


def test_static_recording_features():
    wrench = np.tile(np.array([[0.1], [0.0], [2.5], [0.0], [-0.5], [0.0]]), (1, 1000))
    fm = extract_features(_recording(np.zeros(441000), wrench))
    assert np.all(fm.column("audio_power") == 0)
    assert np.all(fm.column("f_flux") == 0) and np.all(fm.column("t_flux") == 0)
    # constant magnitude puts all spectral mass at bin 1
    np.testing.assert_allclose(fm.column("f_centroid"), 1 / 160)
    np.testing.assert_allclose(fm.column("t_spread"), 0, atol=1e-12)


def test_wrench_columns_are_interpolated_frame_features():
    rng = np.random.default_rng(5)
    rec = _recording(rng.normal(size=44100 * 5), rng.normal(size=(6, 500)))
    fm = extract_features(rec)
    frames, centers = frame_signal(magnitude(rec.force), WRENCH_FRAMES)
    assert len(frames) == (500 - 160) // 128 + 1
    mags = [oracles.dft_magnitudes(f) for f in frames]
    ref = np.array([oracles.centroid_spread(m) for m in mags])
    fluxes = [0.0] + [oracles.flux(mags[i], mags[i - 1]) for i in range(1, len(mags))]
    for col, series in (("f_centroid", ref[:, 0]), ("f_spread", ref[:, 1]), ("f_flux", fluxes)):
        expected = np.interp(fm.timestamps, centers, series)
        np.testing.assert_allclose(fm.column(col), expected, rtol=1e-9, atol=1e-12)
    audio_frames, _ = frame_signal(rec.audio, AUDIO_FRAMES)
    assert fm.column("audio_power")[17] == pytest.approx(oracles.power(audio_frames[17]), rel=1e-12)
