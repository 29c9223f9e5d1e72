import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mmcontact.signal_core import (
    FrameSpec,
    MultimodalRecording,
    SignalError,
    TimeSeries,
    frame_signal,
    interpolate_to_timeline,
    magnitude,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_timeseries_sample_times():
    ts = TimeSeries(np.zeros((2, 5)), 10.0, start_time=1.0)
    assert ts.n_channels == 2 and len(ts) == 5
    np.testing.assert_allclose(ts.times(), [1.0, 1.1, 1.2, 1.3, 1.4])
    assert ts.end_time == pytest.approx(1.4)


def test_timeseries_rejects_bad_rate_and_is_read_only():
    with pytest.raises(SignalError):
        TimeSeries(np.zeros(4), 0.0)
    ts = TimeSeries(np.zeros(4), 1.0)
    with pytest.raises(ValueError):
        ts.samples[0, 0] = 1.0


def test_framespec_rejects_non_positive():
    with pytest.raises(SignalError):
        FrameSpec(0, 1)
    with pytest.raises(SignalError):
        FrameSpec(4, 0)


def test_one_frame_when_length_equals_frame_len():
    frames, centers = frame_signal(TimeSeries(np.arange(512.0), 44100), FrameSpec(512, 160))
    assert frames.shape == (1, 512)
    assert centers[0] == pytest.approx(256 / 44100)


def test_832_samples_give_three_frames():
    x = np.arange(832.0)
    frames, centers = frame_signal(TimeSeries(x, 44100, 2.0), FrameSpec(512, 160))
    assert frames.shape == (3, 512)
    assert [f[0] for f in frames] == [0, 160, 320]
    np.testing.assert_allclose(centers, 2.0 + (np.array([0, 160, 320]) + 256) / 44100)


def test_short_signal_raises():
    with pytest.raises(SignalError, match="signal too short"):
        frame_signal(TimeSeries(np.zeros(100), 44100), FrameSpec(512, 160))


@given(st.integers(1, 3000), st.integers(1, 600), st.integers(1, 400))
def test_frames_cover_valid_indices(length, frame_len, hop):
    spec = FrameSpec(frame_len, hop)
    if length < frame_len:
        with pytest.raises(SignalError):
            frame_signal(TimeSeries(np.arange(float(length)), 1.0), spec)
        return
    frames, _ = frame_signal(TimeSeries(np.arange(float(length)), 1.0), spec)
    assert len(frames) == (length - frame_len) // hop + 1
    starts = frames[:, 0].astype(int)
    assert np.all(np.diff(starts) == hop)
    assert starts[0] == 0 and frames.max() < length and frames.min() >= 0
    # no padding: the next frame would run past the end
    assert starts[-1] + hop + frame_len > length


@pytest.mark.parametrize(
    "vec, expected", [((3, 4, 0), 5.0), ((0, 0, 0), 0.0), ((1, 1, 1), 1.7320508075688772)]
)
def test_magnitude_examples(vec, expected):
    out = magnitude(TimeSeries(np.array(vec, dtype=float).reshape(3, 1), 100.0, 0.5))
    assert out.samples[0, 0] == pytest.approx(expected, rel=1e-12)
    assert out.sample_rate == 100.0 and out.start_time == 0.5


def test_magnitude_needs_three_channels():
    with pytest.raises(SignalError):
        magnitude(TimeSeries(np.zeros((2, 4)), 1.0))


@given(arrays(float, (3, 12), elements=finite), st.permutations([0, 1, 2]), st.integers(0, 2))
def test_magnitude_sign_and_permutation(v, perm, flip):
    base = magnitude(TimeSeries(v, 1.0)).samples[0]
    assert np.all(base >= 0)
    flipped = v.copy()
    flipped[flip] *= -1
    np.testing.assert_array_equal(magnitude(TimeSeries(flipped, 1.0)).samples[0], base)
    np.testing.assert_allclose(magnitude(TimeSeries(v[list(perm)], 1.0)).samples[0], base, rtol=1e-12, atol=1e-300)


def test_interpolation_examples():
    assert interpolate_to_timeline([(0, 0), (1, 10)], [0.5]).tolist() == [5.0]
    assert interpolate_to_timeline([(0, 7)], [-1, 0, 3]).tolist() == [7.0, 7.0, 7.0]
    np.testing.assert_allclose(interpolate_to_timeline([(0, 0), (1, 10), (2, 0)], [0.25, 1.5]), [2.5, 5.0])


def test_interpolation_errors():
    with pytest.raises(SignalError):
        interpolate_to_timeline([], [0.0])
    with pytest.raises(SignalError):
        interpolate_to_timeline([(1, 0), (1, 2)], [0.0])


@st.composite
def sources(draw):
    n = draw(st.integers(1, 20))
    steps = draw(arrays(float, n, elements=st.floats(1e-3, 10)))
    t = draw(st.floats(-100, 100)) + np.cumsum(steps)
    y = draw(arrays(float, n, elements=finite))
    return np.column_stack([t, y])


@given(sources(), arrays(float, 30, elements=st.floats(-200, 400)))
def test_interpolation_exact_at_nodes_and_bounded(src, targets):
    np.testing.assert_array_equal(interpolate_to_timeline(src, src[:, 0]), src[:, 1])
    out = interpolate_to_timeline(src, targets)
    assert out.min() >= src[:, 1].min() and out.max() <= src[:, 1].max()


def _rec(contacts=(), exo=(), audio_start=0.0):
    return MultimodalRecording(
        TimeSeries(np.zeros(1000), 1000.0, audio_start),
        TimeSeries(np.zeros((6, 10)), 10.0),
        contacts,
        exo,
    )


def test_recording_invariants():
    rec = _rec((0.2, 0.5), (0.7,))
    assert rec.force.n_channels == 3 and rec.torque.n_channels == 3
    with pytest.raises(SignalError):
        _rec((0.5, 0.2))
    with pytest.raises(SignalError):
        _rec((), (5.0,))
    with pytest.raises(SignalError):
        _rec(audio_start=10.0)
    with pytest.raises(SignalError):
        MultimodalRecording(TimeSeries(np.zeros((2, 10)), 10.0), TimeSeries(np.zeros((6, 10)), 10.0))
