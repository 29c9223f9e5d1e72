"""Uniform time-series containers, framing and multi-rate alignment.

Audio and wrench streams are assumed to share one time base at ingest;
no clock-drift correction is attempted here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

WRENCH_CHANNELS = ("fx", "fy", "fz", "tx", "ty", "tz")


class SignalError(ValueError):
    """Raised for malformed signals or framing requests."""


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled signal stored as ``(channels, length)``."""

    samples: np.ndarray
    sample_rate: float
    start_time: float = 0.0

    def __post_init__(self):
        data = np.asarray(self.samples, dtype=float)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2:
            raise SignalError("samples must be 1-D or (channels, length)")
        if not self.sample_rate > 0:
            raise SignalError("sample_rate must be positive")
        data.setflags(write=False)
        object.__setattr__(self, "samples", data)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))
        object.__setattr__(self, "start_time", float(self.start_time))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    def __len__(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @property
    def end_time(self) -> float:
        """Timestamp of the last sample."""
        return self.start_time + (len(self) - 1) / self.sample_rate

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(len(self)) / self.sample_rate

    def channel(self, index: int) -> "TimeSeries":
        return TimeSeries(self.samples[index], self.sample_rate, self.start_time)

    def channels(self, indices: Sequence[int]) -> "TimeSeries":
        return TimeSeries(self.samples[list(indices)], self.sample_rate, self.start_time)


@dataclass(frozen=True)
class FrameSpec:
    frame_len: int
    hop: int

    def __post_init__(self):
        if int(self.frame_len) != self.frame_len or self.frame_len < 1:
            raise SignalError(f"frame_len must be a positive integer, got {self.frame_len}")
        if int(self.hop) != self.hop or self.hop < 1:
            raise SignalError(f"hop must be a positive integer, got {self.hop}")
        object.__setattr__(self, "frame_len", int(self.frame_len))
        object.__setattr__(self, "hop", int(self.hop))

    def n_frames(self, length: int) -> int:
        if length < self.frame_len:
            return 0
        return (length - self.frame_len) // self.hop + 1


AUDIO_FRAMES = FrameSpec(512, 160)
WRENCH_FRAMES = FrameSpec(160, 128)


@dataclass(frozen=True)
class MultimodalRecording:
    """One trial: mono audio, 6-channel wrench and ground-truth annotations."""

    audio: TimeSeries
    wrench: TimeSeries
    contact_times: tuple = ()
    exogenous_times: tuple = ()
    trial_id: str = "trial"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.audio.n_channels != 1:
            raise SignalError("audio must have exactly one channel")
        if self.wrench.n_channels != 6:
            raise SignalError("wrench must have 6 channels (fx, fy, fz, tx, ty, tz)")
        lo = max(self.audio.start_time, self.wrench.start_time)
        hi = min(self.audio.end_time, self.wrench.end_time)
        if lo > hi:
            raise SignalError("audio and wrench spans do not overlap")
        contacts = tuple(float(t) for t in self.contact_times)
        exo = tuple(float(t) for t in self.exogenous_times)
        if list(contacts) != sorted(contacts):
            raise SignalError("contact_times must be sorted ascending")
        span_lo = min(self.audio.start_time, self.wrench.start_time)
        span_hi = max(self.audio.end_time, self.wrench.end_time)
        for t in contacts + exo:
            if not span_lo <= t <= span_hi:
                raise SignalError(f"annotation at {t} s lies outside the recording span")
        object.__setattr__(self, "contact_times", contacts)
        object.__setattr__(self, "exogenous_times", exo)
        object.__setattr__(self, "trial_id", str(self.trial_id))

    @property
    def force(self) -> TimeSeries:
        return self.wrench.channels([0, 1, 2])

    @property
    def torque(self) -> TimeSeries:
        return self.wrench.channels([3, 4, 5])


def frame_starts(length: int, spec: FrameSpec) -> np.ndarray:
    n = spec.n_frames(length)
    return np.arange(n) * spec.hop


def frame_centers(x: TimeSeries, spec: FrameSpec) -> np.ndarray:
    starts = frame_starts(len(x), spec)
    return x.start_time + (starts + spec.frame_len / 2) / x.sample_rate


def frame_signal(x: TimeSeries, spec: FrameSpec) -> tuple[np.ndarray, np.ndarray]:
    """Cut a single-channel series into ``(n_frames, frame_len)`` windows.

    Trailing samples that do not fill a whole frame are dropped. Returns the
    frames (a read-only strided view) and the center timestamp of each frame.
    """
    if x.n_channels != 1:
        raise SignalError("frame_signal expects a single-channel series")
    if len(x) < spec.frame_len:
        raise SignalError(
            f"signal too short: {len(x)} samples < frame length {spec.frame_len}"
        )
    data = x.samples[0]
    windows = np.lib.stride_tricks.sliding_window_view(data, spec.frame_len)[:: spec.hop]
    return windows, frame_centers(x, spec)


def magnitude(v: TimeSeries) -> TimeSeries:
    """Euclidean norm across three channels, sample by sample."""
    if v.n_channels != 3:
        raise SignalError(f"magnitude needs exactly 3 channels, got {v.n_channels}")
    return TimeSeries(np.sqrt(np.sum(v.samples**2, axis=0)), v.sample_rate, v.start_time)


def interpolate_to_timeline(values, target_timestamps) -> np.ndarray:
    """Linear interpolation of ``(timestamp, value)`` pairs onto new timestamps.

    Targets outside the source span take the nearest end value.
    """
    src = np.asarray(values, dtype=float)
    if src.size == 0:
        raise SignalError("cannot interpolate from an empty source")
    src = src.reshape(-1, 2)
    t, y = src[:, 0], src[:, 1]
    if np.any(np.diff(t) <= 0):
        raise SignalError("source timestamps must be strictly increasing")
    x = np.asarray(target_timestamps, dtype=float)
    out = np.interp(x, t, y)
    # clip to the bracketing pair: the slope form can overshoot by an ulp
    j = np.clip(np.searchsorted(t, x, side="right") - 1, 0, len(t) - 1)
    k = np.minimum(j + 1, len(t) - 1)
    return np.clip(out, np.minimum(y[j], y[k]), np.maximum(y[j], y[k]))
