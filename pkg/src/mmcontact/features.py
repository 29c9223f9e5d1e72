"""Audio power and wrench spectral features on a shared audio-frame timeline.

Spectral features index DFT bins ``k = 1..W`` over the full (two-sided)
spectrum of a rectangular-windowed frame. Centroid and spread are reported
divided by ``W`` so they land in ``[0, 1]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal_core import (
    AUDIO_FRAMES,
    WRENCH_FRAMES,
    FrameSpec,
    MultimodalRecording,
    SignalError,
    TimeSeries,
    frame_signal,
    interpolate_to_timeline,
    magnitude,
)

FEATURE_NAMES = (
    "audio_power",
    "f_centroid",
    "f_spread",
    "f_flux",
    "t_centroid",
    "t_spread",
    "t_flux",
)


@dataclass(frozen=True)
class SpectralFrame:
    dft_magnitudes: np.ndarray
    center_time: float = 0.0

    def __post_init__(self):
        mags = np.asarray(self.dft_magnitudes, dtype=float)
        if mags.ndim != 1 or mags.size == 0:
            raise SignalError("dft_magnitudes must be a non-empty 1-D array")
        if np.any(mags < 0):
            raise SignalError("DFT magnitudes must be non-negative")
        object.__setattr__(self, "dft_magnitudes", mags)

    def __len__(self) -> int:
        return self.dft_magnitudes.size


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-frame feature rows; columns follow ``FEATURE_NAMES``."""

    timestamps: np.ndarray
    values: np.ndarray
    columns: tuple = FEATURE_NAMES

    def __post_init__(self):
        t = np.asarray(self.timestamps, dtype=float)
        v = np.asarray(self.values, dtype=float).reshape(len(t), len(self.columns))
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "columns", tuple(self.columns))

    def __len__(self) -> int:
        return len(self.timestamps)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.columns.index(name)]


def _mags(s) -> np.ndarray:
    if isinstance(s, SpectralFrame):
        return s.dft_magnitudes
    return np.asarray(s, dtype=float)


def audio_power(frame) -> float:
    x = np.asarray(frame, dtype=float)
    if x.size == 0:
        raise SignalError("audio_power needs a non-empty frame")
    return float(np.mean(np.abs(x) ** 2))


def dft_magnitude(frame, center_time: float = 0.0, n_coeffs: int | None = None) -> SpectralFrame:
    x = np.asarray(frame, dtype=float)
    if n_coeffs is not None and x.size != n_coeffs:
        raise SignalError(f"frame has {x.size} samples, expected {n_coeffs}")
    return SpectralFrame(np.abs(np.fft.fft(x)), center_time)


def _centroid_bins(mags: np.ndarray) -> np.ndarray:
    k = np.arange(1, mags.shape[-1] + 1)
    total = mags.sum(axis=-1)
    safe = np.where(total > 0, total, 1.0)
    return np.where(total > 0, (mags * k).sum(axis=-1) / safe, 0.0)


def _spread_bins(mags: np.ndarray, centroid_bins: np.ndarray) -> np.ndarray:
    k = np.arange(1, mags.shape[-1] + 1)
    total = mags.sum(axis=-1)
    safe = np.where(total > 0, total, 1.0)
    dev = (k - centroid_bins[..., np.newaxis]) ** 2
    var = np.where(total > 0, (dev * mags).sum(axis=-1) / safe, 0.0)
    return np.sqrt(np.maximum(var, 0.0))


def _unit_sum(mags: np.ndarray) -> np.ndarray:
    total = mags.sum(axis=-1, keepdims=True)
    uniform = np.full_like(mags, 1.0 / mags.shape[-1])
    return np.where(total > 0, mags / np.where(total > 0, total, 1.0), uniform)


def spectral_centroid(s) -> float:
    mags = _mags(s)
    return float(_centroid_bins(mags) / mags.size)


def spectral_spread(s) -> float:
    mags = _mags(s)
    return float(_spread_bins(mags, _centroid_bins(mags)) / mags.size)


def spectral_flux(current, previous) -> float:
    a, b = _mags(current), _mags(previous)
    if a.shape != b.shape:
        raise SignalError("spectral_flux needs frames with equal coefficient counts")
    return float(np.sum((_unit_sum(a) - _unit_sum(b)) ** 2))


def spectral_features(mags: np.ndarray, previous: np.ndarray | None = None) -> np.ndarray:
    """Centroid, spread and flux for a ``(n_frames, W)`` magnitude matrix.

    ``previous`` is the magnitude vector of the frame preceding the first
    row; without it the first row's flux is 0.
    """
    mags = np.atleast_2d(np.asarray(mags, dtype=float))
    width = mags.shape[1]
    c = _centroid_bins(mags)
    s = _spread_bins(mags, c)
    en = _unit_sum(mags)
    flux = np.zeros(len(mags))
    flux[1:] = np.sum((en[1:] - en[:-1]) ** 2, axis=1)
    if previous is not None and len(mags):
        flux[0] = np.sum((en[0] - _unit_sum(np.asarray(previous, dtype=float))) ** 2)
    return np.column_stack([c / width, s / width, flux])


def wrench_spectral_series(v: TimeSeries, spec: FrameSpec) -> tuple[np.ndarray, np.ndarray]:
    """Frame the 3-axis magnitude of ``v`` and return (centers, features)."""
    frames, centers = frame_signal(magnitude(v), spec)
    mags = np.abs(np.fft.fft(frames, axis=1))
    return centers, spectral_features(mags)


def audio_power_series(audio: TimeSeries, spec: FrameSpec) -> tuple[np.ndarray, np.ndarray]:
    frames, centers = frame_signal(audio, spec)
    return centers, np.mean(frames**2, axis=1)


def extract_features(
    rec: MultimodalRecording,
    audio_spec: FrameSpec = AUDIO_FRAMES,
    wrench_spec: FrameSpec = WRENCH_FRAMES,
) -> FeatureMatrix:
    """Seven-column feature matrix on the audio-frame timeline of ``rec``."""
    t_audio, power = audio_power_series(rec.audio, audio_spec)
    columns = [power]
    for part in (rec.force, rec.torque):
        centers, feats = wrench_spectral_series(part, wrench_spec)
        for j in range(3):
            columns.append(interpolate_to_timeline(np.column_stack([centers, feats[:, j]]), t_audio))
    return FeatureMatrix(t_audio, np.column_stack(columns))
