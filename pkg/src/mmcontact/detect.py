"""Incremental feature extraction and contact-event detection over live streams.

Rows come out in time order. A row can only be emitted once the wrench
frame centered after its timestamp exists (features are interpolated
between wrench frames), so the wrench hop sets the decision latency.
"""

from __future__ import annotations

import time
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import forest as rf
from .features import spectral_features
from .signal_core import (
    AUDIO_FRAMES,
    WRENCH_FRAMES,
    FrameSpec,
    MultimodalRecording,
    SignalError,
    interpolate_to_timeline,
)


class _Framer:
    """Collects samples and releases complete frames (hop-spaced, no padding)."""

    def __init__(self, spec: FrameSpec, n_channels: int = 1):
        self.spec = spec
        self.buf = np.zeros((n_channels, 0))
        self.buf_start = 0  # global index of buf[:, 0]
        self.next_frame = 0

    def push(self, samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Append ``(n_channels, n)`` samples; return (frame indices, frames)."""
        self.buf = np.concatenate([self.buf, samples], axis=1)
        end = self.buf_start + self.buf.shape[1]
        n_avail = self.spec.n_frames(end)
        idx = np.arange(self.next_frame, n_avail)
        starts = idx * self.spec.hop - self.buf_start
        frames = np.stack([self.buf[:, s : s + self.spec.frame_len] for s in starts], axis=1) if len(idx) else np.zeros((self.buf.shape[0], 0, self.spec.frame_len))
        self.next_frame = n_avail
        drop = self.next_frame * self.spec.hop - self.buf_start
        if drop > 0:
            self.buf = self.buf[:, drop:]
            self.buf_start += drop
        return idx, frames


class StreamingFeatureExtractor:
    """Produces the same rows as ``features.extract_features``, one chunk at a time."""

    def __init__(
        self,
        audio_rate: float,
        wrench_rate: float,
        audio_spec: FrameSpec = AUDIO_FRAMES,
        wrench_spec: FrameSpec = WRENCH_FRAMES,
        audio_start: float = 0.0,
        wrench_start: float = 0.0,
    ):
        self.audio_rate, self.wrench_rate = float(audio_rate), float(wrench_rate)
        self.audio_spec, self.wrench_spec = audio_spec, wrench_spec
        self.audio_start, self.wrench_start = audio_start, wrench_start
        self._audio = _Framer(audio_spec, 1)
        self._wrench = _Framer(wrench_spec, 2)
        self._prev_mags: np.ndarray | None = None  # (2, W) for flux
        self._w_times: list[float] = []
        self._w_feats: list[np.ndarray] = []
        self._w_ready_at: list[float] = []
        self._pending: deque = deque()  # (timestamp, power, audio_ready_at)
        self.wrench_clock = wrench_start

    def push_audio(self, samples) -> None:
        x = np.asarray(samples, dtype=float).reshape(1, -1)
        idx, frames = self._audio.push(x)
        if len(idx):
            power = np.mean(frames[0] ** 2, axis=1)
            starts = idx * self.audio_spec.hop
            centers = self.audio_start + (starts + self.audio_spec.frame_len / 2) / self.audio_rate
            ready = self.audio_start + (starts + self.audio_spec.frame_len - 1) / self.audio_rate
            self._pending.extend(zip(centers, power, ready))

    def push_wrench(self, samples) -> None:
        """``samples`` is ``(n, 6)`` or ``(6, n)`` in fx, fy, fz, tx, ty, tz order."""
        w = np.asarray(samples, dtype=float)
        if w.ndim == 1:
            w = w.reshape(1, 6)
        if w.shape[0] != 6 and w.shape[1] == 6:
            w = w.T
        mags = np.vstack([np.sqrt(np.sum(w[:3] ** 2, axis=0)), np.sqrt(np.sum(w[3:] ** 2, axis=0))])
        idx, frames = self._wrench.push(mags)
        self.wrench_clock = self.wrench_start + (self._wrench.buf_start + self._wrench.buf.shape[1] - 1) / self.wrench_rate
        if not len(idx):
            return
        spectra = np.abs(np.fft.fft(frames, axis=2))
        cols = []
        for ch in range(2):
            prev = None if self._prev_mags is None else self._prev_mags[ch]
            cols.append(spectral_features(spectra[ch], prev))
        self._prev_mags = spectra[:, -1, :]
        feats = np.hstack(cols)
        starts = idx * self.wrench_spec.hop
        centers = self.wrench_start + (starts + self.wrench_spec.frame_len / 2) / self.wrench_rate
        ready = self.wrench_start + (starts + self.wrench_spec.frame_len - 1) / self.wrench_rate
        self._w_times.extend(centers)
        self._w_feats.extend(feats)
        self._w_ready_at.extend(ready)

    def pop_ready(self, flush: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Rows whose interpolation inputs are complete.

        Returns (timestamps, feature rows, stream time at which each row became
        computable). With ``flush`` every pending row is resolved, using the
        last wrench frame beyond the final center.
        """
        if not self._w_times:
            if flush and self._pending:
                raise SignalError("signal too short: no complete wrench frame")
            return np.zeros(0), np.zeros((0, 7)), np.zeros(0)
        last = self._w_times[-1]
        rows = []
        while self._pending and (flush or self._pending[0][0] <= last):
            rows.append(self._pending.popleft())
        if not rows:
            return np.zeros(0), np.zeros((0, 7)), np.zeros(0)
        t = np.array([r[0] for r in rows])
        power = np.array([r[1] for r in rows])
        audio_ready = np.array([r[2] for r in rows])
        centers = np.asarray(self._w_times)
        feats = np.asarray(self._w_feats)
        cols = [power]
        for j in range(6):
            cols.append(interpolate_to_timeline(np.column_stack([centers, feats[:, j]]), t))
        # the wrench frame that closes each row's interpolation bracket
        k = np.minimum(np.searchsorted(centers, t, side="left"), len(centers) - 1)
        wrench_ready = np.asarray(self._w_ready_at)[k]
        if flush:
            wrench_ready = np.where(t > last, self.wrench_clock, wrench_ready)
        return t, np.column_stack(cols), np.maximum(audio_ready, wrench_ready)


@dataclass
class ContactEvent:
    timestamp: float  # first positive frame
    probability: float  # peak contact probability over the merged frames
    end: float
    n_frames: int


@dataclass
class DetectionResult:
    events: list
    timestamps: np.ndarray
    probabilities: np.ndarray
    latency: np.ndarray  # stream-time delay from frame center to decision, s
    compute_time: float  # wall-clock seconds spent extracting and classifying
    n_frames: int = 0

    def latency_summary(self) -> dict:
        lat = self.latency
        return {
            "frames": int(self.n_frames),
            "mean_latency_s": float(lat.mean()) if lat.size else 0.0,
            "max_latency_s": float(lat.max()) if lat.size else 0.0,
            "compute_us_per_frame": 1e6 * self.compute_time / max(self.n_frames, 1),
        }


@dataclass
class EventMerger:
    """Joins positive frames closer than ``gap`` seconds into one event."""

    gap: float = 0.1
    events: list = field(default_factory=list)
    _open: ContactEvent | None = None

    def feed(self, t: float, proba: float, positive: bool) -> None:
        if not positive:
            if self._open is not None and t - self._open.end > self.gap:
                self._close()
            return
        if self._open is not None and t - self._open.end <= self.gap:
            self._open.end = t
            self._open.n_frames += 1
            self._open.probability = max(self._open.probability, proba)
        else:
            self._close()
            self._open = ContactEvent(t, proba, t, 1)

    def _close(self) -> None:
        if self._open is not None:
            self.events.append(self._open)
            self._open = None

    def finish(self) -> list:
        self._close()
        return self.events


def detect_stream(
    model: rf.RandomForestModel,
    rec: MultimodalRecording,
    audio_spec: FrameSpec = AUDIO_FRAMES,
    wrench_spec: FrameSpec = WRENCH_FRAMES,
    merge_gap: float = 0.1,
    chunk: float = 0.02,
) -> DetectionResult:
    """Replay ``rec`` in ``chunk``-second slices and classify rows as they mature."""
    extractor = StreamingFeatureExtractor(
        rec.audio.sample_rate, rec.wrench.sample_rate, audio_spec, wrench_spec,
        rec.audio.start_time, rec.wrench.start_time,
    )
    merger = EventMerger(merge_gap)
    contact_col = model.classes.index(1)
    audio, wrench = rec.audio.samples[0], rec.wrench.samples
    t0 = min(rec.audio.start_time, rec.wrench.start_time)
    t_end = max(rec.audio.end_time, rec.wrench.end_time)
    all_t, all_p, all_lat = [], [], []
    a_pos = w_pos = 0
    compute = 0.0

    def classify(t, X, ready):
        full = rf.predict_proba(model, X) if len(t) else np.zeros((0, len(model.classes)))
        proba = full[:, contact_col]
        positive = np.argmax(full, axis=1) == contact_col  # ties go to not_contact
        for ti, pi, hit in zip(t, proba, positive):
            merger.feed(float(ti), float(pi), bool(hit))
        all_t.append(t)
        all_p.append(proba)
        all_lat.append(ready - t)

    now = t0
    while now <= t_end:
        now += chunk
        a_stop = min(len(audio), int(np.floor((now - rec.audio.start_time) * rec.audio.sample_rate)) + 1)
        w_stop = min(wrench.shape[1], int(np.floor((now - rec.wrench.start_time) * rec.wrench.sample_rate)) + 1)
        tick = time.perf_counter()
        if a_stop > a_pos:
            extractor.push_audio(audio[a_pos:a_stop])
            a_pos = a_stop
        if w_stop > w_pos:
            extractor.push_wrench(wrench[:, w_pos:w_stop])
            w_pos = w_stop
        classify(*extractor.pop_ready())
        compute += time.perf_counter() - tick
    tick = time.perf_counter()
    classify(*extractor.pop_ready(flush=True))
    compute += time.perf_counter() - tick

    t = np.concatenate(all_t) if all_t else np.zeros(0)
    return DetectionResult(
        merger.finish(),
        t,
        np.concatenate(all_p) if all_p else np.zeros(0),
        np.concatenate(all_lat) if all_lat else np.zeros(0),
        compute,
        len(t),
    )
