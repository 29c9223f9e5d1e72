"""Synthetic glass-placing trials: audio plus a 6-axis wrench stream.

Timeline of one trial: rest, downward motion (actuator ego-noise, small
force wobble at onset), contact (impact burst, load step on the vertical
force, torque ramp toward the threshold), upward motion once the torque
crosses the threshold, relaxation back to the hold baseline, rest.
Exogenous impacts are audio bursts placed inside the motion phases.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .signal_core import MultimodalRecording, TimeSeries


class SynthError(ValueError):
    pass


@dataclass(frozen=True)
class ImpactConfig:
    amplitude: float = 0.5
    decay_rate: float = 40.0
    carrier_freqs: tuple = (1200.0, 2800.0, 4500.0)


@dataclass(frozen=True)
class ExogenousConfig:
    count: int = 0
    window: tuple | None = None  # (start, end) seconds; None -> motion phases
    guard: float = 2.5  # keep-out distance from contact and release, seconds
    amplitude: float = 0.5
    decay_rate: float = 50.0
    carrier_freqs: tuple = (900.0, 2300.0, 3900.0)
    wrench_transient: float = 0.0  # N; >0 also shakes the wrist sensor


@dataclass(frozen=True)
class MotionConfig:
    start_move_t: float = 3.0
    contact_force_step: float = 1.2
    torque_threshold: float = -3.0
    baseline_torque: float = -0.5
    torque_ramp_time: float = 0.5
    controller_latency: float = 0.05
    relax_tau: float = 0.25
    return_duration: float = 4.0
    onset_wobble: float = 0.1


@dataclass(frozen=True)
class TrialConfig:
    duration: float = 20.0
    audio_rate: float = 44100.0
    wrench_rate: float = 100.0
    object_weight: float = 2.5
    contact_time: float | None = 9.0  # None -> static robot, no contact
    noise_floor_audio: float = 0.003
    ego_noise_audio: float = 0.01
    ego_band: tuple = (150.0, 1500.0)
    wrench_noise_sd: float = 0.02
    impact: ImpactConfig = field(default_factory=ImpactConfig)
    exogenous: ExogenousConfig = field(default_factory=ExogenousConfig)
    motion: MotionConfig = field(default_factory=MotionConfig)
    seed: int = 0
    trial_id: str = "trial_000"

    def validate(self) -> None:
        if self.duration <= 0 or self.audio_rate <= 0 or self.wrench_rate <= 0:
            raise SynthError("duration and sample rates must be positive")
        if self.impact.decay_rate <= 0 or self.exogenous.decay_rate <= 0:
            raise SynthError("decay_rate must be positive")
        if self.exogenous.count < 0:
            raise SynthError("exogenous count must be non-negative")
        if self.contact_time is not None:
            if not 0 < self.contact_time < self.duration:
                raise SynthError("contact_time must lie inside (0, duration)")
            if not 0 <= self.motion.start_move_t < self.contact_time:
                raise SynthError("motion must start before contact")
            if self.motion.torque_threshold >= self.motion.baseline_torque:
                raise SynthError("torque threshold must lie below the baseline torque")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrialConfig":
        d = dict(d)
        impact = dict(d.pop("impact", {}))
        exo = dict(d.pop("exogenous", {}))
        for sub in (impact, exo):
            if "carrier_freqs" in sub:
                sub["carrier_freqs"] = tuple(sub["carrier_freqs"])
        if exo.get("window") is not None:
            exo["window"] = tuple(exo["window"])
        if "ego_band" in d:
            d["ego_band"] = tuple(d["ego_band"])
        return cls(
            impact=ImpactConfig(**impact),
            exogenous=ExogenousConfig(**exo),
            motion=MotionConfig(**d.pop("motion", {})),
            **d,
        )


def release_time(cfg: TrialConfig) -> float | None:
    """When the upward motion starts: threshold crossing plus controller latency."""
    if cfg.contact_time is None:
        return None
    return cfg.contact_time + cfg.motion.torque_ramp_time + cfg.motion.controller_latency


def motion_phases(cfg: TrialConfig) -> list[tuple[float, float]]:
    if cfg.contact_time is None:
        return []
    rel = release_time(cfg)
    end = min(cfg.duration, rel + cfg.motion.return_duration)
    return [(cfg.motion.start_move_t, cfg.contact_time), (rel, end)]


def exogenous_windows(cfg: TrialConfig) -> list[tuple[float, float]]:
    exo = cfg.exogenous
    if exo.window is not None:
        return [tuple(exo.window)]
    if cfg.contact_time is None:
        return [(0.5, cfg.duration - 0.5)]
    rel = release_time(cfg)
    (a0, a1), (b0, b1) = motion_phases(cfg)
    windows = [(a0, cfg.contact_time - exo.guard), (rel + exo.guard, b1)]
    return [(lo, hi) for lo, hi in windows if hi > lo]


def decaying_burst(t: np.ndarray, onset: float, amplitude: float, decay_rate: float, freqs) -> np.ndarray:
    """Sum of exponentially decaying sinusoids starting at ``onset``.

    Component amplitudes fall as 1, 1/2, 1/3, ... and the sum is scaled so
    the envelope peak equals ``amplitude``.
    """
    dt = t - onset
    # e^-36 of the peak is below double resolution relative to the burst
    live = (dt >= 0) & (dt <= 36.0 / decay_rate)
    out = np.zeros_like(t)
    weights = 1.0 / np.arange(1, len(freqs) + 1)
    weights = weights / weights.sum()
    env = amplitude * np.exp(-decay_rate * dt[live])
    for w, f in zip(weights, freqs):
        out[live] += w * np.sin(2 * np.pi * f * dt[live])
    out[live] *= env
    return out


def _band_noise(rng, n: int, rate: float, band: tuple, rms: float) -> np.ndarray:
    if rms == 0 or n == 0:
        return np.zeros(n)
    spec = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1.0 / rate)
    spec[(freqs < band[0]) | (freqs > band[1])] = 0
    x = np.fft.irfft(spec, n)
    return x * (rms / max(np.sqrt(np.mean(x**2)), 1e-300))


def _gate(t: np.ndarray, phases, ramp: float = 0.05) -> np.ndarray:
    g = np.zeros_like(t)
    for lo, hi in phases:
        rise = np.clip((t - lo) / ramp, 0, 1)
        fall = np.clip((hi - t) / ramp, 0, 1)
        g = np.maximum(g, np.minimum(rise, fall))
    return g


def _wobble(t, onset, amplitude, freq=2.0, tau=0.3):
    dt = t - onset
    out = np.zeros_like(t)
    live = dt >= 0
    out[live] = amplitude * np.exp(-dt[live] / tau) * np.sin(2 * np.pi * freq * dt[live])
    return out


def draw_exogenous_times(cfg: TrialConfig, rng: np.random.Generator) -> list[float]:
    windows = exogenous_windows(cfg)
    if cfg.exogenous.count == 0:
        return []
    if not windows:
        raise SynthError("no room for exogenous events in this trial")
    lengths = np.array([hi - lo for lo, hi in windows])
    times = []
    for _ in range(cfg.exogenous.count):
        u = rng.uniform(0, lengths.sum())
        i = int(np.searchsorted(np.cumsum(lengths), u, side="right"))
        i = min(i, len(windows) - 1)
        times.append(windows[i][0] + u - np.r_[0, np.cumsum(lengths)][i])
    return sorted(times)


def generate_trial(cfg: TrialConfig) -> MultimodalRecording:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    m = cfg.motion
    exo_times = draw_exogenous_times(cfg, rng)

    n_audio = int(round(cfg.duration * cfg.audio_rate))
    ta = np.arange(n_audio) / cfg.audio_rate
    audio = cfg.noise_floor_audio * rng.standard_normal(n_audio) if cfg.noise_floor_audio else np.zeros(n_audio)
    phases = motion_phases(cfg)
    if phases and cfg.ego_noise_audio:
        audio += _gate(ta, phases) * _band_noise(rng, n_audio, cfg.audio_rate, cfg.ego_band, cfg.ego_noise_audio)
    if cfg.contact_time is not None and cfg.impact.amplitude:
        imp = cfg.impact
        audio += decaying_burst(ta, cfg.contact_time, imp.amplitude, imp.decay_rate, imp.carrier_freqs)
    exo = cfg.exogenous
    for te in exo_times:
        audio += decaying_burst(ta, te, exo.amplitude, exo.decay_rate, exo.carrier_freqs)

    n_wrench = int(round(cfg.duration * cfg.wrench_rate))
    tw = np.arange(n_wrench) / cfg.wrench_rate
    fx = np.full(n_wrench, 0.1)
    fy = np.full(n_wrench, -0.05)
    fz = np.full(n_wrench, cfg.object_weight)
    tx = np.full(n_wrench, 0.05)
    ty = np.full(n_wrench, m.baseline_torque)
    tz = np.full(n_wrench, 0.02)
    if cfg.contact_time is not None:
        tc, rel = cfg.contact_time, release_time(cfg)
        fz += _wobble(tw, m.start_move_t, m.onset_wobble)
        ty += _wobble(tw, m.start_move_t, 0.5 * m.onset_wobble)
        # load transfer to the table and the torque ramp until release
        slope = (m.torque_threshold - m.baseline_torque) / m.torque_ramp_time
        pressing = (tw >= tc) & (tw < rel)
        fz[pressing] -= m.contact_force_step * (1 - np.exp(-(tw[pressing] - tc) / 0.03))
        ty[pressing] += slope * (tw[pressing] - tc)
        after = tw >= rel
        fz_rel = -m.contact_force_step * (1 - np.exp(-(rel - tc) / 0.03))
        ty_rel = slope * (rel - tc)
        decay = np.exp(-(tw[after] - rel) / m.relax_tau)
        fz[after] += fz_rel * decay
        ty[after] += ty_rel * decay
        fz += _wobble(tw, rel, m.onset_wobble)
    if exo.wrench_transient:
        for te in exo_times:
            fz += _wobble(tw, te, exo.wrench_transient, freq=8.0, tau=0.1)
    wrench = np.vstack([fx, fy, fz, tx, ty, tz])
    if cfg.wrench_noise_sd:
        wrench = wrench + cfg.wrench_noise_sd * rng.standard_normal(wrench.shape)

    contacts = () if cfg.contact_time is None else (cfg.contact_time,)
    return MultimodalRecording(
        TimeSeries(audio, cfg.audio_rate),
        TimeSeries(wrench, cfg.wrench_rate),
        contacts,
        tuple(exo_times),
        cfg.trial_id,
        {"config": cfg},
    )


@dataclass(frozen=True)
class VariationRanges:
    contact_time: tuple = (7.5, 10.5)
    start_move_t: tuple = (2.0, 3.5)
    object_weight: tuple = (1.5, 4.0)
    impact_amplitude: tuple = (0.4, 0.6)
    impact_decay: tuple = (35.0, 50.0)
    exogenous_amplitude: tuple = (0.15, 0.9)
    exogenous_count: tuple = (2, 5)
    torque_ramp_time: tuple = (0.35, 0.7)
    carrier_jitter: float = 0.15


HAND_HIT = dict(carrier_freqs=(600.0, 1500.0, 3100.0), decay_rate=70.0)
TABLE_HIT = dict(carrier_freqs=(1000.0, 2600.0, 4200.0), decay_rate=45.0)


def trial_config(index: int, rng: np.random.Generator, ranges: VariationRanges = VariationRanges(), base: TrialConfig = TrialConfig()) -> TrialConfig:
    """Jittered config for trial ``index``; index % 3 picks clean / hand-hit / table-hit."""
    u = lambda lo_hi: float(rng.uniform(*lo_hi))
    jitter = lambda freqs: tuple(float(f * rng.uniform(1 - ranges.carrier_jitter, 1 + ranges.carrier_jitter)) for f in freqs)
    kind = ("clean", "hand", "table")[index % 3]
    impact = replace(base.impact, amplitude=u(ranges.impact_amplitude), decay_rate=u(ranges.impact_decay), carrier_freqs=jitter(base.impact.carrier_freqs))
    exo = base.exogenous
    if kind != "clean":
        style = HAND_HIT if kind == "hand" else TABLE_HIT
        lo, hi = ranges.exogenous_count
        exo = replace(
            exo,
            count=int(rng.integers(lo, hi + 1)),
            amplitude=u(ranges.exogenous_amplitude),
            decay_rate=style["decay_rate"] * float(rng.uniform(0.8, 1.2)),
            carrier_freqs=jitter(style["carrier_freqs"]),
        )
    else:
        exo = replace(exo, count=0)
    motion = replace(base.motion, start_move_t=u(ranges.start_move_t), torque_ramp_time=u(ranges.torque_ramp_time))
    return replace(
        base,
        contact_time=u(ranges.contact_time),
        object_weight=u(ranges.object_weight),
        impact=impact,
        exogenous=exo,
        motion=motion,
        seed=int(rng.integers(0, 2**31 - 1)),
        trial_id=f"trial_{index:03d}",
    )


def generate_configs(n_trials: int = 60, seed: int = 0, ranges: VariationRanges = VariationRanges(), base: TrialConfig = TrialConfig()) -> list[TrialConfig]:
    if n_trials < 1:
        raise SynthError("n_trials must be >= 1")
    children = np.random.SeedSequence(seed).spawn(n_trials)
    return [trial_config(i, np.random.default_rng(ss), ranges, base) for i, ss in enumerate(children)]


def generate_dataset(n_trials: int = 60, seed: int = 0, ranges: VariationRanges = VariationRanges(), base: TrialConfig = TrialConfig()) -> list[MultimodalRecording]:
    """``n_trials`` recordings; a third are clean, the rest carry exogenous impacts."""
    return [generate_trial(c) for c in generate_configs(n_trials, seed, ranges, base)]


def exogenous_only_config(seed: int, count: int = 3, base: TrialConfig = TrialConfig(), trial_id: str = "exo_only") -> TrialConfig:
    """Static robot, no contact, only exogenous audio bursts."""
    rng = np.random.default_rng(seed)
    style = TABLE_HIT if rng.random() < 0.5 else HAND_HIT
    exo = replace(
        base.exogenous,
        count=count,
        amplitude=float(rng.uniform(0.15, 0.9)),
        decay_rate=style["decay_rate"],
        carrier_freqs=style["carrier_freqs"],
    )
    return replace(base, contact_time=None, exogenous=exo, seed=int(rng.integers(0, 2**31 - 1)), trial_id=trial_id)
