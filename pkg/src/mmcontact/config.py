"""Pipeline configuration stored as one YAML document."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from pathlib import Path

import yaml

from .dataset import DEFAULT_LABEL_WINDOW, DatasetError, SplitSpec
from .forest import ForestConfig, ForestError
from .signal_core import FrameSpec, SignalError


class ConfigError(ValueError):
    pass


@dataclass
class Paths:
    data_dir: str = "data"
    features_dir: str | None = None  # None -> <data_dir>/features
    model_file: str = "model.json"
    report_dir: str = "reports"

    def features(self) -> Path:
        return Path(self.features_dir) if self.features_dir else Path(self.data_dir) / "features"


@dataclass
class FramesConfig:
    frame_len: int
    hop: int

    def spec(self) -> FrameSpec:
        return FrameSpec(self.frame_len, self.hop)


@dataclass
class LabelConfig:
    window: float = DEFAULT_LABEL_WINDOW
    # window center relative to the annotated contact instant; 13 ms puts the
    # first labeled audio frame just after the impact onset
    offset: float = 0.013


@dataclass
class SplitConfig:
    train_frac: float = 0.56
    val_frac: float = 0.19
    test_frac: float = 0.25
    seed: int = 0
    mode: str = "frame_level"

    def spec(self) -> SplitSpec:
        return SplitSpec(**asdict(self))


@dataclass
class ForestSection:
    n_estimators: int = 8
    max_features: object = "sqrt"
    min_samples_split: int = 2
    max_depth: int | None = None
    seed: int = 0
    bootstrap: bool = True

    def spec(self) -> ForestConfig:
        return ForestConfig(**asdict(self))


@dataclass
class SweepConfig:
    n_min: int = 1
    n_max: int = 10


@dataclass
class CVConfig:
    k: int = 10
    seed: int = 0


@dataclass
class SynthSection:
    n_trials: int = 60
    seed: int = 0
    duration: float = 20.0
    audio_rate: float = 44100.0
    wrench_rate: float = 100.0
    torque_threshold: float = -3.0
    sample_format: str = "float32"


@dataclass
class DetectConfig:
    merge_gap: float = 0.1
    chunk: float = 0.02


@dataclass
class PipelineConfig:
    paths: Paths = field(default_factory=Paths)
    audio_frames: FramesConfig = field(default_factory=lambda: FramesConfig(512, 160))
    wrench_frames: FramesConfig = field(default_factory=lambda: FramesConfig(160, 128))
    labels: LabelConfig = field(default_factory=LabelConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    forest: ForestSection = field(default_factory=ForestSection)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    cv: CVConfig = field(default_factory=CVConfig)
    synth: SynthSection = field(default_factory=SynthSection)
    detect: DetectConfig = field(default_factory=DetectConfig)

    def validate(self) -> "PipelineConfig":
        try:
            self.audio_frames.spec()
            self.wrench_frames.spec()
            self.split.spec()
            self.forest.spec()
        except (SignalError, DatasetError, ForestError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc
        if self.labels.window <= 0:
            raise ConfigError("labels.window must be positive")
        if not 1 <= self.sweep.n_min <= self.sweep.n_max:
            raise ConfigError("sweep range must satisfy 1 <= n_min <= n_max")
        if self.cv.k < 2:
            raise ConfigError("cv.k must be >= 2")
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    def dump(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def save(self, path) -> None:
        Path(path).write_text(self.dump())

    @classmethod
    def from_dict(cls, d: dict | None) -> "PipelineConfig":
        cfg = cls()
        for key, section in (d or {}).items():
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config section {key!r}")
            current = getattr(cfg, key)
            if not isinstance(section, dict):
                raise ConfigError(f"config section {key!r} must be a mapping")
            known = {f.name for f in fields(current)}
            unknown = set(section) - known
            if unknown:
                raise ConfigError(f"unknown keys in {key}: {', '.join(sorted(unknown))}")
            setattr(cfg, key, replace(current, **section))
        return cfg.validate()

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
        return cls.from_dict(yaml.safe_load(text))

    def override(self, dotted: str, raw_value: str) -> None:
        """Apply ``section.field=value`` with the value parsed as YAML."""
        try:
            section, name = dotted.split(".", 1)
        except ValueError:
            raise ConfigError(f"override {dotted!r} must look like section.field") from None
        target = getattr(self, section, None)
        if target is None or not is_dataclass(target) or name not in {f.name for f in fields(target)}:
            raise ConfigError(f"unknown config field {dotted!r}")
        setattr(self, section, replace(target, **{name: yaml.safe_load(raw_value)}))
