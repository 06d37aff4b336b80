"""Flat key=value run configuration with profile-aware defaults.

A config file is UTF-8 text, one ``key = value`` per line, ``#`` starting a
comment. Unknown keys are rejected. Command-line flags override file
values; the fully resolved configuration is echoed into every output
directory as ``resolved_config.txt``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .data import ModalitySet, ShapeProfile
from .errors import ConfigError
from .registration import MatchConfig
from .synth import SynthConfig
from .training import TrainConfig

RESOLVED_NAME = "resolved_config.txt"


def _parse_bool(text: str) -> bool:
    if text == "true":
        return True
    if text == "false":
        return False
    raise ValueError(f"expected true or false, got {text!r}")


@dataclass
class RunConfig:
    # run-wide
    profile: str = "paper"
    modalities: str = "three"
    seed: int = 0
    repeats: int = 1
    holdout_recordings: int = 0
    # synthetic generator
    recordings_per_modality: int = 4
    samples_per_recording: int = 60
    uav_fraction: float = 1045 / 3209
    thermal_separation: float = 1.0
    optronic_separation: float = 1.0
    radar_separation: float = 1.0
    noise_sigma: float = 0.5
    frame_rate: float = 2.0
    radar_rate: float = 3.0
    timestamp_jitter: float = 0.05
    thermal_dropout: float = 0.1
    optronic_dropout: float = 0.1
    radar_dropout: float = 0.1
    # registration
    frame_tolerance: float = 0.1
    radar_tolerance: float = 0.5
    label_constrained: bool = True
    one_to_one: bool = True
    # model; conv_filters/dense_units of -1 resolve per profile (512 paper, 16/32 reduced)
    conv_filters: int = -1
    dense_units: int = -1
    kernel_size: int = 3
    dropout_rate: float = 0.5
    # training
    lr0: float = 1e-4
    decay: float = 1e-7
    batch_size: int = 12
    max_epochs: int = 160
    patience: int = 10
    val_fraction: float = 0.2
    restore_best: bool = True

    def resolve(self) -> None:
        if self.profile not in ("paper", "reduced"):
            raise ConfigError(f"profile must be paper or reduced, got {self.profile!r}")
        if self.modalities not in ("one", "two", "three"):
            raise ConfigError(
                f"modalities must be one, two or three, got {self.modalities!r}"
            )
        if self.repeats < 1:
            raise ConfigError(f"repeats must be positive, got {self.repeats}")
        if self.holdout_recordings < 0:
            raise ConfigError("holdout_recordings must be non-negative")
        if self.conv_filters == -1:
            self.conv_filters = 512 if self.profile == "paper" else 16
        if self.dense_units == -1:
            self.dense_units = 512 if self.profile == "paper" else 32

    @property
    def shape_profile(self) -> ShapeProfile:
        return ShapeProfile.named(self.profile)

    @property
    def modality_set(self) -> ModalitySet:
        return ModalitySet.from_word(self.modalities)

    def synth_config(self) -> SynthConfig:
        return SynthConfig(
            recordings_per_modality=self.recordings_per_modality,
            samples_per_recording=self.samples_per_recording,
            uav_fraction=self.uav_fraction,
            thermal_separation=self.thermal_separation,
            optronic_separation=self.optronic_separation,
            radar_separation=self.radar_separation,
            noise_sigma=self.noise_sigma,
            frame_rate=self.frame_rate,
            radar_rate=self.radar_rate,
            timestamp_jitter=self.timestamp_jitter,
            thermal_dropout=self.thermal_dropout,
            optronic_dropout=self.optronic_dropout,
            radar_dropout=self.radar_dropout,
            seed=self.seed,
            shape_profile=self.shape_profile,
        )

    def match_config(self) -> MatchConfig:
        return MatchConfig(
            frame_tolerance=self.frame_tolerance,
            radar_tolerance=self.radar_tolerance,
            label_constrained=self.label_constrained,
            one_to_one=self.one_to_one,
        )

    def train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(
            lr0=self.lr0,
            decay=self.decay,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            val_fraction=self.val_fraction,
            seed=seed,
            restore_best=self.restore_best,
        )

    def resolved_lines(self) -> str:
        out = []
        for f in sorted(fields(self), key=lambda f: f.name):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = f"{value:.9g}"
            else:
                text = str(value)
            out.append(f"{f.name} = {text}\n")
        return "".join(out)

    def write_resolved(self, out_dir) -> None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / RESOLVED_NAME).write_text(self.resolved_lines(), encoding="utf-8")


_PARSERS = {bool: _parse_bool, int: int, float: float, str: str}


def _field_types() -> dict[str, type]:
    defaults = RunConfig()
    return {f.name: type(getattr(defaults, f.name)) for f in fields(RunConfig)}


def parse_config_file(path) -> dict[str, str]:
    """Raw key -> text mapping from a ``key = value`` file."""
    raw = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def load_run_config(config_path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the config file, then CLI overrides; then resolve."""
    cfg = RunConfig()
    types = _field_types()

    def apply(key: str, text_or_value, where: str) -> None:
        if key not in types:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if isinstance(text_or_value, str):
            try:
                value = _PARSERS[types[key]](text_or_value)
            except ValueError as exc:
                raise ConfigError(f"{where}: bad value for {key}: {exc}") from None
        else:
            value = text_or_value
        setattr(cfg, key, value)

    if config_path is not None:
        for key, text in parse_config_file(config_path).items():
            apply(key, text, str(config_path))
    for key, value in (overrides or {}).items():
        if value is not None:
            apply(key, value, "command line")
    cfg.resolve()
    return cfg
