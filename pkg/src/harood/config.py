"""Run configuration: radar parameters, dataset recipe, model and training knobs.

Everything is a plain dataclass so a full run can be captured in one JSON file
and written back out as a resolved snapshot next to the run outputs.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .labels import ALL_KINDS, ID_KINDS, OE_OOD_KINDS, OOD_KINDS

C_LIGHT = 299_792_458.0  # m/s


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class RadarConfig:
    """FMCW front-end parameters for one frame of raw IF data.

    The fast-time sampling is assumed to span the full chirp-to-chirp
    interval, so the ADC sample period is chirp_period / n_samples.
    """

    n_rx: int = 3
    n_chirps: int = 64
    n_samples: int = 128
    carrier_freq: float = 60e9
    bandwidth: float = 1e9
    chirp_period: float = 391.55e-6
    frame_period: float = 50e-3
    noise_std: float = 0.05

    def __post_init__(self):
        if self.n_rx < 1:
            raise ValueError("n_rx must be >= 1")
        if not _is_pow2(self.n_chirps) or not _is_pow2(self.n_samples):
            raise ValueError("n_chirps and n_samples must be powers of two")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.n_chirps * self.chirp_period > self.frame_period * (1 + 1e-9):
            raise ValueError("n_chirps * chirp_period must fit within frame_period")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.carrier_freq

    @property
    def sample_period(self) -> float:
        return self.chirp_period / self.n_samples

    @property
    def range_resolution(self) -> float:
        return C_LIGHT / (2.0 * self.bandwidth)

    @property
    def max_range(self) -> float:
        # Beat frequency must stay below the fast-time Nyquist rate.
        return C_LIGHT * self.n_samples / (4.0 * self.bandwidth)

    @property
    def velocity_resolution(self) -> float:
        return self.wavelength / (2.0 * self.n_chirps * self.chirp_period)

    @property
    def max_velocity(self) -> float:
        # Unambiguous Doppler interval is +-1/(2 * chirp_period).
        return self.wavelength / (4.0 * self.chirp_period)

    @property
    def n_range_bins(self) -> int:
        return self.n_samples // 2

    @property
    def rdi_shape(self) -> tuple[int, int]:
        return (self.n_chirps, self.n_range_bins)


@dataclass(frozen=True)
class DatasetRecipe:
    """Per-split sample counts by kind plus the chunking of recordings.

    Counts are numbers of emitted samples (one macro+micro RDI pair each),
    not raw frames; each recording is simulated with enough warm-up frames
    to fill the preprocessing history.
    """

    train: dict[str, int] = field(
        default_factory=lambda: {k: 900 for k in ID_KINDS}
    )
    oe: dict[str, int] = field(
        default_factory=lambda: {k: 300 for k in OE_OOD_KINDS}
    )
    calibration: dict[str, int] = field(
        default_factory=lambda: {k: 350 for k in ID_KINDS}
    )
    test: dict[str, int] = field(
        default_factory=lambda: dict(
            {k: 200 for k in ID_KINDS}, **{k: 120 for k in OOD_KINDS}
        )
    )
    samples_per_recording: int = 60

    def __post_init__(self):
        for split_name, counts in self.splits().items():
            for kind, count in counts.items():
                if kind not in ALL_KINDS:
                    raise ValueError(f"unknown kind {kind!r} in split {split_name!r}")
                if count < 0:
                    raise ValueError(f"negative count for {kind!r} in {split_name!r}")
        if any(kind not in ID_KINDS for kind in self.train):
            raise ValueError("train split must contain only ID kinds")
        if any(kind not in OE_OOD_KINDS for kind in self.oe if kind not in ID_KINDS):
            raise ValueError("oe split OOD kinds are limited to fan and toy_car")
        if sum(self.train.values()) == 0:
            raise ValueError("recipe must request at least one ID training sample")
        if self.samples_per_recording < 1:
            raise ValueError("samples_per_recording must be >= 1")

    def splits(self) -> dict[str, dict[str, int]]:
        return {
            "train": dict(self.train),
            "oe": dict(self.oe),
            "calibration": dict(self.calibration),
            "test": dict(self.test),
        }


@dataclass(frozen=True)
class ModelConfig:
    """Stage-1/stage-2 architecture sizes."""

    encoder_channels: tuple[int, ...] = (8, 16, 32)
    embed_dim: int = 64
    head_channels: tuple[int, ...] = (16, 32)
    classifier_hidden: int = 32

    def __post_init__(self):
        if len(self.encoder_channels) < 1:
            raise ValueError("encoder needs at least one stage")
        if self.embed_dim < 1 or self.classifier_hidden < 1:
            raise ValueError("embed_dim and classifier_hidden must be positive")


@dataclass(frozen=True)
class TrainConfig:
    """Two-stage optimization schedule."""

    stage1_epochs: int = 6
    contrastive_epochs: int = 3
    batch_size: int = 32
    stage1_lr: float = 1e-3
    stage2_epochs: int = 20
    stage2_lr: float = 1e-3
    triplet_margin: float = 2.0
    contrastive_margin: float = 2.0

    def __post_init__(self):
        if not (0 <= self.contrastive_epochs <= self.stage1_epochs):
            raise ValueError("contrastive_epochs must lie within stage1_epochs")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class EvalConfig:
    """OOD scoring and evaluation settings."""

    macro_weight: float = 1.0
    micro_weight: float = 0.001
    target_tpr: float = 0.95
    baselines: tuple[str, ...] = ("msp", "maxlogit", "energy", "odin")
    odin_temperature: float = 1000.0
    odin_epsilon: float = 0.002
    plots: bool = False

    KNOWN_BASELINES = ("msp", "maxlogit", "energy", "odin")

    def __post_init__(self):
        for name in self.baselines:
            if name not in self.KNOWN_BASELINES:
                raise ValueError(
                    f"unknown baseline {name!r}; expected subset of {self.KNOWN_BASELINES}"
                )
        if not (0 < self.target_tpr <= 1):
            raise ValueError("target_tpr must be in (0, 1]")


@dataclass(frozen=True)
class RunConfig:
    """Top-level configuration for the simulate/train/evaluate pipeline."""

    radar: RadarConfig = field(default_factory=RadarConfig)
    recipe: DatasetRecipe = field(default_factory=DatasetRecipe)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 42
    accum_window: int = 10
    accum_decay: float = 0.9
    out_dir: str = "harood_out"

    def to_dict(self) -> dict:
        return _asdict_clean(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        return _from_dict(cls, data, path="")

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValueError(f"config {path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ValueError(f"config {path}: top level must be an object")
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _asdict_clean(obj):
    if dataclasses.is_dataclass(obj):
        return {
            f.name: _asdict_clean(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
        }
    if isinstance(obj, tuple):
        return [_asdict_clean(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _asdict_clean(v) for k, v in obj.items()}
    return obj


def _from_dict(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ValueError(f"config section {path or '<root>'} must be an object")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ValueError(
            f"unknown config key(s) {sorted(unknown)} in section {path or '<root>'}"
        )
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        if name in _SECTION_TYPES and cls is RunConfig:
            kwargs[name] = _from_dict(_SECTION_TYPES[name], value, sub)
        elif isinstance(value, list):
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


_SECTION_TYPES = {
    "radar": RadarConfig,
    "recipe": DatasetRecipe,
    "model": ModelConfig,
    "train": TrainConfig,
    "eval": EvalConfig,
}


def worker_count() -> int:
    """Parallelism cap, controlled by the HAROOD_WORKERS environment variable."""
    env = os.environ.get("HAROOD_WORKERS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ValueError(f"HAROOD_WORKERS must be an integer, got {env!r}") from None
        if n < 1:
            raise ValueError("HAROOD_WORKERS must be >= 1")
        return n
    return os.cpu_count() or 1
