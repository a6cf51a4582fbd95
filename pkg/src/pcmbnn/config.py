"""Experiment configuration: a nested YAML document mapped onto frozen dataclasses.

Every section is optional; missing keys take the defaults below. Unknown keys
and invalid values raise :class:`ConfigError` naming the offending field path
(``train.lr``, ``device.prog_coeffs`` ...).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import typing
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .area import AreaModelConfig
from .crossbar import AdcConfig
from .device import NoiseModelConfig
from .exceptions import ConfigError
from .mapping import MappingConfig
from .sampler import SamplerSpec
from .snn import LifConfig
from .training import TrainConfig

MODES = ("hardware", "fp32", "fxp8", "cm")


@dataclass(frozen=True)
class DatasetConfig:
    name: str = "wbcd"
    path: str | None = None  # UCI-layout WDBC file; the bundled copy is used when unset
    test_fraction: float = 0.2
    # two-moons only
    n_samples: int = 400
    noise_std: float = 0.1
    heldout_samples: int = 400
    heldout_noise_std: float = 0.3
    grid_bounds: tuple[float, float, float, float] = (-1.5, 2.5, -1.25, 1.75)
    grid_resolution: int = 100

    def __post_init__(self):
        if self.name not in ("wbcd", "two-moons"):
            raise ValueError("name must be 'wbcd' or 'two-moons'")
        if self.path is not None and not Path(self.path).is_file():
            raise ValueError(f"path not found: {self.path}")
        if not 0 < self.test_fraction < 1:
            raise ValueError("test_fraction must lie in (0, 1)")
        if min(self.n_samples, self.heldout_samples) < 2 or self.grid_resolution < 2:
            raise ValueError("sample counts and grid_resolution must be >= 2")
        if min(self.noise_std, self.heldout_noise_std) < 0:
            raise ValueError("noise levels must be >= 0")
        if len(self.grid_bounds) != 4:
            raise ValueError("grid_bounds must be (x0, x1, y0, y1)")


@dataclass(frozen=True)
class EncoderConfig:
    scheme: str = "rate"
    neurons_per_feature: int = 10
    target_rate: float = 0.04
    width: float | None = None

    def __post_init__(self):
        if self.scheme not in ("rate", "population"):
            raise ValueError("scheme must be 'rate' or 'population'")
        if not 0 < self.target_rate <= 1:
            raise ValueError("target_rate must lie in (0, 1]")


@dataclass(frozen=True)
class NetworkConfig:
    hidden: tuple[int, ...] = (64, 64)
    gain_scale: float = 1.5

    def __post_init__(self):
        if any(h < 1 for h in self.hidden):
            raise ValueError("hidden sizes must be >= 1")
        if not self.gain_scale > 0:
            raise ValueError("gain_scale must be > 0")


@dataclass(frozen=True)
class CrossbarConfig:
    noise_cols: int = 16
    sample_mode: str = "reprogram"
    weight_bound: float | None = 0.1
    noise_bound: float | None = None
    max_iters: int = 1000
    pwm_before_adc: bool = True

    def __post_init__(self):
        if self.noise_cols < 1:
            raise ValueError("noise_cols must be >= 1")
        if self.sample_mode not in ("reprogram", "static"):
            raise ValueError("sample_mode must be 'reprogram' or 'static'")

    def core_kwargs(self) -> dict:
        d = asdict(self)
        d.pop("noise_cols")
        return d


@dataclass(frozen=True)
class InferenceConfig:
    mode: str = "hardware"
    n_ensemble: int = 32
    n_bins: int = 10
    cm_program_bound: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.n_ensemble < 1 or self.n_bins < 1:
            raise ValueError("n_ensemble and n_bins must be >= 1")
        if not self.cm_program_bound > 0:
            raise ValueError("cm_program_bound must be > 0")


@dataclass(frozen=True)
class SweepConfig:
    noise_cols: tuple[int, ...] = (1, 2, 4, 8, 16)
    ensemble_sizes: tuple[int, ...] = (1, 2, 4, 8, 16, 32, 64)
    map_ensemble_sizes: tuple[int, ...] = (2, 10)
    repeats: int = 1  # independent ensembles per (L, K) cell, metrics averaged
    eval_encodings: int = 1  # spike-train draws of the evaluation split, pooled

    def __post_init__(self):
        for name in ("noise_cols", "ensemble_sizes", "map_ensemble_sizes"):
            values = getattr(self, name)
            if not values or any(v < 1 for v in values):
                raise ValueError(f"{name} must be a non-empty list of positive integers")
        if self.repeats < 1 or self.eval_encodings < 1:
            raise ValueError("repeats and eval_encodings must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    out_dir: str = "results"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    network: NetworkConfig = field(default_factory=NetworkConfig)
    lif: LifConfig = field(default_factory=LifConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    device: NoiseModelConfig = field(default_factory=NoiseModelConfig)
    mapping: MappingConfig = field(default_factory=MappingConfig)
    adc: AdcConfig = field(default_factory=AdcConfig)
    crossbar: CrossbarConfig = field(default_factory=CrossbarConfig)
    sampler: SamplerSpec = field(default_factory=SamplerSpec)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    area: AreaModelConfig = field(default_factory=AreaModelConfig)

    def __post_init__(self):
        if self.seed < 0 or any(s < 0 for s in self.seeds):
            raise ValueError("seeds must be non-negative integers")
        if not self.seeds:
            raise ValueError("seeds must not be empty")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return _plain(asdict(self))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def _coerce(value, hint, path):
    """Check a scalar or sequence against a (simple) type hint."""
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin in (typing.Union, getattr(__import__("types"), "UnionType", None)):
        if value is None and type(None) in args:
            return None
        (hint,) = [a for a in args if a is not type(None)]
        return _coerce(value, hint, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, "expected a list")
        inner = args[0]
        return tuple(_coerce(v, inner, f"{path}[{i}]") for i, v in enumerate(value))
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, "expected true or false")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "expected an integer")
        return value
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "expected a number")
        return float(value)
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(path, "expected a string")
        return value
    return value


def _build(cls, data, path):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", "expected a mapping")
    hints = typing.get_type_hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        sub = f"{path}.{key}" if path else str(key)
        if key not in fields:
            raise ConfigError(sub, "unknown key")
        hint = hints[key]
        if dataclasses.is_dataclass(hint):
            kwargs[key] = _build(hint, value, sub)
        else:
            kwargs[key] = _coerce(value, hint, sub)
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        msg = str(exc)
        # point at the field when the validator names it
        named = [k for k in fields if msg.startswith(f"{k} ")]
        where = f"{path}.{named[0]}" if path and named else (named[0] if named else path or "<root>")
        raise ConfigError(where, msg) from None


def config_from_dict(data: dict) -> ExperimentConfig:
    return _build(ExperimentConfig, data, "")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("--config", f"file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("--config", f"not valid YAML: {exc}") from None
    return config_from_dict(data or {})


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True)


def config_hash(cfg: ExperimentConfig) -> str:
    """sha256 over the canonical JSON form of the fully resolved config.

    ``out_dir`` is left out: where results are written does not change them.
    """
    d = cfg.to_dict()
    d.pop("out_dir")
    blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def version_string() -> str:
    return f"pcmbnn-v{__version__}"


def provenance(cfg: ExperimentConfig, seed: int | None = None) -> dict:
    return {
        "config_hash": config_hash(cfg),
        "seed": int(cfg.seed if seed is None else seed),
        "version": version_string(),
    }
