"""Emulator of a PCM-crossbar sampling core for Bayesian binary spiking networks."""

__version__ = "0.1.0"

from .area import AreaModelConfig, estimate as estimate_area  # noqa: E402
from .crossbar import AdcConfig, CrossbarCore  # noqa: E402
from .device import NoiseModelConfig, PcmDevice  # noqa: E402
from .estimator import BayesianSNNClassifier  # noqa: E402
from .exceptions import (  # noqa: E402
    ConfigError,
    DomainError,
    InfeasibleError,
    StaleRegisterError,
    TrainingDivergedError,
)
from .mapping import MappingConfig  # noqa: E402
from .metrics import expected_calibration_error  # noqa: E402
from .sampler import SamplerSpec  # noqa: E402
from .snn import LifConfig  # noqa: E402

__all__ = [
    "AdcConfig",
    "AreaModelConfig",
    "BayesianSNNClassifier",
    "ConfigError",
    "CrossbarCore",
    "DomainError",
    "InfeasibleError",
    "LifConfig",
    "MappingConfig",
    "NoiseModelConfig",
    "PcmDevice",
    "SamplerSpec",
    "StaleRegisterError",
    "TrainingDivergedError",
    "estimate_area",
    "expected_calibration_error",
]
