"""PCM conductance model: programming noise, read noise, program-and-verify.

All conductances are in µS. Noise statistics follow a quadratic programming
noise curve and a linear, slowly growing read noise curve; the coefficients
are calibration inputs rather than measured constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

_RANGE_TOL = 1e-9


@dataclass(frozen=True)
class NoiseModelConfig:
    """Device noise curves.

    ``prog_coeffs`` are ``(c2, c1, c0)`` of ``sigma_p(G) = max(c2 G^2 + c1 G + c0, 0)``.
    Read noise is ``read_rho * G * sqrt(1 + read_time_scale * log(1 + t))``;
    ``read_time_scale = 0`` removes the time dependence.

    The defaults peak mid-range (0.925 µS at 12.5 µS), keep read noise about an
    order of magnitude under programming noise, and let a symmetric noise cell
    reach a 0.8 std budget near 3 µS.
    """

    prog_coeffs: tuple[float, float, float] = (-0.004, 0.1, 0.3)
    read_rho: float = 0.008
    read_time_scale: float = 1.0
    g_min: float = 0.0
    g_max: float = 25.0

    def __post_init__(self):
        if self.g_min < 0:
            raise ValueError("g_min must be >= 0")
        if not self.g_max > self.g_min:
            raise ValueError("g_max must exceed g_min")
        if self.read_rho < 0:
            raise ValueError("read_rho must be >= 0")
        if self.read_time_scale < 0:
            raise ValueError("read_time_scale must be >= 0")
        object.__setattr__(self, "prog_coeffs", tuple(float(c) for c in self.prog_coeffs))

    @classmethod
    def noiseless(cls, **kwargs) -> "NoiseModelConfig":
        return cls(prog_coeffs=(0.0, 0.0, 0.0), read_rho=0.0, **kwargs)


def _check_range(model: NoiseModelConfig, g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if np.any(~np.isfinite(g)) or np.any(g < model.g_min - _RANGE_TOL) or np.any(g > model.g_max + _RANGE_TOL):
        raise DomainError(f"conductance outside [{model.g_min}, {model.g_max}] µS")
    return g


def sigma_p(model: NoiseModelConfig, g):
    """Programming-noise std (µS) at conductance ``g``."""
    g = _check_range(model, g)
    c2, c1, c0 = model.prog_coeffs
    return np.maximum(c2 * g * g + c1 * g + c0, 0.0)


def read_time_factor(model: NoiseModelConfig, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("read index must be >= 0")
    return np.sqrt(1.0 + model.read_time_scale * np.log1p(t))


def sigma_r(model: NoiseModelConfig, g, t=0):
    """Read-noise std (µS) at conductance ``g`` and elapsed-read index ``t``."""
    g = _check_range(model, g)
    return model.read_rho * g * read_time_factor(model, t)


def noise_variance(model: NoiseModelConfig, g, t=0):
    """Programming plus read variance of one device, µS^2."""
    return sigma_p(model, g) ** 2 + sigma_r(model, g, t) ** 2


def program_conductance(
    targets,
    model: NoiseModelConfig,
    rng: np.random.Generator,
    program_bound: float | None = None,
    max_iters: int = 100,
):
    """Program-and-verify a batch of devices.

    Each device draws ``Normal(target, sigma_p(target))`` clipped to the range
    until a draw lands within ``program_bound`` of its target. ``None`` means a
    single unverified draw. Returns ``(programmed, converged)``; devices that
    exhaust ``max_iters`` keep their closest draw and are flagged ``False``.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if program_bound is not None and not program_bound > 0:
        raise ValueError("program_bound must be > 0")
    targets = _check_range(model, targets)
    sigma = sigma_p(model, targets)
    best = np.clip(targets + sigma * rng.standard_normal(targets.shape), model.g_min, model.g_max)
    if program_bound is None:
        return best, np.ones(targets.shape, dtype=bool)

    err = np.abs(best - targets)
    pending = err > program_bound
    for _ in range(max_iters - 1):
        idx = np.flatnonzero(pending)
        if idx.size == 0:
            break
        t = targets.flat[idx]
        draw = np.clip(t + sigma.flat[idx] * rng.standard_normal(idx.size), model.g_min, model.g_max)
        d_err = np.abs(draw - t)
        better = d_err < err.flat[idx]
        best.flat[idx[better]] = draw[better]
        err.flat[idx[better]] = d_err[better]
        pending.flat[idx] = d_err > program_bound
    return best, ~pending


def read_conductance(g, model: NoiseModelConfig, rng: np.random.Generator, read_index=0):
    """One noisy read of every device in ``g``, clipped to the range."""
    g = np.asarray(g, dtype=float)
    noise = sigma_r(model, g, read_index) * rng.standard_normal(g.shape)
    return np.clip(g + noise, model.g_min, model.g_max)


@dataclass
class PcmDevice:
    """A single PCM device with its own random stream."""

    noise_model: NoiseModelConfig = field(default_factory=NoiseModelConfig)
    seed: int | None = 0
    target_g: float | None = None
    programmed_g: float | None = None
    converged: bool = True

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)

    def program(self, target: float, program_bound: float | None = None, max_iters: int = 100) -> "PcmDevice":
        g, ok = program_conductance(np.array([target]), self.noise_model, self._rng, program_bound, max_iters)
        self.target_g = float(target)
        self.programmed_g = float(g[0])
        self.converged = bool(ok[0])
        return self

    def read(self, read_index: int = 0) -> float:
        if self.programmed_g is None:
            raise RuntimeError("device has not been programmed")
        return float(read_conductance(np.array([self.programmed_g]), self.noise_model, self._rng, read_index)[0])
