"""Software samplers for binary weights w in {-1, +1} given real parameters w_r.

Each weight is +1 with probability ``sigmoid(2 w_r)``. The logistic sampler
realises this exactly by thresholding ``w_r + delta`` with
``delta = 0.5 log(eps / (1 - eps))``; the relaxed sampler replaces the
threshold with ``tanh(. / tau)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .exceptions import DomainError

KINDS = ("logistic", "gaussian", "gumbel-softmax", "fxp8")

# signed 8-bit Q2.5: 1 sign, 2 integer, 5 fraction bits
FXP8_FRAC_BITS = 5
FXP8_MAX_CODE = 127


def bernoulli_params(w_r):
    """Probability that each weight is +1."""
    return expit(2.0 * np.asarray(w_r, dtype=float))


def logits_from_p(p):
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError("probabilities must lie strictly inside (0, 1)")
    return 0.5 * logit(p)


def logistic_noise(shape, rng: np.random.Generator):
    """``0.5 * log(eps / (1 - eps))`` with ``eps ~ U(0, 1)``."""
    eps = rng.random(shape)
    # eps == 0 has probability 2**-53; nudge it to keep the log finite
    eps = np.where(eps == 0.0, np.finfo(float).tiny, eps)
    return 0.5 * (np.log(eps) - np.log1p(-eps))


def quantize_fxp8(x):
    """Round to Q2.5 (step 1/32, range +-127/32), half away from zero. Returns codes."""
    x = np.asarray(x, dtype=float) * (1 << FXP8_FRAC_BITS)
    code = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return np.clip(code, -FXP8_MAX_CODE, FXP8_MAX_CODE).astype(np.int16)


def _sign(x):
    return np.where(x >= 0, 1, -1).astype(np.int8)


@dataclass(frozen=True)
class SamplerSpec:
    """Which sampler to use.

    ``fxp8_noise`` picks the noise distribution of the fixed-point sampler
    (``"gaussian"`` with ``sigma_delta`` or ``"logistic"``).
    """

    kind: str = "logistic"
    tau: float = 1.0
    sigma_delta: float = 0.8
    fxp8_noise: str = "gaussian"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sampler kind {self.kind!r}")
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if not self.sigma_delta > 0:
            raise ValueError("sigma_delta must be > 0")
        if self.fxp8_noise not in ("gaussian", "logistic"):
            raise ValueError("fxp8_noise must be 'gaussian' or 'logistic'")


def sample(spec: SamplerSpec, w_r, rng: np.random.Generator, n: int | None = None):
    """Draw weights for ``w_r``; with ``n`` a leading axis of n draws is added.

    Discrete kinds return int8 arrays of +-1, the relaxed kind floats in (-1, 1).
    """
    w_r = np.asarray(w_r, dtype=float)
    if not np.all(np.isfinite(w_r)):
        raise ValueError("weights must be finite")
    shape = w_r.shape if n is None else (n,) + w_r.shape

    if spec.kind == "logistic":
        return _sign(w_r + logistic_noise(shape, rng))
    if spec.kind == "gaussian":
        return _sign(w_r + spec.sigma_delta * rng.standard_normal(shape))
    if spec.kind == "gumbel-softmax":
        return np.tanh((w_r + logistic_noise(shape, rng)) / spec.tau)

    # fxp8: weight and noise both in Q2.5, integer comparison
    if spec.fxp8_noise == "gaussian":
        delta = spec.sigma_delta * rng.standard_normal(shape)
    else:
        delta = logistic_noise(shape, rng)
    total = quantize_fxp8(w_r).astype(np.int32) + quantize_fxp8(delta)
    # exact zero sums are common on the 1/32 grid; a fair coin keeps the sampler unbiased
    coin = rng.random(shape) < 0.5
    return np.where((total > 0) | ((total == 0) & coin), 1, -1).astype(np.int8)


def gaussian_logistic_gap(sigma_delta: float = 0.8, w_max: float = 2.0, n: int = 4001) -> float:
    """sup over |w| <= w_max of |Phi(w / sigma) - sigmoid(2 w)|."""
    from scipy.stats import norm

    w = np.linspace(-w_max, w_max, n)
    return float(np.max(np.abs(norm.cdf(w / sigma_delta) - expit(2 * w))))
