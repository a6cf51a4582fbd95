"""Variational training of binary-synapse spiking networks.

The Bayesian trainer learns real parameters ``w_r`` of independent Bernoulli
weights by backpropagating through relaxed samples
``tanh((w_r + delta) / tau)`` with logistic ``delta``; a KL term pulls each
weight toward p = 0.5. The frequentist trainer uses ``sign(w_r)`` with a
straight-through gradient. Spikes use a sigmoid-derivative surrogate gradient.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import torch

from .exceptions import TrainingDivergedError
from .snn import LifConfig, default_gains

RATE_EPS = 0.01


@dataclass(frozen=True)
class TrainConfig:
    tau: float = 1.0
    lr: float = 0.05
    epochs: int = 40
    batch_size: int = 64
    kl_weight: float = 0.01  # 1.0 is the plain ELBO; larger values temper toward the prior
    surrogate_slope: float = 5.0
    init_scale: float = 1.5
    straight_through: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if self.kl_weight < 0:
            raise ValueError("kl_weight must be >= 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")


@dataclass
class TrainResult:
    weights: list  # per-layer (n_in, n_out) float arrays
    history: list  # per-epoch dicts
    frequentist: bool = False


class _SurrogateSpike(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, slope):
        ctx.save_for_backward(x)
        ctx.slope = slope
        return (x >= 0).to(x.dtype)

    @staticmethod
    def backward(ctx, grad):
        (x,) = ctx.saved_tensors
        s = torch.sigmoid(ctx.slope * x)
        return grad * ctx.slope * s * (1 - s), None


def spike_fn(x, slope, smooth=False):
    if smooth:
        return torch.sigmoid(slope * x)
    return _SurrogateSpike.apply(x, slope)


def run_network(weights, spikes, lif: LifConfig, gains, slope, smooth=False):
    """Output firing rates (B, C) for torch weights and a (T, B, N) spike tensor."""
    u = [None] * len(weights)
    syn = [None] * len(weights)
    count = 0
    for t in range(spikes.shape[0]):
        s = spikes[t]
        for i, w in enumerate(weights):
            cur = gains[i] * (s @ w)
            if lif.syn_decay:
                syn[i] = cur if syn[i] is None else lif.syn_decay * syn[i] + cur
                cur = syn[i]
            v = cur if u[i] is None else lif.beta * u[i] + cur
            s = spike_fn(v - lif.theta, slope, smooth)
            u[i] = v * (1 - s) if lif.reset == "zero" else v - lif.theta * s
        count = count + s
    return count / spikes.shape[0]


def rate_loss(rates, y):
    """Cross-entropy of rate-normalised confidences (smoothed to avoid log 0)."""
    p = (rates + RATE_EPS) / (rates + RATE_EPS).sum(dim=1, keepdim=True)
    return -torch.log(p.gather(1, y[:, None])).mean()


def kl_to_uniform(w_r):
    """KL(Bernoulli(sigmoid(2 w)) || Bernoulli(0.5)), summed."""
    logp = torch.nn.functional.logsigmoid(2 * w_r)
    logq = torch.nn.functional.logsigmoid(-2 * w_r)
    p = torch.exp(logp)
    return (p * logp + (1 - p) * logq + math.log(2.0)).sum()


def relaxed_weights(w_r, tau, generator, straight_through=False):
    """Relaxed sample ``tanh((w_r + delta) / tau)``.

    With ``straight_through`` the forward value is the hard sign of
    ``w_r + delta`` while the gradient is that of the relaxation.
    """
    eps = torch.rand(w_r.shape, generator=generator, dtype=w_r.dtype).clamp_(1e-12, 1 - 1e-12)
    delta = 0.5 * (torch.log(eps) - torch.log1p(-eps))
    soft = torch.tanh((w_r + delta) / tau)
    if not straight_through:
        return soft
    hard = torch.where(w_r + delta >= 0, 1.0, -1.0).to(w_r.dtype)
    return soft + (hard - soft).detach()


def straight_through_sign(w_r):
    clipped = w_r.clamp(-1, 1)
    return clipped + (torch.where(w_r >= 0, 1.0, -1.0).to(w_r.dtype) - clipped).detach()


def _init(layer_sizes, cfg, generator, dtype):
    return [
        (cfg.init_scale * (2 * torch.rand(a, b, generator=generator, dtype=dtype) - 1)).requires_grad_()
        for a, b in zip(layer_sizes[:-1], layer_sizes[1:])
    ]


def _fit(spikes, y, layer_sizes, lif, cfg, gains, frequentist, log):
    spikes = np.asarray(spikes)
    if spikes.ndim != 3 or spikes.shape[2] != layer_sizes[0]:
        raise ValueError(f"spikes must be (T, n, {layer_sizes[0]})")
    gen = torch.Generator().manual_seed(int(cfg.seed))
    dtype = torch.float32
    X = torch.as_tensor(spikes, dtype=dtype)
    Y = torch.as_tensor(np.asarray(y), dtype=torch.long)
    n = X.shape[1]
    gains = list(default_gains(layer_sizes, lif.theta) if gains is None else gains)
    params = _init(layer_sizes, cfg, gen, dtype)
    opt = torch.optim.Adam(params, lr=cfg.lr)
    history = []
    for epoch in range(cfg.epochs):
        perm = torch.randperm(n, generator=gen)
        tot_loss, tot_correct = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            if frequentist:
                ws = [straight_through_sign(p) for p in params]
            else:
                ws = [relaxed_weights(p, cfg.tau, gen, cfg.straight_through) for p in params]
            rates = run_network(ws, X[:, idx], lif, gains, cfg.surrogate_slope)
            loss = rate_loss(rates, Y[idx])
            if not frequentist and cfg.kl_weight:
                loss = loss + cfg.kl_weight * sum(kl_to_uniform(p) for p in params) / n
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}", history)
            opt.zero_grad()
            loss.backward()
            opt.step()
            tot_loss += loss.item() * len(idx)
            tot_correct += int((rates.argmax(1) == Y[idx]).sum())
        rec = {
            "epoch": epoch,
            "loss": tot_loss / n,
            "train_accuracy": tot_correct / n,
            "weight_norm": float(torch.sqrt(sum((p.detach() ** 2).sum() for p in params))),
        }
        history.append(rec)
        if log:
            log(rec)
    weights = [p.detach().numpy().astype(np.float64) for p in params]
    return TrainResult(weights, history, frequentist)


def train(spikes, y, layer_sizes, lif: LifConfig, cfg: TrainConfig, gains=None, log=None) -> TrainResult:
    """Bayesian (variational) training; returns the Bernoulli parameters ``w_r``."""
    return _fit(spikes, y, list(layer_sizes), lif, cfg, gains, False, log)


def train_frequentist(spikes, y, layer_sizes, lif: LifConfig, cfg: TrainConfig, gains=None, log=None) -> TrainResult:
    """Point-estimate training of binary weights via straight-through sign."""
    return _fit(spikes, y, list(layer_sizes), lif, cfg, gains, True, log)


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)
