"""Discrete-time leaky integrate-and-fire network with fully connected layers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LifConfig:
    """LIF dynamics.

    ``u' = beta * u + I``; a neuron spikes when ``u' >= theta`` and is then
    reset to zero (``reset="zero"``) or reduced by ``theta``
    (``reset="subtract"``). ``syn_decay`` > 0 adds a one-pole synaptic trace
    in front of the membrane.
    """

    beta: float = 0.9
    theta: float = 1.0
    reset: str = "zero"
    t_steps: int = 100
    syn_decay: float = 0.0

    def __post_init__(self):
        if not 0 <= self.beta < 1:
            raise ValueError("beta must lie in [0, 1)")
        if not self.theta > 0:
            raise ValueError("theta must be > 0")
        if self.reset not in ("zero", "subtract"):
            raise ValueError("reset must be 'zero' or 'subtract'")
        if self.t_steps < 1:
            raise ValueError("t_steps must be >= 1")
        if not 0 <= self.syn_decay < 1:
            raise ValueError("syn_decay must lie in [0, 1)")


def lif_step(u, in_current, cfg: LifConfig):
    """Advance membrane potentials one step; returns ``(u_next, spikes)``."""
    in_current = np.asarray(in_current, dtype=float)
    if not np.all(np.isfinite(in_current)):
        raise FloatingPointError("non-finite input current")
    u = cfg.beta * np.asarray(u, dtype=float) + in_current
    spikes = (u >= cfg.theta).astype(np.float64)
    if cfg.reset == "zero":
        u = u * (1.0 - spikes)
    else:
        u = u - cfg.theta * spikes
    return u, spikes


def default_gains(layer_sizes, theta: float = 1.0, gain_scale: float = 1.0):
    """``gain_scale * theta / sqrt(fan_in)`` for each weight layer."""
    return [gain_scale * theta / np.sqrt(n) for n in layer_sizes[:-1]]


def check_topology(weights, layer_sizes=None):
    shapes = [np.shape(w)[-2:] for w in weights]
    for (_, m), (n, _) in zip(shapes[:-1], shapes[1:]):
        if m != n:
            raise ValueError(f"inconsistent layer shapes {shapes}")
    if layer_sizes is not None:
        expected = [(a, b) for a, b in zip(layer_sizes[:-1], layer_sizes[1:])]
        if [tuple(s) for s in shapes] != expected:
            raise ValueError(f"weights {shapes} do not match layer sizes {list(layer_sizes)}")
    return [shapes[0][0]] + [s[1] for s in shapes]


def forward(weights, spikes, cfg: LifConfig, gains=None, return_hidden: bool = False):
    """Run the network on an input spike train.

    ``weights`` is a list of (n_in, n_out) arrays, optionally with a leading
    ensemble axis (K, n_in, n_out). ``spikes`` has shape (T, ..., n_in). The
    output spike train has shape (T, [K,] ..., n_out). Within a timestep the
    layers update in order, so a spike can traverse the whole network at once.
    """
    spikes = np.asarray(spikes, dtype=np.float64)
    sizes = check_topology(weights)
    if spikes.shape[-1] != sizes[0]:
        raise ValueError(f"input width {spikes.shape[-1]} does not match layer size {sizes[0]}")
    if gains is None:
        gains = default_gains(sizes, cfg.theta)
    scaled = [g * np.asarray(w, dtype=np.float64) for g, w in zip(gains, weights)]
    batched = any(w.ndim == 3 for w in scaled)

    T = spikes.shape[0]
    batch_shape = spikes.shape[1:-1]
    flat = spikes.reshape(T, -1, sizes[0])
    u = [None] * len(scaled)
    syn = [None] * len(scaled)
    keep = range(len(scaled)) if return_hidden else [len(scaled) - 1]
    record = {i: [] for i in keep}
    for t in range(T):
        s = flat[t][None] if batched else flat[t]
        for i, w in enumerate(scaled):
            current = s @ w  # broadcasts over the ensemble axis
            if cfg.syn_decay:
                syn[i] = current if syn[i] is None else cfg.syn_decay * syn[i] + current
                current = syn[i]
            if u[i] is None:
                u[i] = np.zeros(current.shape)
            u[i], s = lif_step(u[i], current, cfg)
            if i in record:
                record[i].append(s.astype(np.uint8))
    out = []
    for i in keep:
        a = np.stack(record[i])
        out.append(a.reshape(a.shape[:-2] + batch_shape + a.shape[-1:]))
    return out if return_hidden else out[-1]


def rate_decode(out_spikes):
    """Per-class confidence from an output spike train (T, ..., C).

    Rates are normalised to sum to one; all-silent outputs give a uniform vector.
    """
    out_spikes = np.asarray(out_spikes, dtype=float)
    rates = out_spikes.mean(axis=0)
    total = rates.sum(axis=-1, keepdims=True)
    n_cls = rates.shape[-1]
    with np.errstate(invalid="ignore", divide="ignore"):
        conf = np.where(total > 0, rates / np.where(total > 0, total, 1.0), 1.0 / n_cls)
    return conf
