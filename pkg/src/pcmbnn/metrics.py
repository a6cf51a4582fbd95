"""Accuracy, expected calibration error, ensemble prediction and inference baselines."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .crossbar import AdcConfig, CrossbarCore, dequantize, quantize
from .device import NoiseModelConfig
from .mapping import MappingConfig
from .sampler import SamplerSpec, sample
from .snn import LifConfig, forward, rate_decode


def _bin_edges(n_bins=10, edges=None):
    if edges is not None:
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        return edges
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    return np.round(np.linspace(0.0, 1.0, n_bins + 1), 12)


def reliability_bins(confidences, correct, n_bins=10, edges=None):
    """Per-bin ``(lo, hi, mean_conf, accuracy, count)``.

    Bins are left-closed; the last one also includes its upper edge.
    """
    conf = np.asarray(confidences, dtype=float).ravel()
    correct = np.asarray(correct, dtype=float).ravel()
    if conf.size == 0:
        raise ValueError("no predictions")
    if conf.shape != correct.shape:
        raise ValueError("confidences and correctness flags differ in length")
    if np.any((conf < 0) | (conf > 1)):
        raise ValueError("confidences must lie in [0, 1]")
    edges = _bin_edges(n_bins, edges)
    idx = np.clip(np.searchsorted(edges, conf, side="right") - 1, 0, len(edges) - 2)
    bins = []
    for b in range(len(edges) - 1):
        m = idx == b
        n = int(m.sum())
        bins.append(
            {
                "lo": float(edges[b]),
                "hi": float(edges[b + 1]),
                "mean_confidence": float(conf[m].mean()) if n else 0.0,
                "accuracy": float(correct[m].mean()) if n else 0.0,
                "count": n,
            }
        )
    return bins


def ece_from_bins(bins) -> float:
    total = sum(b["count"] for b in bins)
    return float(sum(b["count"] / total * abs(b["accuracy"] - b["mean_confidence"]) for b in bins))


def expected_calibration_error(confidences, correct, n_bins=10, edges=None) -> float:
    """Bin-weighted mean |accuracy - confidence| over equal-width confidence bins."""
    return ece_from_bins(reliability_bins(confidences, correct, n_bins, edges))


@dataclass
class EvalReport:
    accuracy: float
    ece: float
    bins: list
    n_ensemble: int
    mode: str
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "n_ensemble": self.n_ensemble,
            "accuracy": self.accuracy,
            "ece": self.ece,
            "bins": self.bins,
            **self.extra,
        }

    def bins_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["lo", "hi", "mean_confidence", "accuracy", "count"])
        for b in self.bins:
            w.writerow([repr(b["lo"]), repr(b["hi"]), repr(b["mean_confidence"]), repr(b["accuracy"]), b["count"]])
        return buf.getvalue()


def evaluate(proba, y, mode: str, n_ensemble: int, n_bins: int = 10) -> EvalReport:
    """Accuracy and ECE of class-probability predictions (argmax, ties to the lower index)."""
    proba = np.asarray(proba, dtype=float)
    y = np.asarray(y)
    pred = np.argmax(proba, axis=1)
    conf = proba[np.arange(len(proba)), pred]
    correct = pred == y
    bins = reliability_bins(conf, correct, n_bins)
    return EvalReport(float(correct.mean()), ece_from_bins(bins), bins, int(n_ensemble), mode)


# -- weight sources ---------------------------------------------------------
# Each source exposes draw(k) -> list of per-layer (k, n_in, n_out) arrays.


class SamplerSource:
    """Software sampling of binary weights from real parameters."""

    def __init__(self, weights, spec: SamplerSpec, seed=0):
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.spec = spec
        self.rng = np.random.default_rng(seed)

    def draw(self, k):
        return [sample(self.spec, w, self.rng, n=k) for w in self.weights]


class FixedSource:
    """Deterministic weights; every ensemble member is identical."""

    def __init__(self, weights):
        self.weights = [np.asarray(w, dtype=float) for w in weights]

    def draw(self, k):
        return [np.broadcast_to(w, (k,) + w.shape) for w in self.weights]


class CrossbarSource:
    """Binary weights sampled by emulated crossbar cores, one core per layer."""

    def __init__(self, cores):
        self.cores = list(cores)

    @classmethod
    def from_weights(cls, weights, n_noise_cols, seed=0, **core_kwargs):
        seeds = np.random.SeedSequence(seed).spawn(len(weights))
        return cls(
            CrossbarCore.from_weights(w, n_noise_cols, seed=s, **core_kwargs) for w, s in zip(weights, seeds)
        )

    def draw(self, k):
        return [core.sample_ensemble(k) for core in self.cores]


class CommitteeSource:
    """Committee machine: independently programmed crossbars holding ``sign(w)``.

    Each member stores the binarised frequentist weights as analog conductances
    (no noise plane). Device programming and read noise make the members differ;
    a member's forward pass uses its ADC-read analog weights, divided by the
    read of an ideal unit-weight cell so that a noiseless member holds exactly +-1.
    """

    def __init__(self, weights, noise_model=None, mapping=None, adc=None, program_bound=1.0, seed=0):
        self.weights = [np.where(np.asarray(w) >= 0, 1.0, -1.0) for w in weights]
        self.noise_model = noise_model or NoiseModelConfig()
        self.mapping = mapping or MappingConfig()
        self.adc = adc or AdcConfig()
        self.program_bound = program_bound
        self.seed = np.random.SeedSequence(seed)
        self.members: list[list[CrossbarCore]] = []

    def _add_member(self):
        (child,) = self.seed.spawn(1)
        seeds = child.spawn(len(self.weights))
        self.members.append(
            [
                CrossbarCore.from_weights(
                    w, 1, noise_g=0.0, noise_model=self.noise_model, mapping=self.mapping, adc=self.adc,
                    weight_bound=self.program_bound, seed=s,
                )
                for w, s in zip(self.weights, seeds)
            ]
        )

    def draw(self, k):
        while len(self.members) < k:
            self._add_member()
        g_unit = self.mapping.g_per_unit
        unit = dequantize(self.adc, quantize(self.adc, g_unit)) / g_unit
        return [np.stack([m[i].read_weights() for m in self.members[:k]]) / unit for i in range(len(self.weights))]


def ensemble_predict(source, spikes, lif: LifConfig, k: int, gains=None, chunk: int = 2048, return_members=False):
    """Average rate-decoded confidences over ``k`` weight draws.

    ``spikes`` is (T, n_samples, n_in). One draw of weights serves every input
    (and every timestep) for that ensemble member.
    """
    if k < 1:
        raise ValueError("ensemble size must be >= 1")
    layers = source.draw(k)
    spikes = np.asarray(spikes)
    parts = []
    for start in range(0, spikes.shape[1], chunk):
        out = forward(layers, spikes[:, start:start + chunk], lif, gains)  # (T, k, B, C)
        parts.append(rate_decode(out))  # (k, B, C)
    members = np.concatenate(parts, axis=1)
    mean = members.mean(axis=0)
    return (mean, members) if return_members else mean


def committee_machine_eval(weights, spikes, y, lif, k, gains=None, n_bins=10, **committee_kwargs) -> EvalReport:
    src = CommitteeSource(weights, **committee_kwargs)
    proba = ensemble_predict(src, spikes, lif, k, gains)
    return evaluate(proba, y, f"cm-{k}", k, n_bins)


def fxp8_eval(w_r, spikes, y, lif, k, gains=None, n_bins=10, seed=0, sigma_delta=0.8) -> EvalReport:
    src = SamplerSource(w_r, SamplerSpec(kind="fxp8", sigma_delta=sigma_delta), seed)
    proba = ensemble_predict(src, spikes, lif, k, gains)
    return evaluate(proba, y, "fxp8", k, n_bins)
