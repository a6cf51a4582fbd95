"""Datasets (two moons, Wisconsin diagnostic breast cancer) and spike encoding."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.datasets import make_moons
from sklearn.model_selection import train_test_split
from sklearn.utils.validation import check_array, check_is_fitted

N_WBCD_FEATURES = 30
WBCD_LABELS = {"M": 1, "B": 0}  # malignant is the positive class


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class TwoMoonsSpec:
    n_samples: int = 400
    noise_std: float = 0.1
    seed: int = 0
    grid_bounds: tuple[float, float, float, float] = (-1.5, 2.5, -1.25, 1.75)  # x0, x1, y0, y1
    grid_resolution: int = 100

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.grid_resolution < 2:
            raise ValueError("grid_resolution must be >= 2")


def gen_two_moons(spec: TwoMoonsSpec):
    """Two interleaved unit half-circles with Gaussian jitter; returns ``(X, y)``."""
    return make_moons(n_samples=spec.n_samples, noise=spec.noise_std or None, random_state=spec.seed)


def moon_grid(spec: TwoMoonsSpec):
    """Row-major evaluation lattice, shape (resolution**2, 2)."""
    x0, x1, y0, y1 = spec.grid_bounds
    xs = np.linspace(x0, x1, spec.grid_resolution)
    ys = np.linspace(y0, y1, spec.grid_resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    return np.column_stack([gx.ravel(), gy.ravel()])


def distance_to_moons(X):
    """Euclidean distance from each point to the nearer of the two noiseless arcs."""
    X = np.asarray(X, dtype=float)

    def arc(center, upper):
        d = X - center
        r = np.hypot(d[:, 0], d[:, 1])
        on_side = d[:, 1] >= 0 if upper else d[:, 1] <= 0
        to_circle = np.abs(r - 1.0)
        ends = center + np.array([[1.0, 0.0], [-1.0, 0.0]])
        to_ends = np.min(np.linalg.norm(X[:, None, :] - ends[None], axis=-1), axis=1)
        return np.where(on_side, to_circle, to_ends)

    return np.minimum(arc(np.array([0.0, 0.0]), True), arc(np.array([1.0, 0.5]), False))


@dataclass(frozen=True)
class WbcdRecord:
    id: str
    label: int  # 1 malignant, 0 benign
    features: tuple

    def __post_init__(self):
        if len(self.features) != N_WBCD_FEATURES:
            raise DataFormatError(f"expected {N_WBCD_FEATURES} features, got {len(self.features)}")
        if self.label not in (0, 1):
            raise DataFormatError(f"bad label {self.label!r}")


def load_wbcd(path) -> list[WbcdRecord]:
    """Parse a WDBC file in the UCI layout: ``id, M|B, 30 features`` per line, no header."""
    records = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2 + N_WBCD_FEATURES:
                raise DataFormatError(f"line {lineno}: expected {2 + N_WBCD_FEATURES} columns, got {len(row)}")
            diag = row[1].strip().upper()
            if diag not in WBCD_LABELS:
                raise DataFormatError(f"line {lineno}: diagnosis must be M or B, got {row[1]!r}")
            try:
                feats = tuple(float(c) for c in row[2:])
            except ValueError as exc:
                raise DataFormatError(f"line {lineno}: {exc}") from None
            records.append(WbcdRecord(row[0].strip(), WBCD_LABELS[diag], feats))
    if not records:
        raise DataFormatError(f"{path}: no records")
    return records


def records_to_arrays(records):
    X = np.array([r.features for r in records], dtype=float)
    y = np.array([r.label for r in records], dtype=int)
    return X, y


def bundled_wbcd() -> list[WbcdRecord]:
    """The diagnostic breast cancer data shipped with scikit-learn (same 569 samples)."""
    from sklearn.datasets import load_breast_cancer

    ds = load_breast_cancer()
    # sklearn: target 0 = malignant, 1 = benign
    return [
        WbcdRecord(str(i + 1), int(t == 0), tuple(float(v) for v in x))
        for i, (x, t) in enumerate(zip(ds.data, ds.target))
    ]


def write_wbcd_csv(path, records):
    inv = {v: k for k, v in WBCD_LABELS.items()}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for r in records:
            w.writerow([r.id, inv[r.label], *(repr(f) for f in r.features)])


def load_dataset(name: str, path=None, two_moons: TwoMoonsSpec | None = None):
    """``(X, y)`` for ``"wbcd"`` (from ``path`` or the bundled copy) or ``"two-moons"``."""
    if name == "wbcd":
        records = load_wbcd(path) if path else bundled_wbcd()
        return records_to_arrays(records)
    if name == "two-moons":
        return gen_two_moons(two_moons or TwoMoonsSpec())
    raise ValueError(f"unknown dataset {name!r}")


def split(X, y, test_fraction: float = 0.2, seed: int = 0):
    """Seeded stratified split; returns ``X_train, X_test, y_train, y_test``."""
    return train_test_split(X, y, test_size=test_fraction, random_state=seed, stratify=y)


class SpikeEncoder(TransformerMixin, BaseEstimator):
    """Bernoulli spike encoder.

    ``fit`` learns per-feature min/max and a global gain so that the mean
    firing probability over the fitted data equals ``target_rate``.
    ``transform`` returns a (t_steps, n_samples, n_neurons) uint8 array.

    ``scheme="rate"`` uses one neuron per feature with rate proportional to the
    normalised feature; ``scheme="population"`` spreads each feature over
    ``neurons_per_feature`` Gaussian tuning curves on [0, 1]; inputs outside
    the fitted range then drive every neuron of that feature weakly.
    """

    def __init__(self, scheme="rate", neurons_per_feature=10, t_steps=100, target_rate=0.04, width=None,
                 random_state=0):
        self.scheme = scheme
        self.neurons_per_feature = neurons_per_feature
        self.t_steps = t_steps
        self.target_rate = target_rate
        self.width = width
        self.random_state = random_state

    def _normalise(self, X):
        span = np.where(self.data_max_ > self.data_min_, self.data_max_ - self.data_min_, 1.0)
        Xn = (X - self.data_min_) / span
        # tuning curves fade out naturally beyond the fitted range; linear rates must be clipped
        return Xn if self.scheme == "population" else np.clip(Xn, 0.0, 1.0)

    def _raw_rates(self, Xn):
        if self.scheme == "rate":
            return Xn
        centers = np.linspace(0.0, 1.0, self.neurons_per_feature)
        width = self.width or 1.0 / (self.neurons_per_feature - 1)
        r = np.exp(-0.5 * ((Xn[:, :, None] - centers) / width) ** 2)
        return r.reshape(len(Xn), -1)

    def fit(self, X, y=None):
        if self.scheme not in ("rate", "population"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0 < self.target_rate <= 1:
            raise ValueError("target_rate must lie in (0, 1]")
        if self.t_steps < 1:
            raise ValueError("t_steps must be >= 1")
        if self.scheme == "population" and self.neurons_per_feature < 2:
            raise ValueError("population coding needs >= 2 neurons per feature")
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        raw = self._raw_rates(self._normalise(X))
        mean = raw.mean()
        self.gain_ = self.target_rate / mean if mean > 0 else 0.0
        self.n_neurons_ = raw.shape[1]
        return self

    def rates(self, X):
        """Per-neuron firing probability per timestep, shape (n_samples, n_neurons)."""
        check_is_fitted(self, "gain_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return np.clip(self.gain_ * self._raw_rates(self._normalise(X)), 0.0, 1.0)

    def transform(self, X, seed=None):
        r = self.rates(X)
        rng = np.random.default_rng(self.random_state if seed is None else seed)
        return (rng.random((self.t_steps,) + r.shape) < r).astype(np.uint8)


def write_points_csv(path, X, y, header_lines=()):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "label"])
        for (a, b), lab in zip(X, y):
            w.writerow([f"{a:.12g}", f"{b:.12g}", int(lab)])
