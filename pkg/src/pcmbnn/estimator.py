"""scikit-learn style classifier wrapping encoding, training and ensemble inference."""

from __future__ import annotations

import dataclasses

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.preprocessing import LabelEncoder
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .config import MODES
from .crossbar import AdcConfig
from .data import SpikeEncoder
from .device import NoiseModelConfig
from .mapping import MappingConfig
from .metrics import CommitteeSource, CrossbarSource, FixedSource, SamplerSource, ensemble_predict
from .sampler import SamplerSpec
from .snn import LifConfig, default_gains
from .training import TrainConfig, train, train_frequentist


def weight_source(weights, mode, seed=0, noise_cols=16, noise_model=None, mapping=None, adc=None,
                  crossbar_options=None, cm_program_bound=1.0, sigma_delta=0.8):
    """Build the ensemble weight source for an inference backend.

    ``"deterministic"`` is an extra mode that uses ``sign(w)`` for every member.
    """
    noise_model = noise_model or NoiseModelConfig()
    mapping = mapping or MappingConfig()
    adc = adc or AdcConfig()
    if mode == "fp32":
        return SamplerSource(weights, SamplerSpec("logistic"), seed)
    if mode == "fxp8":
        return SamplerSource(weights, SamplerSpec("fxp8", sigma_delta=sigma_delta), seed)
    if mode == "hardware":
        return CrossbarSource.from_weights(
            weights, noise_cols, seed, noise_model=noise_model, mapping=mapping, adc=adc, **(crossbar_options or {})
        )
    if mode == "cm":
        return CommitteeSource(weights, noise_model, mapping, adc, cm_program_bound, seed)
    if mode == "deterministic":
        return FixedSource([np.where(np.asarray(w) >= 0, 1.0, -1.0) for w in weights])
    raise ValueError(f"unknown mode {mode!r}; expected one of {MODES + ('deterministic',)}")


class BayesianSNNClassifier(ClassifierMixin, BaseEstimator):
    """Spiking classifier with binary synapses.

    ``fit`` encodes inputs into spike trains and trains the Bernoulli weight
    parameters (or, with ``frequentist=True``, point binary weights).
    ``predict_proba`` averages rate-decoded confidences over ``n_ensemble``
    weight draws from the backend named by ``mode``; the backend can be
    switched after fitting with ``set_params``.
    """

    def __init__(self, hidden=(64, 64), encoder=None, lif=None, train_config=None, gain_scale=1.5,
                 frequentist=False, mode="fp32", n_ensemble=32, noise_cols=16, noise_model=None, mapping=None,
                 adc=None, crossbar_options=None, cm_program_bound=1.0, random_state=0):
        self.hidden = hidden
        self.encoder = encoder
        self.lif = lif
        self.train_config = train_config
        self.gain_scale = gain_scale
        self.frequentist = frequentist
        self.mode = mode
        self.n_ensemble = n_ensemble
        self.noise_cols = noise_cols
        self.noise_model = noise_model
        self.mapping = mapping
        self.adc = adc
        self.crossbar_options = crossbar_options
        self.cm_program_bound = cm_program_bound
        self.random_state = random_state

    def _lif(self):
        return self.lif or LifConfig()

    def fit(self, X, y, log=None):
        X, y = check_X_y(X, y)
        self.label_encoder_ = LabelEncoder().fit(y)
        self.classes_ = self.label_encoder_.classes_
        if len(self.classes_) < 2:
            raise ValueError("need at least two classes")
        yi = self.label_encoder_.transform(y)
        seed = int(self.random_state)
        self.encoder_ = clone(self.encoder) if self.encoder is not None else SpikeEncoder()
        self.encoder_.set_params(random_state=seed)
        spikes = self.encoder_.fit(X).transform(X)
        self.n_features_in_ = X.shape[1]
        self.layer_sizes_ = [spikes.shape[2], *self.hidden, len(self.classes_)]
        lif = self._lif()
        self.gains_ = default_gains(self.layer_sizes_, lif.theta, self.gain_scale)
        cfg = self.train_config or TrainConfig()
        cfg = dataclasses.replace(cfg, seed=seed)
        fit_fn = train_frequentist if self.frequentist else train
        result = fit_fn(spikes, yi, self.layer_sizes_, lif, cfg, gains=self.gains_, log=log)
        self.weights_ = result.weights
        self.history_ = result.history
        return self

    def encode(self, X, seed=None):
        check_is_fitted(self, "weights_")
        X = check_array(X)
        return self.encoder_.transform(X, seed=self._seed(seed) + 1)

    def _seed(self, seed):
        return int(self.random_state if seed is None else seed)

    def source(self, seed=None):
        return weight_source(
            self.weights_, self.mode, self._seed(seed), self.noise_cols, self.noise_model, self.mapping, self.adc,
            self.crossbar_options, self.cm_program_bound,
        )

    def predict_proba(self, X, seed=None):
        """Ensemble-averaged class confidences, shape (n_samples, n_classes)."""
        spikes = self.encode(X, seed)
        return ensemble_predict(self.source(seed), spikes, self._lif(), self.n_ensemble, self.gains_)

    def predict(self, X, seed=None):
        proba = self.predict_proba(X, seed)
        return self.classes_[np.argmax(proba, axis=1)]
