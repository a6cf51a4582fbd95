"""End-to-end experiment drivers shared by the command line and the acceptance suite.

All randomness derives from a single integer seed through named sub-streams,
so a given ``(config, seed)`` pair always reproduces the same numbers.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .crossbar import CrossbarCore
from .data import SpikeEncoder, TwoMoonsSpec, gen_two_moons, load_dataset, moon_grid, split
from .estimator import weight_source
from .metrics import CrossbarSource, evaluate
from .snn import default_gains, forward, rate_decode
from .training import train, train_frequentist

STREAMS = {"data": 1, "split": 2, "encode_train": 3, "encode_eval": 4, "train": 5, "heldout": 6, "infer": 7}
MODE_STREAMS = {"fp32": 101, "fxp8": 102, "cm": 103, "deterministic": 104}


def sub_seed(seed: int, *tags) -> int:
    """A 32-bit integer seed for the named sub-stream ``tags`` of ``seed``."""
    return int(np.random.SeedSequence([int(seed), *map(int, tags)]).generate_state(1)[0])


def mode_seed(seed: int, mode: str, noise_cols: int = 0, repeat: int = 0) -> int:
    tag = noise_cols if mode == "hardware" else MODE_STREAMS[mode]
    extra = (repeat,) if repeat else ()
    return sub_seed(seed, STREAMS["infer"], tag, *extra)


# -- data ---------------------------------------------------------------------


@dataclass
class ExperimentData:
    X_train: np.ndarray
    y_train: np.ndarray
    X_eval: np.ndarray  # WBCD test split, or two-moons held-out points
    y_eval: np.ndarray
    grid: np.ndarray | None = None  # two-moons only


def prepare_data(cfg: ExperimentConfig, seed: int) -> ExperimentData:
    ds = cfg.dataset
    if ds.name == "wbcd":
        X, y = load_dataset("wbcd", ds.path)
        Xtr, Xte, ytr, yte = split(X, y, ds.test_fraction, sub_seed(seed, STREAMS["split"]))
        return ExperimentData(Xtr, ytr, Xte, yte)
    train_spec = TwoMoonsSpec(ds.n_samples, ds.noise_std, sub_seed(seed, STREAMS["data"]), ds.grid_bounds,
                              ds.grid_resolution)
    held_spec = TwoMoonsSpec(ds.heldout_samples, ds.heldout_noise_std, sub_seed(seed, STREAMS["heldout"]))
    Xtr, ytr = gen_two_moons(train_spec)
    Xho, yho = gen_two_moons(held_spec)
    return ExperimentData(Xtr, ytr, Xho, yho, moon_grid(train_spec))


# -- models -------------------------------------------------------------------


@dataclass
class TrainedModels:
    encoder: SpikeEncoder
    layer_sizes: list
    gains: list
    bayesian: list | None
    frequentist: list | None
    history: dict
    seed: int

    def weights_for(self, mode: str):
        w = self.frequentist if mode in ("cm", "deterministic") else self.bayesian
        if w is None:
            raise ValueError(f"mode {mode!r} needs {'frequentist' if mode == 'cm' else 'Bayesian'} weights")
        return w

    def to_dict(self) -> dict:
        enc = self.encoder
        return {
            "seed": self.seed,
            "layer_sizes": list(self.layer_sizes),
            "gains": [float(g) for g in self.gains],
            "encoder": {
                "params": enc.get_params(),
                "data_min": enc.data_min_.tolist(),
                "data_max": enc.data_max_.tolist(),
                "gain": float(enc.gain_),
                "n_features_in": int(enc.n_features_in_),
                "n_neurons": int(enc.n_neurons_),
            },
            "bayesian": None if self.bayesian is None else [w.tolist() for w in self.bayesian],
            "frequentist": None if self.frequentist is None else [w.tolist() for w in self.frequentist],
            "history": self.history,
        }

    @classmethod
    def from_dict(cls, d) -> "TrainedModels":
        e = d["encoder"]
        enc = SpikeEncoder(**e["params"])
        enc.data_min_ = np.asarray(e["data_min"], dtype=float)
        enc.data_max_ = np.asarray(e["data_max"], dtype=float)
        enc.gain_ = float(e["gain"])
        enc.n_features_in_ = int(e["n_features_in"])
        enc.n_neurons_ = int(e["n_neurons"])

        def arrays(ws):
            return None if ws is None else [np.asarray(w, dtype=float) for w in ws]

        return cls(enc, list(d["layer_sizes"]), list(d["gains"]), arrays(d["bayesian"]), arrays(d["frequentist"]),
                   d.get("history", {}), int(d["seed"]))


def make_encoder(cfg: ExperimentConfig, seed: int) -> SpikeEncoder:
    e = cfg.encoder
    return SpikeEncoder(scheme=e.scheme, neurons_per_feature=e.neurons_per_feature, t_steps=cfg.lif.t_steps,
                        target_rate=e.target_rate, width=e.width, random_state=sub_seed(seed, STREAMS["encode_train"]))


def fit_models(cfg: ExperimentConfig, seed: int, data: ExperimentData | None = None, bayesian=True,
               frequentist=True, log=None) -> TrainedModels:
    data = data or prepare_data(cfg, seed)
    enc = make_encoder(cfg, seed).fit(data.X_train)
    spikes = enc.transform(data.X_train)
    n_classes = int(np.max(data.y_train)) + 1
    sizes = [spikes.shape[2], *cfg.network.hidden, n_classes]
    gains = default_gains(sizes, cfg.lif.theta, cfg.network.gain_scale)
    tcfg = dataclasses.replace(cfg.train, seed=sub_seed(seed, STREAMS["train"]))
    history = {}
    bw = fw = None
    if bayesian:
        res = train(spikes, data.y_train, sizes, cfg.lif, tcfg, gains=gains, log=log)
        bw, history["bayesian"] = res.weights, res.history
    if frequentist:
        res = train_frequentist(spikes, data.y_train, sizes, cfg.lif, tcfg, gains=gains, log=log)
        fw, history["frequentist"] = res.weights, res.history
    return TrainedModels(enc, sizes, [float(g) for g in gains], bw, fw, history, int(seed))


def encode_eval(models: TrainedModels, X, seed: int, n_encodings: int = 1):
    """Spike trains for ``X``; with ``n_encodings > 1`` independent draws are
    concatenated along the sample axis (the first draw is the ``n = 1`` one)."""
    draws = [models.encoder.transform(X, seed=sub_seed(seed, STREAMS["encode_eval"], *((i,) if i else ())))
             for i in range(n_encodings)]
    return draws[0] if n_encodings == 1 else np.concatenate(draws, axis=1)


# -- inference ------------------------------------------------------------------


def make_source(cfg: ExperimentConfig, models: TrainedModels, mode: str, seed: int, noise_cols=None, cores=None,
                repeat=0):
    if mode == "hardware" and cores is not None:
        return CrossbarSource(cores)
    L = cfg.crossbar.noise_cols if noise_cols is None else noise_cols
    return weight_source(
        models.weights_for(mode), mode, mode_seed(seed, mode, L, repeat), L, cfg.device, cfg.mapping, cfg.adc,
        cfg.crossbar.core_kwargs(), cfg.inference.cm_program_bound, cfg.sampler.sigma_delta,
    )


def member_confidences(source, spikes, models: TrainedModels, cfg: ExperimentConfig, k: int, chunk=1024):
    """Per-member rate-decoded confidences, shape (k, n_samples, n_classes)."""
    layers = source.draw(k)
    parts = []
    for start in range(0, spikes.shape[1], chunk):
        parts.append(rate_decode(forward(layers, spikes[:, start:start + chunk], cfg.lif, models.gains)))
    return np.concatenate(parts, axis=1)


def infer(cfg: ExperimentConfig, models: TrainedModels, seed: int, mode=None, k=None, data=None, cores=None):
    """EvalReport of one backend on the evaluation split."""
    mode = mode or cfg.inference.mode
    k = k or cfg.inference.n_ensemble
    data = data or prepare_data(cfg, seed)
    spikes = encode_eval(models, data.X_eval, seed)
    members = member_confidences(make_source(cfg, models, mode, seed, cores=cores), spikes, models, cfg, k)
    rep = evaluate(members.mean(axis=0), data.y_eval, mode, k, cfg.inference.n_bins)
    if mode == "hardware":
        rep.extra["noise_cols"] = cores[0].n_noise_cols if cores else cfg.crossbar.noise_cols
    return rep


def map_planes(cfg: ExperimentConfig, models: TrainedModels, seed: int, noise_cols=None):
    """Programmed crossbar cores (one per layer) for the Bayesian weights."""
    L = cfg.crossbar.noise_cols if noise_cols is None else noise_cols
    seeds = np.random.SeedSequence(mode_seed(seed, "hardware", L)).spawn(len(models.bayesian))
    return [
        CrossbarCore.from_weights(w, L, noise_model=cfg.device, mapping=cfg.mapping, adc=cfg.adc, seed=s,
                                  **cfg.crossbar.core_kwargs())
        for w, s in zip(models.bayesian, seeds)
    ]


# -- sweeps -------------------------------------------------------------------


def _nested_reports(members, y, ensemble_sizes, n_bins, mode):
    return {k: evaluate(members[:k].mean(axis=0), y, mode, k, n_bins) for k in ensemble_sizes}


def sweep_seed(cfg: ExperimentConfig, seed: int, baselines=("fxp8", "fp32"), log=None):
    """Per-seed rows ``(seed, mode, L, K, accuracy, ece)`` for the L sweep and baselines.

    Ensembles are nested: the K-member ensemble is the first K of the largest one.
    Each cell averages ``sweep.repeats`` independent ensembles (fresh programming
    and noise) evaluated on ``sweep.eval_encodings`` pooled spike encodings.
    """
    sw = cfg.sweep
    data = prepare_data(cfg, seed)
    models = fit_models(cfg, seed, data, bayesian=True, frequentist="cm" in baselines, log=log)
    spikes = encode_eval(models, data.X_eval, seed, sw.eval_encodings)
    y = np.tile(data.y_eval, sw.eval_encodings)
    k_max = max(sw.ensemble_sizes)
    rows = []
    cells = [("hardware", L) for L in sw.noise_cols] + [(m, None) for m in baselines]
    for mode, L in cells:
        acc, ece = {}, {}
        for r in range(sw.repeats):
            src = make_source(cfg, models, mode, seed, noise_cols=L, repeat=r)
            members = member_confidences(src, spikes, models, cfg, k_max)
            for k, rep in _nested_reports(members, y, sw.ensemble_sizes, cfg.inference.n_bins, mode).items():
                acc.setdefault(k, []).append(rep.accuracy)
                ece.setdefault(k, []).append(rep.ece)
        for k in sw.ensemble_sizes:
            rows.append({"seed": seed, "mode": mode, "L": L, "K": k, "accuracy": float(np.mean(acc[k])),
                         "ece": float(np.mean(ece[k]))})
        if log:
            log(f"seed {seed} {mode} L={L}: ece@K{k_max} {np.mean(ece[k_max]):.4f}")
    return rows


def summarise(rows, keys=("mode", "L", "K")):
    """Across-seed mean and standard error of accuracy and ECE per cell."""
    cells = {}
    for r in rows:
        cells.setdefault(tuple(r[k] for k in keys), []).append(r)
    out = []
    for key, rs in cells.items():
        acc = np.array([r["accuracy"] for r in rs])
        ece = np.array([r["ece"] for r in rs])
        n = len(rs)

        def se(v):
            return float(v.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0

        out.append({**dict(zip(keys, key)), "n_seeds": n, "accuracy_mean": float(acc.mean()),
                    "accuracy_se": se(acc), "ece_mean": float(ece.mean()), "ece_se": se(ece)})
    return out


def two_moons_maps(cfg: ExperimentConfig, seed: int, models: TrainedModels | None = None, log=None):
    """Confidence maps over the grid plus held-out calibration.

    Returns ``(maps, reports, models, grid)`` where ``maps`` maps a label
    (``"K2"``, ``"K10"``, ``"frequentist"``) to P(class 1) at every grid point
    and ``reports`` holds held-out EvalReports for the Bayesian ensembles, the
    committee machine of equal size and the single frequentist model.
    """
    if cfg.dataset.name != "two-moons":
        raise ValueError("two-moons maps need dataset.name = 'two-moons'")
    data = prepare_data(cfg, seed)
    models = models or fit_models(cfg, seed, data, log=log)
    n_eval = len(data.y_eval)
    spikes = encode_eval(models, np.vstack([data.X_eval, data.grid]), seed)
    mode = cfg.inference.mode
    k_max = max(cfg.sweep.map_ensemble_sizes)
    maps, reports = {}, {}
    bayes = member_confidences(make_source(cfg, models, mode, seed), spikes, models, cfg, k_max)
    cm = member_confidences(make_source(cfg, models, "cm", seed), spikes, models, cfg, k_max)
    for k in cfg.sweep.map_ensemble_sizes:
        p = bayes[:k].mean(axis=0)
        maps[f"K{k}"] = p[n_eval:, 1]
        reports[f"{mode}-K{k}"] = evaluate(p[:n_eval], data.y_eval, mode, k, cfg.inference.n_bins)
        reports[f"cm-K{k}"] = evaluate(cm[:k].mean(axis=0)[:n_eval], data.y_eval, "cm", k, cfg.inference.n_bins)
    single = member_confidences(make_source(cfg, models, "deterministic", seed), spikes, models, cfg, 1)[0]
    maps["frequentist"] = single[n_eval:, 1]
    reports["frequentist"] = evaluate(single[:n_eval], data.y_eval, "deterministic", 1, cfg.inference.n_bins)
    return maps, reports, models, data.grid


def graded_fraction(p, lo=0.3, hi=0.7) -> float:
    p = np.asarray(p)
    return float(np.mean((p >= lo) & (p <= hi)))
