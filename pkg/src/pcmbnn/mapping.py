"""Mapping trained real-valued weights onto weight-plane and noise-plane conductances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .device import NoiseModelConfig, noise_variance
from .exceptions import InfeasibleError


@dataclass(frozen=True)
class MappingConfig:
    """Weight-plane encoding and noise budget.

    ``g_at_wmax`` is the differential conductance for ``|w| = w_ceil``; weights
    beyond the ceiling are stored at ``g_ceiled``. ``encoding`` is
    ``"one-sided"`` (``(D, 0)`` / ``(0, -D)``) or ``"split"`` (centred on
    ``g_ceiled / 2``).
    """

    kappa: float = 8.0
    w_ceil: float = 2.0
    g_at_wmax: float = 16.0
    g_ceiled: float = 24.0
    sigma_delta: float = 0.8
    encoding: str = "one-sided"

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be >= 1")
        if not 0 < self.g_at_wmax < self.g_ceiled:
            raise ValueError("need 0 < g_at_wmax < g_ceiled")
        if self.w_ceil <= 0:
            raise ValueError("w_ceil must be > 0")
        if self.sigma_delta <= 0:
            raise ValueError("sigma_delta must be > 0")
        if self.encoding not in ("one-sided", "split"):
            raise ValueError(f"unknown encoding {self.encoding!r}")

    @property
    def g_per_unit(self) -> float:
        """Weight-plane µS per unit of nominal weight."""
        return self.g_at_wmax / self.w_ceil

    @property
    def w_ceiled(self) -> float:
        """Nominal weight represented by a ceiled cell (3 at defaults)."""
        return self.g_ceiled / self.g_per_unit

    @property
    def noise_sigma_us(self) -> float:
        """Target std of a noise-cell differential, in µS before PWM gain."""
        return self.sigma_delta * self.g_per_unit / self.kappa


def effective_weight(w_r, cfg: MappingConfig):
    """Nominal weight actually encoded: in-range values pass, others are ceiled."""
    w_r = np.asarray(w_r, dtype=float)
    return np.where(np.abs(w_r) <= cfg.w_ceil, w_r, np.sign(w_r) * cfg.w_ceiled)


def differential_target(w_r, cfg: MappingConfig):
    w_r = np.asarray(w_r, dtype=float)
    if not np.all(np.isfinite(w_r)):
        raise ValueError("weights must be finite")
    return np.where(np.abs(w_r) <= cfg.w_ceil, cfg.g_per_unit * w_r, np.sign(w_r) * cfg.g_ceiled)


def map_weights(w_r, cfg: MappingConfig):
    """Vectorised ``map_weight``; returns ``(g_plus, g_minus)`` arrays."""
    d = differential_target(w_r, cfg)
    if cfg.encoding == "one-sided":
        return np.maximum(d, 0.0), np.maximum(-d, 0.0)
    mid = cfg.g_ceiled / 2.0
    return mid + d / 2.0, mid - d / 2.0


def map_weight(w_r: float, cfg: MappingConfig) -> tuple[float, float]:
    gp, gm = map_weights(np.array([w_r], dtype=float), cfg)
    return float(gp[0]), float(gm[0])


def _cell_variance(g, model):
    # a symmetric noise cell: both devices at g
    return 2.0 * noise_variance(model, g, 0)


def solve_noise_cell(
    cfg: MappingConfig, noise_model: NoiseModelConfig, tol: float = 1e-6, grid_points: int = 2501
) -> float:
    """Conductance ``g*`` for both noise-cell devices meeting the variance budget.

    Finds the smallest root of ``2 sigma_p(g)^2 + 2 sigma_r(g, 0)^2 = s^2`` with
    ``s = cfg.noise_sigma_us``: a dense scan brackets the first sign change and
    bisection refines it.
    """
    target = cfg.noise_sigma_us ** 2
    grid = np.linspace(noise_model.g_min, noise_model.g_max, grid_points)
    resid = _cell_variance(grid, noise_model) - target

    hits = np.flatnonzero(np.abs(resid) <= tol)
    changes = np.flatnonzero(np.sign(resid[:-1]) * np.sign(resid[1:]) < 0)
    if hits.size and (not changes.size or hits[0] <= changes[0]):
        return float(grid[hits[0]])
    if not changes.size:
        sig = np.sqrt(_cell_variance(grid, noise_model))
        raise InfeasibleError(
            f"noise std {cfg.noise_sigma_us:.4g} µS unreachable; achievable [{sig.min():.4g}, {sig.max():.4g}]",
            achievable=(float(sig.min()), float(sig.max())),
        )

    lo, hi = grid[changes[0]], grid[changes[0] + 1]
    lo_sign = np.sign(resid[changes[0]])
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if np.sign(_cell_variance(mid, noise_model) - target) == lo_sign:
            lo = mid
        else:
            hi = mid
    g = 0.5 * (lo + hi)
    resid = float(_cell_variance(g, noise_model) - target)
    if abs(resid) > tol:
        raise InfeasibleError(f"bisection stalled at residual {resid:.3g}")
    return float(g)


@dataclass
class FeasibilityReport:
    w_r: np.ndarray
    feasible: list  # per weight: (k, 2) array of (G+, G-) pairs
    resolution: float

    @property
    def n_feasible(self) -> np.ndarray:
        return np.array([len(f) for f in self.feasible])

    @property
    def empty_fraction(self) -> float:
        return float(np.mean(self.n_feasible == 0))

    @property
    def feasible_weights(self) -> np.ndarray:
        return self.w_r[self.n_feasible > 0]


def check_single_cell_feasibility(
    w_r,
    cfg: MappingConfig | None = None,
    noise_model: NoiseModelConfig | None = None,
    resolution: float = 0.1,
    g_per_unit: float | None = None,
    mean_tol: float = 0.01,
    var_rel_tol: float = 0.01,
    sigma_delta: float | None = None,
) -> FeasibilityReport:
    """Grid-search one differential pair carrying both weight and sampling noise.

    A single cell must encode the weight at ``g_per_unit`` µS per unit (the
    weight-plane scale by default) and simultaneously supply noise of std
    ``sigma_delta`` in weight units from its own programming and read noise.
    ``sigma_delta`` overrides the config target (0 is allowed here).
    """
    cfg = cfg or MappingConfig()
    noise_model = noise_model or NoiseModelConfig()
    scale = cfg.g_per_unit if g_per_unit is None else g_per_unit
    w_r = np.atleast_1d(np.asarray(w_r, dtype=float))

    n = int(round((noise_model.g_max - noise_model.g_min) / resolution)) + 1
    g = noise_model.g_min + resolution * np.arange(n)
    g = g[g <= noise_model.g_max + 1e-9]
    var1 = noise_variance(noise_model, np.clip(g, noise_model.g_min, noise_model.g_max), 0)
    gp, gm = np.meshgrid(g, g, indexing="ij")
    mean_w = (gp - gm) / scale
    var_w = (var1[:, None] + var1[None, :]) / scale**2
    target = (cfg.sigma_delta if sigma_delta is None else sigma_delta) ** 2
    var_ok = np.abs(var_w - target) <= var_rel_tol * target

    feasible = []
    for w in w_r:
        ok = var_ok & (np.abs(mean_w - w) <= mean_tol)
        feasible.append(np.column_stack([gp[ok], gm[ok]]))
    return FeasibilityReport(w_r=w_r, feasible=feasible, resolution=resolution)


@dataclass
class PlaneProgram:
    """Conductance targets (µS) for one layer's crossbar core.

    ``weight_pairs`` has shape (N, M, 2) and ``noise_pairs`` (N, L, 2); the
    last axis is (G+, G-).
    """

    weight_pairs: np.ndarray
    noise_pairs: np.ndarray

    @property
    def shape(self):
        return self.weight_pairs.shape[:2]

    @property
    def n_noise_cols(self) -> int:
        return self.noise_pairs.shape[1]

    def to_dict(self) -> dict:
        return {
            "weight_pairs": np.round(self.weight_pairs, 12).tolist(),
            "noise_pairs": np.round(self.noise_pairs, 12).tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "PlaneProgram":
        return cls(np.asarray(d["weight_pairs"], float), np.asarray(d["noise_pairs"], float))


def plan_planes(
    w_r,
    n_noise_cols: int,
    cfg: MappingConfig | None = None,
    noise_model: NoiseModelConfig | None = None,
    noise_g: float | None = None,
) -> PlaneProgram:
    """Targets for an (N, M) weight matrix plus an (N, L) noise plane.

    ``noise_g`` overrides the solved noise-cell conductance (needed when the
    noise model cannot meet the budget, e.g. noiseless studies).
    """
    cfg = cfg or MappingConfig()
    noise_model = noise_model or NoiseModelConfig()
    w_r = np.asarray(w_r, dtype=float)
    if w_r.ndim != 2:
        raise ValueError("weights must be a 2-D (rows, cols) array")
    if n_noise_cols < 1:
        raise ValueError("need at least one noise column")
    gp, gm = map_weights(w_r, cfg)
    g_star = solve_noise_cell(cfg, noise_model) if noise_g is None else float(noise_g)
    noise = np.full((w_r.shape[0], n_noise_cols, 2), g_star)
    return PlaneProgram(np.stack([gp, gm], axis=-1), noise)
