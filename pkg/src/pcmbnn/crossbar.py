"""Two-plane DPCM crossbar core: weight plane, noise plane, noise register, ADC.

A core holds one layer's N x M weight matrix (rows are inputs, columns are
outputs) and an N x L noise plane. Sampling a binary weight matrix reads the
noise plane into a register, picks one register column per weight column by
stochastic arbitration, and takes the sign of the digital sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .device import NoiseModelConfig, program_conductance, read_conductance
from .exceptions import StaleRegisterError
from .mapping import MappingConfig, PlaneProgram, plan_planes

SAMPLE_MODES = ("reprogram", "static")


@dataclass(frozen=True)
class AdcConfig:
    """Uniform signed mid-tread ADC saturating at ``+-full_scale`` µS."""

    bits: int = 8
    full_scale: float = 25.0

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if self.full_scale <= 0:
            raise ValueError("full_scale must be > 0")

    @property
    def max_code(self) -> int:
        return max(2 ** (self.bits - 1) - 1, 1)

    @property
    def lsb(self) -> float:
        return self.full_scale / self.max_code


def quantize(adc: AdcConfig, v):
    """Signed ADC codes, rounding half away from zero."""
    x = np.asarray(v, dtype=float) * adc.max_code / adc.full_scale
    code = np.sign(x) * np.floor(np.abs(x) + 0.5)
    return np.clip(code, -adc.max_code, adc.max_code).astype(np.int64)


def dequantize(adc: AdcConfig, code):
    return np.asarray(code, dtype=float) * adc.lsb


@dataclass
class BinaryWeightSample:
    values: np.ndarray  # (N, M) of +-1
    arbitration_trace: np.ndarray  # (M,) chosen register column per weight column


class CrossbarCore:
    """Emulated crossbar core for one layer.

    Parameters
    ----------
    n_rows, n_cols, n_noise_cols : int
        Weight plane is ``n_rows x n_cols``; noise plane ``n_rows x n_noise_cols``.
    sample_mode : {"reprogram", "static"}
        ``"reprogram"`` re-programs the noise plane at every register refresh,
        so each refresh carries fresh programming noise. ``"static"`` programs it
        once and only re-reads it.
    weight_bound : float
        Program-and-verify bound for weight-plane devices (µS).
    noise_bound : float or None
        Verify bound for noise-plane devices; ``None`` keeps the raw draw.
    pwm_before_adc : bool
        The noise plane is read with a ``kappa``-times longer pulse, so the ADC
        digitises ``kappa * (G+ - G-)``. When ``False`` the register holds the
        unscaled codes and they are multiplied by ``kappa`` digitally.
    """

    def __init__(
        self,
        n_rows: int,
        n_cols: int,
        n_noise_cols: int,
        noise_model: NoiseModelConfig | None = None,
        mapping: MappingConfig | None = None,
        adc: AdcConfig | None = None,
        sample_mode: str = "reprogram",
        weight_bound: float | None = 0.1,
        noise_bound: float | None = None,
        max_iters: int = 1000,
        pwm_before_adc: bool = True,
        seed=0,
    ):
        if min(n_rows, n_cols) < 1 or n_noise_cols < 1:
            raise ValueError("crossbar dimensions must be >= 1")
        if sample_mode not in SAMPLE_MODES:
            raise ValueError(f"sample_mode must be one of {SAMPLE_MODES}")
        self.n_rows, self.n_cols, self.n_noise_cols = n_rows, n_cols, n_noise_cols
        self.noise_model = noise_model or NoiseModelConfig()
        self.mapping = mapping or MappingConfig()
        self.adc = adc or AdcConfig()
        self.sample_mode = sample_mode
        self.weight_bound = weight_bound
        self.noise_bound = noise_bound
        self.max_iters = max_iters
        self.pwm_before_adc = pwm_before_adc
        self.seed = seed

        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        prog, read, arb = ss.spawn(3)
        self._prog_rng = np.random.default_rng(prog)
        self._read_rng = np.random.default_rng(read)
        self._arb_rng = np.random.default_rng(arb)

        self.program: PlaneProgram | None = None
        self.weight_g: np.ndarray | None = None  # (N, M, 2) realised
        self.noise_g: np.ndarray | None = None  # (N, L, 2) realised
        self.weight_converged: np.ndarray | None = None
        self.noise_register: np.ndarray | None = None  # (N, L) ADC codes

    @property
    def kappa(self) -> float:
        return self.mapping.kappa

    @classmethod
    def from_weights(cls, w_r, n_noise_cols: int, noise_g=None, **kwargs) -> "CrossbarCore":
        """Build and program a core for a real-valued (N, M) weight matrix."""
        w_r = np.asarray(w_r, dtype=float)
        core = cls(w_r.shape[0], w_r.shape[1], n_noise_cols, **kwargs)
        core.program_planes(plan_planes(w_r, n_noise_cols, core.mapping, core.noise_model, noise_g=noise_g))
        return core

    def program_planes(self, plane_program: PlaneProgram) -> "CrossbarCore":
        if plane_program.weight_pairs.shape != (self.n_rows, self.n_cols, 2):
            raise ValueError("weight plane program does not match the core")
        if plane_program.noise_pairs.shape != (self.n_rows, self.n_noise_cols, 2):
            raise ValueError("noise plane program does not match the core")
        self.program = plane_program
        self.weight_g, self.weight_converged = program_conductance(
            plane_program.weight_pairs, self.noise_model, self._prog_rng, self.weight_bound, self.max_iters
        )
        self.noise_g = self._program_noise()
        self.noise_register = None
        return self

    def _program_noise(self, n: int | None = None):
        targets = self.program.noise_pairs if n is None else np.broadcast_to(
            self.program.noise_pairs, (n,) + self.program.noise_pairs.shape
        )
        g, _ = program_conductance(targets, self.noise_model, self._prog_rng, self.noise_bound, self.max_iters)
        return g

    def _require_programmed(self):
        if self.weight_g is None:
            raise StaleRegisterError("planes have not been programmed")

    def _read_noise_codes(self, noise_g, read_index):
        g = read_conductance(noise_g, self.noise_model, self._read_rng, read_index)
        diff = g[..., 0] - g[..., 1]
        if self.pwm_before_adc:
            diff = self.kappa * diff
        return quantize(self.adc, diff)

    def _read_weight_codes(self, shape_prefix, read_index):
        g = read_conductance(
            np.broadcast_to(self.weight_g, shape_prefix + self.weight_g.shape),
            self.noise_model,
            self._read_rng,
            read_index,
        )
        return quantize(self.adc, g[..., 0] - g[..., 1])

    def refresh_noise_register(self, read_index: int = 0) -> "CrossbarCore":
        """Read the noise plane into the register (re-programming it first in reprogram mode)."""
        self._require_programmed()
        if self.sample_mode == "reprogram":
            self.noise_g = self._program_noise()
        self.noise_register = self._read_noise_codes(self.noise_g, read_index)
        return self

    def register_values(self) -> np.ndarray:
        """Register contents as noise in weight units (``kappa``-scaled, per unit weight)."""
        if self.noise_register is None:
            raise StaleRegisterError("noise register has never been refreshed")
        v = dequantize(self.adc, self.noise_register)
        if not self.pwm_before_adc:
            v = self.kappa * v
        return v / self.mapping.g_per_unit

    def _noise_contribution(self, codes):
        return codes if self.pwm_before_adc else np.rint(self.kappa * codes).astype(np.int64)

    def comparison_values(self, read_index: int = 0, columns=None) -> np.ndarray:
        """The digital sum compared against zero, in weight units.

        ``columns`` fixes the register column used for each weight column;
        by default one is drawn per column as in sampling.
        """
        if self.noise_register is None:
            raise StaleRegisterError("noise register has never been refreshed")
        if columns is None:
            columns = self._arb_rng.integers(self.n_noise_cols, size=self.n_cols)
        w_codes = self._read_weight_codes((), read_index)
        total = w_codes + self._noise_contribution(self.noise_register[:, columns])
        return dequantize(self.adc, total) / self.mapping.g_per_unit

    def sample_binary_weights(self, read_index: int = 0) -> BinaryWeightSample:
        """One binary weight matrix from the current register contents."""
        if self.noise_register is None:
            raise StaleRegisterError("noise register has never been refreshed")
        trace = self._arb_rng.integers(self.n_noise_cols, size=self.n_cols)
        w_codes = self._read_weight_codes((), read_index)
        total = w_codes + self._noise_contribution(self.noise_register[:, trace])
        return BinaryWeightSample(np.where(total >= 0, 1, -1).astype(np.int8), trace)

    def sample_ensemble(self, n: int, read_index: int = 0, return_trace: bool = False):
        """``n`` independent refresh-then-sample cycles, vectorised.

        Returns an (n, N, M) array of +-1. Equivalent in distribution to calling
        :meth:`refresh_noise_register` and :meth:`sample_binary_weights` n times.
        """
        self._require_programmed()
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.sample_mode == "reprogram":
            noise_g = self._program_noise(n)
        else:
            noise_g = np.broadcast_to(self.noise_g, (n,) + self.noise_g.shape)
        reg = self._read_noise_codes(noise_g, read_index)  # (n, N, L)
        trace = self._arb_rng.integers(self.n_noise_cols, size=(n, self.n_cols))
        chosen = np.take_along_axis(reg, np.broadcast_to(trace[:, None, :], (n, self.n_rows, self.n_cols)), axis=2)
        w_codes = self._read_weight_codes((n,), read_index)
        total = w_codes + self._noise_contribution(chosen)
        values = np.where(total >= 0, 1, -1).astype(np.int8)
        self.noise_register = reg[-1]
        if self.sample_mode == "reprogram":
            self.noise_g = noise_g[-1]
        return (values, trace) if return_trace else values

    def read_weights(self, read_index: int = 0) -> np.ndarray:
        """Analog weight-plane read through the ADC, in weight units (no noise plane)."""
        self._require_programmed()
        return dequantize(self.adc, self._read_weight_codes((), read_index)) / self.mapping.g_per_unit

    @classmethod
    def from_snapshot(cls, snap: dict, seed=0, **kwargs) -> "CrossbarCore":
        """Restore a programmed core from :meth:`snapshot` output (fresh random streams)."""
        n_rows, n_cols = snap["shape"]
        kwargs.setdefault("adc", AdcConfig(**snap["adc"]))
        kwargs.setdefault("sample_mode", snap["sample_mode"])
        core = cls(n_rows, n_cols, snap["n_noise_cols"], seed=seed, **kwargs)
        if core.kappa != snap["kappa"]:
            raise ValueError(f"snapshot kappa {snap['kappa']} does not match mapping kappa {core.kappa}")
        core.program = PlaneProgram.from_dict(snap["targets"])
        core.weight_g = np.asarray(snap["realized"]["weight_pairs"], dtype=float).reshape(n_rows, n_cols, 2)
        core.noise_g = np.asarray(snap["realized"]["noise_pairs"], dtype=float).reshape(n_rows, -1, 2)
        core.weight_converged = np.ones((n_rows, n_cols, 2), dtype=bool)
        return core

    def clone(self, seed) -> "CrossbarCore":
        """Copy of the programmed state with fresh, independent random streams."""
        other = CrossbarCore(
            self.n_rows, self.n_cols, self.n_noise_cols, self.noise_model, self.mapping, self.adc,
            self.sample_mode, self.weight_bound, self.noise_bound, self.max_iters, self.pwm_before_adc, seed,
        )
        other.program = self.program
        for name in ("weight_g", "noise_g", "weight_converged", "noise_register"):
            val = getattr(self, name)
            setattr(other, name, None if val is None else val.copy())
        return other

    def snapshot(self) -> dict:
        """JSON-serialisable record of targets and realised conductances."""
        self._require_programmed()
        return {
            "shape": [self.n_rows, self.n_cols],
            "n_noise_cols": self.n_noise_cols,
            "sample_mode": self.sample_mode,
            "kappa": self.kappa,
            "adc": {"bits": self.adc.bits, "full_scale": self.adc.full_scale},
            "targets": self.program.to_dict(),
            "realized": {
                "weight_pairs": np.round(self.weight_g, 12).tolist(),
                "noise_pairs": np.round(self.noise_g, 12).tolist(),
            },
            "unconverged_weight_devices": int((~self.weight_converged).sum()),
        }
