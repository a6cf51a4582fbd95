"""Transistor-count comparison of the PCM synaptic core against an SRAM FxP8 core.

Only final ratios are known for the reference design, so every per-component
count below is a declared assumption. The breakdown lists them so a reader can
see exactly what drives the ratio.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

PRNG_LAYOUTS = {"shared-36bit": (36, False), "per-row-22bit": (22, True)}

ASSUMPTIONS = (
    "1T1R access: one transistor per PCM device, two devices per differential cell",
    "noise register bits are 6T static latches holding ADC codes",
    "one sign-compare unit per row on both sides (columns are read one per cycle)",
    "LFSR bits are master-slave D flip-flops plus XOR feedback taps",
    "stochastic arbitration on the PCM side uses its own small LFSR",
    "ADCs are excluded on both sides unless include_adc is set",
)


@dataclass(frozen=True)
class AreaModelConfig:
    n_rows: int = 256
    n_cols: int = 256
    l_noise_cols: int = 16
    weight_bits: int = 8
    devices_per_cell: int = 2
    t_access: int = 1
    t_sram_bit: int = 6
    t_dff: int = 24
    t_xor: int = 12
    lfsr_taps: int = 4
    t_register_bit: int = 6
    register_bits: int = 8
    t_comparator: int = 16
    arbitration_lfsr_bits: int = 8
    prng_layout: str = "shared-36bit"
    include_adc: bool = False
    t_adc: int = 2000
    n_adc: int = 1

    def __post_init__(self):
        if self.prng_layout not in PRNG_LAYOUTS:
            raise ValueError(f"prng_layout must be one of {sorted(PRNG_LAYOUTS)}")
        for name, value in asdict(self).items():
            if isinstance(value, int) and not isinstance(value, bool) and value < 0:
                raise ValueError(f"{name} must be >= 0")
        if min(self.n_rows, self.n_cols, self.weight_bits, self.devices_per_cell) < 1:
            raise ValueError("array dimensions, weight_bits and devices_per_cell must be >= 1")


def _lfsr(bits, cfg):
    return bits * cfg.t_dff + max(cfg.lfsr_taps - 1, 0) * cfg.t_xor


def pcm_breakdown(cfg: AreaModelConfig) -> dict:
    items = {
        "weight_plane_access": cfg.n_rows * cfg.n_cols * cfg.devices_per_cell * cfg.t_access,
        "noise_plane_access": cfg.n_rows * cfg.l_noise_cols * cfg.devices_per_cell * cfg.t_access,
        "noise_register": cfg.n_rows * cfg.l_noise_cols * cfg.register_bits * cfg.t_register_bit,
        "comparators": cfg.n_rows * cfg.t_comparator,
        "arbitration_lfsr": _lfsr(cfg.arbitration_lfsr_bits, cfg),
    }
    if cfg.include_adc:
        items["adc"] = cfg.n_adc * cfg.t_adc
    return items


def cmos_breakdown(cfg: AreaModelConfig) -> dict:
    width, per_row = PRNG_LAYOUTS[cfg.prng_layout]
    items = {
        "sram_weights": cfg.n_rows * cfg.n_cols * cfg.weight_bits * cfg.t_sram_bit,
        "prng": (cfg.n_rows if per_row else 1) * _lfsr(width, cfg),
        "comparators": cfg.n_rows * cfg.t_comparator,
    }
    if cfg.include_adc:
        items["adc"] = cfg.n_adc * cfg.t_adc
    return items


def compare(pcm_items: dict, cmos_items: dict) -> dict:
    pcm = sum(pcm_items.values())
    cmos = sum(cmos_items.values())
    return {
        "pcm_count": pcm,
        "cmos_count": cmos,
        "ratio": cmos / pcm,
        "pcm_breakdown": dict(pcm_items),
        "cmos_breakdown": dict(cmos_items),
    }


def estimate(cfg: AreaModelConfig | None = None) -> dict:
    """Itemised transistor counts and ``ratio = cmos_count / pcm_count``."""
    cfg = cfg or AreaModelConfig()
    out = compare(pcm_breakdown(cfg), cmos_breakdown(cfg))
    out["config"] = asdict(cfg)
    out["assumptions"] = list(ASSUMPTIONS)
    return out
