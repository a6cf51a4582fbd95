"""Command-line experiment harness.

Every artifact is written atomically into ``--out`` (default: ``out_dir`` from
the config) and carries a provenance record: the config hash, the seed and the
package version. JSON files hold it under ``"provenance"``; CSV files start
with ``# key: value`` comment lines.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .area import PRNG_LAYOUTS
from .area import estimate as estimate_area
from .config import MODES, ExperimentConfig, load_config, provenance
from .crossbar import CrossbarCore
from .data import DataFormatError
from .exceptions import ConfigError
from . import experiments as ex


# -- output helpers ------------------------------------------------------------


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_json(path: Path, payload: dict, prov: dict):
    doc = {"provenance": dict(sorted(prov.items())), **{k: payload[k] for k in sorted(payload)}}
    atomic_write(path, json.dumps(doc, indent=1) + "\n")


def write_csv(path: Path, header, rows, prov: dict):
    buf = io.StringIO()
    for k in sorted(prov):
        buf.write(f"# {k}: {prov[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r[h]) for h in header])
    atomic_write(path, buf.getvalue())


def read_csv_rows(path):
    """Rows of a CSV written by this tool (provenance comment lines skipped)."""
    with open(path, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


def _load_models(path) -> ex.TrainedModels:
    if path is None:
        raise ConfigError("--weights", "a weights file from 'train' is required")
    if not Path(path).is_file():
        raise ConfigError("--weights", f"file not found: {path}")
    return ex.TrainedModels.from_dict(read_json(path))


def _check_seed(models, seed):
    if models.seed != seed:
        print(f"warning: weights were trained with seed {models.seed}, evaluating with seed {seed}; "
              "the evaluation split may overlap the training data", file=sys.stderr)


# -- subcommands -----------------------------------------------------------------


def cmd_train(cfg: ExperimentConfig, out: Path, args) -> list[Path]:
    models = ex.fit_models(cfg, cfg.seed)
    path = out / "weights.json"
    write_json(path, {"dataset": cfg.dataset.name, **models.to_dict()}, provenance(cfg))
    return [path]


def cmd_map(cfg: ExperimentConfig, out: Path, args) -> list[Path]:
    models = _load_models(args.weights)
    cores = ex.map_planes(cfg, models, cfg.seed)
    path = out / "planes.json"
    write_json(path, {"layers": [c.snapshot() for c in cores]}, provenance(cfg))
    return [path]


def cmd_infer(cfg: ExperimentConfig, out: Path, args) -> list[Path]:
    models = _load_models(args.weights)
    _check_seed(models, cfg.seed)
    mode = cfg.inference.mode
    cores = None
    if args.snapshot:
        if mode != "hardware":
            raise ConfigError("--snapshot", "plane snapshots can only be used with --mode hardware")
        snap = read_json(args.snapshot)
        seeds = np.random.SeedSequence(ex.mode_seed(cfg.seed, "hardware", 0)).spawn(len(snap["layers"]))
        cores = [
            CrossbarCore.from_snapshot(s, seed=ss, noise_model=cfg.device, mapping=cfg.mapping,
                                       **{k: v for k, v in cfg.crossbar.core_kwargs().items() if k != "sample_mode"})
            for s, ss in zip(snap["layers"], seeds)
        ]
    rep = ex.infer(cfg, models, cfg.seed, mode=mode, cores=cores)
    prov = provenance(cfg)
    jpath, cpath = out / f"report_{mode}.json", out / f"reliability_{mode}.csv"
    write_json(jpath, rep.to_dict(), prov)
    write_csv(cpath, ["lo", "hi", "mean_confidence", "accuracy", "count"], rep.bins, prov)
    return [jpath, cpath]


SWEEP_HEADER = ["L", "K", "n_seeds", "accuracy_mean", "accuracy_se", "ece_mean", "ece_se"]


def cmd_sweep_l(cfg: ExperimentConfig, out: Path, args) -> list[Path]:
    rows = []
    for seed in cfg.seeds:
        rows.extend(ex.sweep_seed(cfg, seed, baselines=("fxp8", "fp32", "cm")))
    summary = ex.summarise(rows)
    hw = [r for r in summary if r["mode"] == "hardware"]
    base = [r for r in summary if r["mode"] != "hardware"]
    prov = provenance(cfg)
    paths = [out / "sweep_l.csv", out / "sweep_l_baselines.csv", out / "sweep_l_seeds.csv"]
    write_csv(paths[0], SWEEP_HEADER, hw, prov)
    write_csv(paths[1], ["mode"] + SWEEP_HEADER[1:], base, prov)
    write_csv(paths[2], ["seed", "mode", "L", "K", "accuracy", "ece"], rows, prov)
    return paths


def cmd_two_moons_map(cfg: ExperimentConfig, out: Path, args) -> list[Path]:
    if cfg.dataset.name != "two-moons":
        raise ConfigError("dataset.name", "two-moons-map needs dataset.name: two-moons")
    maps, reports, _, grid = ex.two_moons_maps(cfg, cfg.seed)
    prov = provenance(cfg)
    paths = []
    for label, p in maps.items():
        path = out / f"two_moons_map_{label}.csv"
        write_csv(path, ["x", "y", "confidence"], [{"x": a, "y": b, "confidence": c} for (a, b), c in zip(grid, p)],
                  prov)
        paths.append(path)
    summary = {
        "heldout": {k: {"accuracy": r.accuracy, "ece": r.ece, "n_ensemble": r.n_ensemble} for k, r in reports.items()},
        "graded_fraction": {k: ex.graded_fraction(p) for k, p in maps.items()},
    }
    path = out / "two_moons_summary.json"
    write_json(path, summary, prov)
    return paths + [path]


def cmd_area(cfg: ExperimentConfig, out: Path, args) -> list[Path]:
    results = {layout: estimate_area(dataclasses.replace(cfg.area, prng_layout=layout)) for layout in PRNG_LAYOUTS}
    path = out / "area.json"
    write_json(path, {"configured_layout": cfg.area.prng_layout, "layouts": results}, provenance(cfg))
    return [path]


COMMANDS = {
    "train": (cmd_train, "train Bayesian and frequentist weights"),
    "map": (cmd_map, "program crossbar planes for trained weights and snapshot them"),
    "infer": (cmd_infer, "evaluate one inference backend on the evaluation split"),
    "sweep-l": (cmd_sweep_l, "accuracy/ECE over noise columns L and ensemble sizes K"),
    "two-moons-map": (cmd_two_moons_map, "confidence maps over the two-moons grid"),
    "area": (cmd_area, "transistor-count comparison against an SRAM core"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcmbnn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML experiment config (defaults apply when omitted)")
        p.add_argument("--seed", type=int, help="override the config seed (sweep-l: run this seed only)")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        p.add_argument("--mode", choices=MODES, help="inference backend (overrides inference.mode)")
        if name in ("map", "infer"):
            p.add_argument("--weights", help="weights.json written by 'train'")
        if name == "infer":
            p.add_argument("--snapshot", help="planes.json written by 'map' (hardware mode)")
    return parser


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    changes = {}
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("--seed", "must be an unsigned 64-bit integer")
        changes.update(seed=args.seed, seeds=(args.seed,))
    if args.out:
        changes["out_dir"] = args.out
    if args.mode:
        changes["inference"] = dataclasses.replace(cfg.inference, mode=args.mode)
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Path(cfg.out_dir)
        fn, _ = COMMANDS[args.command]
        for path in fn(cfg, out, args):
            print(path)
    except ConfigError as exc:
        parser.exit(2, f"pcmbnn {args.command}: config error: {exc}\n")
    except (ValueError, DataFormatError, OSError, KeyError) as exc:
        parser.exit(1, f"pcmbnn {args.command}: error: {exc}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
