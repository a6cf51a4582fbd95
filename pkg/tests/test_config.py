import dataclasses

import pytest

from pcmbnn.config import (
    ExperimentConfig,
    config_from_dict,
    config_hash,
    dump_config,
    load_config,
    provenance,
    version_string,
)
from pcmbnn.exceptions import ConfigError


def test_defaults_round_trip():
    cfg = ExperimentConfig()
    again = config_from_dict(cfg.to_dict())
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


def test_yaml_round_trip(tmp_path):
    cfg = config_from_dict({"train": {"lr": 0.01}, "network": {"hidden": [4, 4]}})
    p = tmp_path / "c.yaml"
    p.write_text(dump_config(cfg))
    assert load_config(p) == cfg
    assert cfg.network.hidden == (4, 4)


def test_shipped_configs_load():
    for name in ("wbcd", "two_moons"):
        cfg = load_config(f"configs/{name}.yaml")
        assert cfg.dataset.name in ("wbcd", "two-moons")


def test_hash_changes_with_any_field():
    a = ExperimentConfig()
    b = a.replace(train=dataclasses.replace(a.train, lr=0.06))
    assert config_hash(a) != config_hash(b)
    assert len(config_hash(a)) == 64


@pytest.mark.parametrize(
    "data, where",
    [
        ({"train": {"lr": -1}}, "train.lr"),
        ({"train": {"lrate": 1}}, "train.lrate"),
        ({"bogus": 1}, "bogus"),
        ({"train": {"epochs": 1.5}}, "train.epochs"),
        ({"crossbar": {"pwm_before_adc": "yes"}}, "crossbar.pwm_before_adc"),
        ({"inference": {"mode": "analog"}}, "inference.mode"),
        ({"sweep": {"noise_cols": [1, "a"]}}, "sweep.noise_cols[1]"),
        ({"sweep": {"repeats": 0}}, "sweep.repeats"),
        ({"dataset": {"path": "/nonexistent/wdbc.data"}}, "dataset.path"),
        ({"device": "x"}, "device"),
        ({"seeds": []}, "seeds"),
    ],
)
def test_errors_name_the_field(data, where):
    with pytest.raises(ConfigError) as info:
        config_from_dict(data)
    assert info.value.path == where


def test_missing_and_invalid_files(tmp_path):
    with pytest.raises(ConfigError) as info:
        load_config(tmp_path / "nope.yaml")
    assert info.value.path == "--config"
    bad = tmp_path / "bad.yaml"
    bad.write_text("train: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_provenance():
    cfg = ExperimentConfig(seed=3)
    prov = provenance(cfg)
    assert prov == {"config_hash": config_hash(cfg), "seed": 3, "version": version_string()}
    assert provenance(cfg, 7)["seed"] == 7
    assert version_string().startswith("pcmbnn-v")


def test_hash_ignores_output_directory():
    assert config_hash(ExperimentConfig(out_dir="a")) == config_hash(ExperimentConfig(out_dir="b"))
