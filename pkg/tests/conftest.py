import pytest
import yaml

CRITERIA = pytest.StashKey[dict]()

FAST_MOONS = {
    "seed": 0,
    "seeds": [0],
    "dataset": {"name": "two-moons", "n_samples": 120, "heldout_samples": 60, "grid_resolution": 12},
    "encoder": {"scheme": "population", "neurons_per_feature": 6, "target_rate": 0.1},
    "network": {"hidden": [12]},
    "lif": {"t_steps": 20},
    "train": {"epochs": 3, "kl_weight": 3.0},
    "inference": {"mode": "hardware", "n_ensemble": 4},
    "sweep": {"noise_cols": [1, 16], "ensemble_sizes": [1, 2, 4], "map_ensemble_sizes": [2, 4]},
}

FAST_WBCD = {
    "seed": 0,
    "seeds": [0],
    "network": {"hidden": [8]},
    "lif": {"t_steps": 15},
    "train": {"epochs": 1},
    "inference": {"n_ensemble": 3},
    "sweep": {"noise_cols": [1, 16], "ensemble_sizes": [1, 2, 4, 8, 16, 32, 64]},
}


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return path


@pytest.fixture
def fast_moons(tmp_path):
    return write_yaml(tmp_path / "moons.yaml", FAST_MOONS)


@pytest.fixture
def fast_wbcd(tmp_path):
    return write_yaml(tmp_path / "wbcd.yaml", FAST_WBCD)


@pytest.fixture
def criterion(request):
    """Record an acceptance criterion outcome for the end-of-run summary."""
    store = request.config.stash.setdefault(CRITERIA, {})

    def record(number, name, passed, detail=""):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        store[number] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(CRITERIA, {})
    if store:
        terminalreporter.section("acceptance criteria")
        for number in sorted(store):
            terminalreporter.write_line(store[number])
