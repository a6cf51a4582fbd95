import subprocess

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pcmbnn.data import (
    DataFormatError,
    SpikeEncoder,
    TwoMoonsSpec,
    bundled_wbcd,
    distance_to_moons,
    gen_two_moons,
    load_dataset,
    load_wbcd,
    moon_grid,
    records_to_arrays,
    split,
    write_points_csv,
    write_wbcd_csv,
)


@pytest.fixture(scope="module")
def wbcd_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("wbcd") / "wdbc.data"
    write_wbcd_csv(path, bundled_wbcd())
    return path


def test_noiseless_moons_lie_on_arcs():
    X, _ = gen_two_moons(TwoMoonsSpec(n_samples=300, noise_std=0.0, seed=1))
    assert distance_to_moons(X).max() < 1e-12


def test_distance_to_moons_off_manifold():
    assert distance_to_moons([[0.0, 2.0]])[0] == pytest.approx(1.0)
    assert distance_to_moons([[0.0, 0.0]])[0] == pytest.approx(min(1.0, np.hypot(1, 0.5) - 1))


@pytest.mark.parametrize("n", [2, 7, 400])
def test_moons_class_balance(n):
    _, y = gen_two_moons(TwoMoonsSpec(n_samples=n, seed=0))
    assert abs(int((y == 0).sum()) - int((y == 1).sum())) <= 1


def test_moons_determinism():
    a = gen_two_moons(TwoMoonsSpec(seed=5))
    b = gen_two_moons(TwoMoonsSpec(seed=5))
    c = gen_two_moons(TwoMoonsSpec(seed=6))
    np.testing.assert_array_equal(a[0], b[0])
    assert not np.array_equal(a[0], c[0])


def test_moon_grid_layout():
    g = moon_grid(TwoMoonsSpec(grid_resolution=100))
    assert g.shape == (10_000, 2)
    assert g[0].tolist() == [-1.5, -1.25] and g[-1].tolist() == [2.5, 1.75]
    assert g[1, 1] == g[0, 1]  # x varies fastest


@pytest.mark.parametrize("kwargs", [dict(n_samples=1), dict(noise_std=-0.1), dict(grid_resolution=1)])
def test_invalid_moons_spec(kwargs):
    with pytest.raises(ValueError):
        TwoMoonsSpec(**kwargs)


def test_wbcd_counts_and_round_trip(wbcd_file):
    # independent count with standard tools
    lines = subprocess.run(["wc", "-l", str(wbcd_file)], capture_output=True, text=True).stdout.split()[0]
    malignant = subprocess.run(["grep", "-c", ",M,", str(wbcd_file)], capture_output=True, text=True).stdout
    assert int(lines) == 569 and int(malignant) == 212
    records = load_wbcd(wbcd_file)
    X, y = records_to_arrays(records)
    assert X.shape == (569, 30)
    assert int((y == 0).sum()) == 357 and int((y == 1).sum()) == 212
    Xb, yb = records_to_arrays(bundled_wbcd())
    np.testing.assert_array_equal(X, Xb)
    np.testing.assert_array_equal(y, yb)
    Xd, yd = load_dataset("wbcd", wbcd_file)
    np.testing.assert_array_equal(Xd, X)


def test_wbcd_empty_file(tmp_path):
    p = tmp_path / "empty.data"
    p.write_text("\n\n")
    with pytest.raises(DataFormatError):
        load_wbcd(p)


@pytest.mark.parametrize(
    "line, fragment",
    [("1,M,1.0", "columns"), ("1,X," + ",".join(["1"] * 30), "diagnosis"), ("1,B," + ",".join(["a"] * 30), "line 2")],
)
def test_wbcd_malformed_lines(tmp_path, wbcd_file, line, fragment):
    good = wbcd_file.read_text().splitlines()[0]
    p = tmp_path / "bad.data"
    p.write_text(good + "\n" + line + "\n")
    with pytest.raises(DataFormatError, match=fragment):
        load_wbcd(p)
    with pytest.raises(DataFormatError, match="line 2"):
        load_wbcd(p)


def test_unknown_dataset():
    with pytest.raises(ValueError):
        load_dataset("iris")


def test_split_is_stratified_and_seeded():
    X, y = load_dataset("wbcd")
    a = split(X, y, 0.2, 3)
    b = split(X, y, 0.2, 3)
    assert len(a[3]) == 114
    np.testing.assert_array_equal(a[0], b[0])
    assert abs(a[3].mean() - y.mean()) < 0.01


def test_encoder_dataset_rate():
    X, y = load_dataset("wbcd")
    Xtr, _, _, _ = split(X, y, 0.2, 0)
    enc = SpikeEncoder(t_steps=100, target_rate=0.04, random_state=0).fit(Xtr)
    s = enc.transform(Xtr)
    assert s.shape == (100, len(Xtr), 30) and s.dtype == np.uint8
    assert s.mean() == pytest.approx(0.04, abs=0.002)


def test_encoder_normalisation():
    X = np.array([[1.0, 10.0], [3.0, 20.0], [2.0, 15.0]])
    enc = SpikeEncoder().fit(X)
    Xn = enc._normalise(X)
    np.testing.assert_allclose(Xn.min(axis=0), 0.0)
    np.testing.assert_allclose(Xn.max(axis=0), 1.0)


def test_encoder_zero_feature_no_spikes():
    X = np.array([[0.0, 1.0], [1.0, 0.5], [0.5, 0.0]])
    enc = SpikeEncoder(t_steps=200).fit(X)
    s = enc.transform(X)
    assert s[:, 0, 0].sum() == 0 and s[:, 2, 1].sum() == 0


def test_encoder_determinism_and_seed_override():
    X = np.random.default_rng(0).random((20, 3))
    enc = SpikeEncoder(random_state=4).fit(X)
    np.testing.assert_array_equal(enc.transform(X), enc.transform(X))
    np.testing.assert_array_equal(enc.transform(X, seed=9), enc.transform(X, seed=9))
    assert not np.array_equal(enc.transform(X, seed=9), enc.transform(X, seed=10))


def test_population_encoder_shape_and_rate():
    X = np.random.default_rng(1).random((50, 2))
    enc = SpikeEncoder(scheme="population", neurons_per_feature=10, target_rate=0.1, t_steps=400).fit(X)
    s = enc.transform(X)
    assert s.shape == (400, 50, 20)
    assert s.mean() == pytest.approx(0.1, abs=0.005)
    # off-range inputs are not clipped onto the edge neuron
    far = enc.rates(np.array([[3.0, 0.5]]))[0, :10]
    edge = enc.rates(np.array([[1.0, 0.5]]))[0, :10]
    assert far.max() < 0.01 * edge.max()


@pytest.mark.parametrize("kwargs", [dict(scheme="x"), dict(target_rate=0.0), dict(t_steps=0),
                                    dict(scheme="population", neurons_per_feature=1)])
def test_encoder_validation(kwargs):
    with pytest.raises(ValueError):
        SpikeEncoder(**kwargs).fit(np.ones((3, 2)))


def test_encoder_feature_mismatch():
    enc = SpikeEncoder().fit(np.ones((3, 2)))
    with pytest.raises(ValueError):
        enc.rates(np.ones((3, 3)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rate=st.floats(0.01, 0.5))
def test_rates_are_probabilities_and_ordered(seed, rate):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 3))
    enc = SpikeEncoder(target_rate=rate).fit(X)
    r = enc.rates(X)
    assert np.all((r >= 0) & (r <= 1))
    # rate coding preserves the ordering of each feature
    for j in range(3):
        order = np.argsort(X[:, j])
        assert np.all(np.diff(r[order, j]) >= 0)


def test_write_points_csv(tmp_path):
    p = tmp_path / "pts.csv"
    write_points_csv(p, np.array([[0.5, 1.0]]), [1], header_lines=["seed: 0"])
    assert p.read_text() == "# seed: 0\nx,y,label\n0.5,1,1\n"
