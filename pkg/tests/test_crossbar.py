import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from pcmbnn.crossbar import AdcConfig, CrossbarCore, dequantize, quantize
from pcmbnn.device import NoiseModelConfig
from pcmbnn.exceptions import DomainError, StaleRegisterError
from pcmbnn.mapping import MappingConfig, PlaneProgram, plan_planes

ADC = AdcConfig()
IDEAL_ADC = AdcConfig(bits=16)
NOISELESS = NoiseModelConfig.noiseless()


def test_quantize_examples():
    assert quantize(ADC, 0.0) == 0
    assert quantize(ADC, 25.0) == ADC.max_code == 127
    assert quantize(ADC, 40.0) == 127
    assert quantize(ADC, -40.0) == -127
    code = quantize(ADC, 12.5)  # 12.5 / 25 * 127 = 63.5, rounds away from zero
    assert code == 64
    assert float(dequantize(ADC, code)) == pytest.approx(12.598, abs=1e-3)
    assert abs(float(dequantize(ADC, code)) - 12.5) <= ADC.lsb / 2 + 1e-12


@settings(max_examples=300)
@given(a=st.floats(-30, 30), b=st.floats(-30, 30))
def test_quantize_monotone(a, b):
    lo, hi = sorted((a, b))
    assert quantize(ADC, lo) <= quantize(ADC, hi)


@settings(max_examples=300)
@given(v=st.floats(-25, 25))
def test_quantize_round_trip_half_lsb(v):
    assert abs(float(dequantize(ADC, quantize(ADC, v))) - v) <= ADC.lsb / 2 + 1e-12


def test_adc_validation():
    with pytest.raises(ValueError):
        AdcConfig(bits=0)
    with pytest.raises(ValueError):
        AdcConfig(full_scale=0)


def test_program_planes_noiseless_realises_targets():
    w = np.random.default_rng(0).uniform(-3, 3, (6, 5))
    core = CrossbarCore.from_weights(w, 3, noise_g=3.0, noise_model=NOISELESS)
    np.testing.assert_array_equal(core.weight_g, core.program.weight_pairs)
    np.testing.assert_array_equal(core.noise_g, core.program.noise_pairs)


def test_program_planes_default_within_bound():
    w = np.random.default_rng(1).uniform(-2.5, 2.5, (256, 256))
    core = CrossbarCore.from_weights(w, 16, weight_bound=0.1, seed=2)
    assert core.weight_converged.all()
    assert np.all(np.abs(core.weight_g - core.program.weight_pairs) <= 0.1)


def test_program_planes_out_of_range_target():
    core = CrossbarCore(1, 1, 1)
    bad = PlaneProgram(np.array([[[30.0, 0.0]]]), np.array([[[3.0, 3.0]]]))
    with pytest.raises(DomainError):
        core.program_planes(bad)


def test_program_planes_shape_mismatch():
    core = CrossbarCore(2, 2, 1)
    with pytest.raises(ValueError):
        core.program_planes(plan_planes(np.zeros((3, 2)), 1))


def test_stale_register():
    core = CrossbarCore.from_weights(np.zeros((2, 2)), 1)
    with pytest.raises(StaleRegisterError):
        core.sample_binary_weights()
    with pytest.raises(StaleRegisterError):
        core.register_values()
    with pytest.raises(StaleRegisterError):
        CrossbarCore(2, 2, 1).refresh_noise_register()


def test_refresh_noiseless_register_is_zero():
    core = CrossbarCore.from_weights(np.ones((4, 3)), 2, noise_g=3.0, noise_model=NOISELESS)
    core.refresh_noise_register()
    assert np.all(core.noise_register == 0)


def test_register_std_matches_budget():
    core = CrossbarCore.from_weights(np.zeros((64, 4)), 16, seed=3)
    values = []
    for t in range(200):
        core.refresh_noise_register()
        values.append(core.register_values())
    assert np.std(values) == pytest.approx(0.8, rel=0.05)


def test_static_mode_without_read_noise_repeats_register():
    m = NoiseModelConfig(read_rho=0.0)
    core = CrossbarCore.from_weights(np.zeros((8, 4)), 4, noise_model=m, sample_mode="static", seed=4)
    a = core.refresh_noise_register().noise_register.copy()
    b = core.refresh_noise_register().noise_register.copy()
    np.testing.assert_array_equal(a, b)


def test_reprogram_mode_changes_register():
    core = CrossbarCore.from_weights(np.zeros((8, 4)), 4, seed=4)
    a = core.refresh_noise_register().noise_register.copy()
    b = core.refresh_noise_register().noise_register.copy()
    assert not np.array_equal(a, b)


def test_zero_weight_fair_coin():
    core = CrossbarCore.from_weights(np.zeros((3, 4)), 4, seed=5)
    p = (core.sample_ensemble(100_000) == 1).mean(axis=0)
    assert np.all(np.abs(p - 0.5) <= 0.01)


def test_single_synapse_gaussian_marginal_ideal_adc():
    core = CrossbarCore.from_weights(np.array([[0.8]]), 64, adc=IDEAL_ADC, seed=6)
    p = (core.sample_ensemble(100_000) == 1).mean()
    assert p == pytest.approx(norm.cdf(1.0), abs=0.01)  # 0.8413


def test_marginals_ideal_adc_full_noise_plane():
    w = np.array([[-2.0, -1.0, 0.0, 1.0, 2.0]])
    core = CrossbarCore.from_weights(w, w.shape[1], adc=IDEAL_ADC, seed=7)
    p = (core.sample_ensemble(100_000) == 1).mean(axis=0)[0]
    np.testing.assert_allclose(p, norm.cdf(w[0] / 0.8), atol=0.01)


def test_single_noise_column_correlates_row():
    core = CrossbarCore.from_weights(np.zeros((2, 2)), 1, seed=8)
    s = core.sample_ensemble(20_000).astype(float)
    assert np.corrcoef(s[:, 0, 0], s[:, 0, 1])[0, 1] == pytest.approx(1.0)
    # different rows draw independent noise
    assert abs(np.corrcoef(s[:, 0, 0], s[:, 1, 0])[0, 1]) < 0.05


def test_arbitration_uniform():
    L, n, cols = 8, 20_000, 4
    core = CrossbarCore.from_weights(np.zeros((2, cols)), L, seed=9)
    _, trace = core.sample_ensemble(n, return_trace=True)
    assert trace.min() >= 0 and trace.max() < L
    counts = np.bincount(trace.ravel(), minlength=L)
    total = n * cols
    sd = np.sqrt(total * (1 / L) * (1 - 1 / L))
    assert np.all(np.abs(counts - total / L) <= 3 * sd)


def test_sample_binary_weights_matches_ensemble_in_distribution():
    w = np.array([[-0.5, 0.0, 0.7]])
    loop_core = CrossbarCore.from_weights(w, 3, seed=10)
    draws = []
    for _ in range(20_000):
        loop_core.refresh_noise_register()
        s = loop_core.sample_binary_weights()
        assert set(np.unique(s.values)) <= {-1, 1}
        assert np.all((s.arbitration_trace >= 0) & (s.arbitration_trace < 3))
        draws.append(s.values)
    p_loop = (np.array(draws) == 1).mean(axis=0)
    p_vec = (CrossbarCore.from_weights(w, 3, seed=11).sample_ensemble(20_000) == 1).mean(axis=0)
    np.testing.assert_allclose(p_loop, p_vec, atol=0.02)


def test_ceiled_weights_rarely_flip():
    w = np.array([[3.5, -4.0, 10.0]])
    core = CrossbarCore.from_weights(w, 3, seed=12)
    s = core.sample_ensemble(100_000)
    flips = (s != np.sign(w)).mean()
    assert flips < 1e-3


def test_comparison_values_noiseless_equal_effective_weight():
    w = np.array([[0.3, -1.7, 2.6]])
    core = CrossbarCore.from_weights(w, 2, noise_g=3.0, noise_model=NOISELESS)
    core.refresh_noise_register()
    lsb = ADC.lsb / MappingConfig().g_per_unit
    cmp = core.comparison_values()
    np.testing.assert_allclose(cmp, [[0.3, -1.7, 3.0]], atol=lsb)


def test_literal_register_order_is_available():
    core = CrossbarCore.from_weights(np.zeros((4, 4)), 4, pwm_before_adc=False, seed=13)
    core.refresh_noise_register()
    v = core.register_values()
    # kappa applied after quantisation: values are multiples of kappa * lsb
    steps = v * MappingConfig().g_per_unit / (8 * ADC.lsb)
    np.testing.assert_allclose(steps, np.round(steps), atol=1e-9)


def test_read_weights_noiseless():
    w = np.array([[1.0, -1.0], [2.0, 0.0]])
    core = CrossbarCore.from_weights(w, 1, noise_g=3.0, noise_model=NOISELESS)
    lsb = ADC.lsb / MappingConfig().g_per_unit
    np.testing.assert_allclose(core.read_weights(), w, atol=lsb / 2)


def test_snapshot_round_trip_and_clone():
    w = np.random.default_rng(14).uniform(-2, 2, (3, 4))
    core = CrossbarCore.from_weights(w, 2, seed=15)
    snap = core.snapshot()
    assert snap["shape"] == [3, 4] and snap["n_noise_cols"] == 2
    back = CrossbarCore.from_snapshot(snap, seed=1)
    np.testing.assert_allclose(back.weight_g, core.weight_g, atol=1e-11)
    np.testing.assert_allclose(back.noise_g, core.noise_g, atol=1e-11)
    a, b = core.clone(1), core.clone(1)
    np.testing.assert_array_equal(a.sample_ensemble(5), b.sample_ensemble(5))
    c = core.clone(2)
    assert not np.array_equal(core.clone(1).sample_ensemble(50), c.sample_ensemble(50))


def test_core_determinism():
    w = np.random.default_rng(16).uniform(-2, 2, (5, 5))
    a = CrossbarCore.from_weights(w, 4, seed=17).sample_ensemble(30)
    b = CrossbarCore.from_weights(w, 4, seed=17).sample_ensemble(30)
    np.testing.assert_array_equal(a, b)


def test_invalid_core():
    with pytest.raises(ValueError):
        CrossbarCore(0, 2, 1)
    with pytest.raises(ValueError):
        CrossbarCore(2, 2, 0)
    with pytest.raises(ValueError):
        CrossbarCore(2, 2, 1, sample_mode="sometimes")
    with pytest.raises(ValueError):
        CrossbarCore.from_weights(np.zeros((2, 2)), 1).sample_ensemble(0)
