import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mzmbias.chain import SignalChainConfig, adc_read, dac_write, detect, read_monitor, tap

CFG = SignalChainConfig(tap_monitor_fraction=0.1, detector_gain=2.0, adc_bits=12,
                        adc_full_scale=5.0, dac_bits=16, dac_min=0.0, dac_max=10.0)

anyv = st.floats(-20, 20, allow_nan=False)


@pytest.mark.parametrize("kwargs", [
    dict(tap_monitor_fraction=0.0), dict(tap_monitor_fraction=1.0), dict(detector_gain=0.0),
    dict(detector_noise_sigma=-1e-3), dict(adc_bits=0), dict(adc_full_scale=0.0),
    dict(dac_bits=0), dict(dac_min=5.0, dac_max=5.0), dict(oversample=0),
])
def test_config_invariants(kwargs):
    with pytest.raises(ValueError):
        SignalChainConfig(**kwargs)


def test_tap_nine_to_one():
    through, monitor = tap(CFG, 1.0)
    assert (through, monitor) == pytest.approx((0.9, 0.1))
    assert tap(CFG, 0.0) == (0.0, 0.0)


@given(st.floats(0, 1e3))
def test_tap_conserves_power(p):
    through, monitor = tap(CFG, p)
    assert through + monitor == pytest.approx(p, rel=1e-15, abs=0)


def test_detect_noiseless():
    assert detect(CFG, 0.1) == pytest.approx(0.2)
    assert detect(CFG, 0.0) == 0.0


@given(st.floats(0, 10), st.floats(0, 100))
def test_detect_linear(p, a):
    assert detect(CFG, a * p) == pytest.approx(a * detect(CFG, p), rel=1e-12, abs=1e-300)


def test_detect_noise_is_seeded():
    cfg = SignalChainConfig(detector_noise_sigma=0.01)
    a = [detect(cfg, 0.1, np.random.default_rng(3)) for _ in range(2)]
    assert a[0] == a[1] != 0.2


def test_adc_examples():
    lsb = 5.0 / 4095
    assert abs(adc_read(CFG, 2.5) - 2.5) <= lsb / 2
    assert adc_read(CFG, -1.0) == 0.0
    assert adc_read(CFG, 7.0) == pytest.approx(5.0)
    level = 1234 * lsb
    assert adc_read(CFG, level) == level


@given(anyv)
def test_adc_error_bound_and_idempotent(v):
    q = adc_read(CFG, v)
    clamped = min(max(v, 0.0), 5.0)
    assert abs(q - clamped) <= CFG.adc_lsb / 2 + 1e-12
    assert adc_read(CFG, q) == q


@given(anyv, anyv)
def test_adc_monotone(a, b):
    if a <= b:
        assert adc_read(CFG, a) <= adc_read(CFG, b)


def test_adc_array_matches_scalar():
    v = np.linspace(-1, 6, 1001)
    np.testing.assert_array_equal(adc_read(CFG, v), [adc_read(CFG, float(x)) for x in v])


def test_ideal_adc_is_identity():
    cfg = SignalChainConfig(adc_bits=None)
    assert adc_read(cfg, 1.234567) == 1.234567
    assert cfg.adc_lsb == 0.0


def test_dac_examples():
    assert abs(dac_write(CFG, 1.9) - 1.9) <= 0.5 * 10 / 65535
    assert dac_write(CFG, -3.0) == 0.0
    assert dac_write(CFG, 12.0) == pytest.approx(10.0)


@given(anyv)
def test_dac_idempotent_and_bounded(v):
    q = dac_write(CFG, v)
    assert dac_write(CFG, q) == q
    assert CFG.dac_min <= q <= CFG.dac_max
    clamped = min(max(v, 0.0), 10.0)
    assert abs(q - clamped) <= CFG.dac_lsb / 2 + 1e-12


@given(anyv, anyv)
def test_dac_monotone(a, b):
    if a <= b:
        assert dac_write(CFG, a) <= dac_write(CFG, b)


def test_dac_array_matches_scalar():
    v = np.linspace(-1, 11, 997)
    np.testing.assert_array_equal(dac_write(CFG, v), [dac_write(CFG, float(x)) for x in v])


@given(st.floats(0, 2), st.floats(0, 2))
def test_noiseless_chain_monotone_in_power(p1, p2):
    if p1 <= p2:
        assert read_monitor(CFG, p1) <= read_monitor(CFG, p2)


def test_oversampled_read_averages_noise():
    cfg = SignalChainConfig(detector_noise_sigma=0.01, adc_bits=16, adc_full_scale=2.5, oversample=4096)
    reads = [read_monitor(cfg, 0.3, np.random.default_rng(i)) for i in range(50)]
    assert np.mean(reads) == pytest.approx(0.6, abs=1e-4)
    assert np.std(reads) == pytest.approx(0.01 / 64, rel=0.4)


def test_oversampled_read_ideal_adc():
    cfg = SignalChainConfig(detector_noise_sigma=0.01, adc_bits=None, oversample=16)
    z = np.random.default_rng(1).standard_normal(16)
    assert read_monitor(cfg, 0.3, np.random.default_rng(1)) == pytest.approx(np.mean(0.6 + 0.01 * z), rel=1e-15)
