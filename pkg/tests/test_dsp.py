import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bearxai import dsp
from bearxai.dsp import (
    BearingGeometry,
    OrderGrid,
    band_indices,
    compute_fault_orders,
    envelope_order_spectrum,
    hilbert_envelope,
    make_sub_bands,
)
from bearxai.errors import UsageError
from bearxai.synthgen import SynthConfig, generate_sample, sample_rng

from oracles import analytic_oracle, envelope_spectrum_oracle

DATA = Path(__file__).parent / "data"


# ------------------------------------------------------------ fault orders


def test_fault_orders_zero_angle():
    g = BearingGeometry(n_rollers=8, inner_diameter=1.0, outer_diameter=4.0, load_angle=0.0)
    fo = compute_fault_orders(g)
    assert fo.bpfo_order == pytest.approx(3.0, abs=1e-12)
    assert fo.bpfi_order == pytest.approx(5.0, abs=1e-12)


def test_fault_orders_right_angle_collapse():
    g = BearingGeometry(n_rollers=8, inner_diameter=1.3, outer_diameter=4.1,
                        load_angle=math.pi / 2)
    fo = compute_fault_orders(g)
    assert fo.bpfo_order == pytest.approx(4.0, abs=1e-12)
    assert fo.bpfi_order == pytest.approx(4.0, abs=1e-12)


def test_default_geometry_matches_reported_peaks():
    # 3.05 outer, "around 4.9" inner; with 8 rollers the two must sum to 8
    fo = compute_fault_orders(BearingGeometry())
    assert fo.bpfo_order == pytest.approx(3.05, abs=1e-12)
    assert fo.bpfi_order == pytest.approx(4.9, abs=0.06)


@pytest.mark.parametrize("kwargs", [
    dict(inner_diameter=4.0, outer_diameter=4.0),
    dict(inner_diameter=5.0, outer_diameter=4.0),
    dict(n_rollers=0),
    dict(shaft_freq=0.0),
])
def test_geometry_rejects_invalid(kwargs):
    with pytest.raises(UsageError):
        BearingGeometry(**kwargs)


@given(n=st.integers(1, 40), ratio=st.floats(0.01, 0.99),
       phi=st.floats(0, math.pi / 2 - 1e-3))
def test_fault_orders_sum_to_roller_count(n, ratio, phi):
    fo = compute_fault_orders(BearingGeometry(n_rollers=n, inner_diameter=ratio,
                                              outer_diameter=1.0, load_angle=phi))
    assert fo.bpfo_order + fo.bpfi_order == pytest.approx(n, rel=1e-12)
    assert fo.bpfi_order > fo.bpfo_order > 0


# ---------------------------------------------------------------- Hilbert


def test_envelope_of_pure_tone_is_flat():
    n = 1024
    t = np.arange(n) / n
    env = hilbert_envelope(np.cos(2 * np.pi * 5 * t))
    assert np.max(np.abs(env[50:-50] - 1.0)) < 1e-2


def test_envelope_demodulates_am():
    n = 1024
    t = np.arange(n) / n
    mod = 1 + 0.5 * np.cos(2 * np.pi * 3 * t)
    env = hilbert_envelope(mod * np.cos(2 * np.pi * 50 * t))
    assert np.max(np.abs(env[50:-50] - mod[50:-50])) < 5e-2


@pytest.mark.parametrize("n", [4, 5, 64, 257, 1000])
def test_analytic_signal_matches_direct_dft(n):
    x = np.random.default_rng(n).normal(size=n)
    ref = np.abs(analytic_oracle(x))
    np.testing.assert_allclose(hilbert_envelope(x), ref, rtol=0, atol=1e-9)


def test_analytic_real_part_is_input():
    x = np.random.default_rng(3).normal(size=300)
    np.testing.assert_allclose(dsp.analytic_signal(x).real, x, atol=1e-12)


@pytest.mark.parametrize("bad", [[], [1.0], [1.0, 2.0, 3.0]])
def test_hilbert_rejects_short(bad):
    with pytest.raises(UsageError):
        hilbert_envelope(np.asarray(bad))


@settings(max_examples=30, deadline=None)
@given(a=st.floats(1e-3, 1e3), seed=st.integers(0, 2**32 - 1))
def test_hilbert_envelope_scale_equivariant(a, seed):
    x = np.random.default_rng(seed).normal(size=128)
    np.testing.assert_allclose(hilbert_envelope(a * x), a * hilbert_envelope(x),
                               rtol=1e-9, atol=1e-12)


# ------------------------------------------------------- order spectrum


def _impulse_signal(fs, fr, order, n, carrier=1500.0, seed=0, noise=0.05):
    rng = np.random.default_rng(seed)
    t = np.arange(n) / fs
    x = np.zeros(n)
    period = 1.0 / (order * fr)
    for t0 in np.arange(0.0, t[-1], period):
        i0 = int(math.ceil(t0 * fs))
        tau = t[i0:] - t0
        x[i0:] += np.exp(-600 * tau) * np.sin(2 * np.pi * carrier * tau)
    return x + rng.normal(0, noise, n)


def _peak_near(amps, grid, order, radius=3):
    k = grid.nearest_bin(order)
    lo = max(0, k - radius)
    return lo + int(np.argmax(amps[lo : k + radius + 1])), k


def test_impulse_train_harmonics():
    fs, fr = 6400.0, 25.0
    grid = OrderGrid()
    spec = envelope_order_spectrum(_impulse_signal(fs, fr, 3.0, 6400), fs, fr, grid)
    a = spec.amplitudes
    med = np.median(a)
    for h in (3.0, 6.0, 9.0):
        peak, k = _peak_near(a, grid, h)
        assert abs(peak - k) <= 1
        assert a[peak] >= a[peak - 1] and a[peak] >= a[peak + 1]
        assert a[peak] > 10 * med


def test_pure_tone_has_no_order_content():
    fs, fr, n = 6400.0, 25.0, 6400
    t = np.arange(n) / fs
    spec = envelope_order_spectrum(np.sin(2 * np.pi * 1234.5 * t), fs, fr)
    c = spec.grid.centers
    a = spec.amplitudes[(c > 0.5) & (c <= 30)]
    # what remains is rounding residue, where a max/median ratio is meaningless
    assert a.max() < 1e-6


def test_spectrum_is_nonnegative_and_sized():
    x = np.random.default_rng(1).normal(size=2048)
    spec = envelope_order_spectrum(x, 4096.0, 20.0, OrderGrid(n_bins=512))
    assert spec.amplitudes.shape == (512,)
    assert np.all(spec.amplitudes >= 0)


def test_spectrum_preconditions():
    x = np.zeros(1024)
    with pytest.raises(UsageError):
        envelope_order_spectrum(x, 1000.0, 25.0)  # order 30 at 25 Hz needs fs > 1500
    with pytest.raises(UsageError):
        envelope_order_spectrum(x, 6400.0, 0.0)
    with pytest.raises(UsageError):
        envelope_order_spectrum(np.zeros(100), 6400.0, 25.0)


@pytest.mark.parametrize("carrier", [1200.0, 1800.0, 2400.0])
def test_peak_location_independent_of_carrier(carrier):
    fs, fr = 6400.0, 25.0
    grid = OrderGrid()
    spec = envelope_order_spectrum(_impulse_signal(fs, fr, 3.05, 6400, carrier=carrier),
                                   fs, fr, grid)
    peak, k = _peak_near(spec.amplitudes, grid, 3.05)
    assert abs(peak - k) <= 1


def _golden_signal():
    cfg = SynthConfig(noise_std=0.2, severity_spread=0.0, speed_spread=0.05)
    return generate_sample(dsp.HealthClass.OUTER_RACE, cfg, sample_rng(7, dsp.HealthClass.OUTER_RACE, 0)), cfg


def test_spectrum_matches_frozen_oracle_golden():
    (x, fr), cfg = _golden_signal()
    golden = np.load(DATA / "golden_outer_spectrum.npy")
    spec = envelope_order_spectrum(x, cfg.sample_rate, fr)
    np.testing.assert_allclose(spec.amplitudes, golden, rtol=0, atol=1e-6)


@pytest.mark.slow
def test_golden_reproduces_from_oracle():
    (x, fr), cfg = _golden_signal()
    grid = OrderGrid()
    ref = envelope_spectrum_oracle(x, cfg.sample_rate, fr, grid.centers, dsp._fft_length(len(x)))
    golden = np.load(DATA / "golden_outer_spectrum.npy")
    np.testing.assert_allclose(ref, golden, rtol=0, atol=1e-9)


# -------------------------------------------------------------- sub-bands


@pytest.mark.parametrize("fc, expected", [
    (4.9, [(4.655, 5.145), (9.31, 10.29), (13.965, 15.435)]),
    (3.05, [(2.8975, 3.2025), (5.795, 6.405), (8.6925, 9.6075)]),
])
def test_sub_band_arithmetic(fc, expected):
    sb = make_sub_bands(fc, 0.05)
    assert len(sb) == 3
    for (lo, hi), (elo, ehi) in zip(sb, expected):
        assert lo == pytest.approx(elo, abs=1e-12)
        assert hi == pytest.approx(ehi, abs=1e-12)
    widths = [hi - lo for lo, hi in sb]
    assert widths[0] < widths[1] < widths[2]


@pytest.mark.parametrize("fc, eps", [(4.9, 0.0), (4.9, -0.1), (4.9, 0.3), (9.8, 0.05), (0.0, 0.05)])
def test_sub_band_rejects(fc, eps):
    with pytest.raises(UsageError):
        make_sub_bands(fc, eps)


def test_band_indices_enumerated():
    grid = OrderGrid(1536)
    idx = band_indices(dsp.SubBands(bands=((4.655, 5.145),)), grid)
    expect = [i for i in range(1536) if 4.655 <= (i + 0.5) * 0.01953125 <= 5.145]
    assert idx.tolist() == expect
    assert idx[0] == 238 and idx[-1] == 262


def test_band_indices_single_bin():
    grid = OrderGrid(1536)
    c = grid.centers[100]
    idx = band_indices(dsp.SubBands(bands=((c - 0.005, c + 0.005),)), grid)
    assert idx.tolist() == [100]


def test_band_indices_union_without_duplicates():
    grid = OrderGrid(1536)
    a = band_indices(dsp.SubBands(bands=((4.0, 5.0),)), grid)
    b = band_indices(dsp.SubBands(bands=((4.5, 5.5),)), grid)
    both = band_indices(dsp.SubBands(bands=((4.0, 5.0), (4.5, 5.5))), grid)
    assert both.tolist() == sorted(set(a) | set(b))


def test_band_indices_too_coarse():
    with pytest.raises(UsageError):
        band_indices(dsp.SubBands(bands=((4.001, 4.002),)), OrderGrid(64))


@given(fc=st.floats(0.5, 8.3), e1=st.floats(0.001, 0.2), e2=st.floats(0.001, 0.2))
def test_band_indices_monotone_in_epsilon(fc, e1, e2):
    lo, hi = sorted((e1, e2))
    grid = OrderGrid(1536)
    try:
        small = band_indices(make_sub_bands(fc, lo), grid)
    except UsageError:
        return  # narrower band selects nothing
    big = band_indices(make_sub_bands(fc, hi), grid)
    assert set(small) <= set(big)
