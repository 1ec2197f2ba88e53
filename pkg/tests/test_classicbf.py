import itertools
import math

import numpy as np
import pytest

from csifb import classicbf as bf
from csifb.chanmodel import steering_vector


def _phase_grid_beams(n_t, levels):
    """Exhaustive unit-modulus candidates with `levels` phases per antenna."""
    phases = 2 * np.pi * np.arange(levels) / levels
    combos = np.array(list(itertools.product(phases, repeat=n_t)))
    return np.exp(1j * combos)


def test_rate_params_validation():
    with pytest.raises(ValueError):
        bf.RateParams(rho=0.0, alpha=0.1, n_t=4)
    with pytest.raises(ValueError):
        bf.RateParams(rho=float("inf"), alpha=0.1, n_t=4)
    with pytest.raises(ValueError):
        bf.RateParams(rho=1.0, alpha=1.5, n_t=4)


def test_conj_phase_real_positive():
    v = bf.conj_phase_bf(np.array([1.0, 2.0, 0.5]))
    assert np.allclose(v, np.ones(3))


def test_conj_phase_complex_example():
    v = bf.conj_phase_bf(np.array([1.0, 1.0j]))
    assert np.allclose(v, [1.0, 1.0j])
    gain = abs(np.vdot(np.array([1.0, 1.0j]), v))
    assert gain == pytest.approx(2.0)


def test_conj_phase_zero_entry_maps_to_phase_zero():
    v = bf.conj_phase_bf(np.array([0.0, 1.0j]))
    assert v[0] == pytest.approx(1.0)


def test_conj_phase_beats_exhaustive_grid():
    # N_t=3, 16 levels per antenna: 4096 candidates
    rng = np.random.default_rng(0)
    beams = _phase_grid_beams(3, 16)
    for _ in range(5):
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        opt = np.sum(np.abs(h))
        v = bf.conj_phase_bf(h)
        assert abs(np.vdot(h, v)) == pytest.approx(opt, rel=1e-12)
        grid_gains = np.abs(beams @ np.conj(h))
        assert np.max(grid_gains) <= opt + 1e-9


def test_spectral_efficiency_arithmetic():
    h = steering_vector(0.0, 4, 0.5)
    params = bf.RateParams(rho=10.0, alpha=0.0, n_t=4)
    se = bf.spectral_efficiency(h, np.ones(4), params)
    assert se == pytest.approx(math.log2(1 + 40.0))


def test_spectral_efficiency_vanishes_at_zero_snr():
    h = np.array([1.0, 1.0j])
    for rho in (1e-6, 1e-9):
        params = bf.RateParams(rho=rho, alpha=0.0, n_t=2)
        assert bf.spectral_efficiency(h, bf.conj_phase_bf(h), params) < 1e-4


def test_spectral_efficiency_monotone():
    rng = np.random.default_rng(1)
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v1 = bf.conj_phase_bf(h)
    v2 = np.exp(1j * (np.angle(h) + 0.3))  # same gain, rotated
    v3 = np.ones(4)
    p_lo = bf.RateParams(rho=1.0, alpha=0.0, n_t=4)
    p_hi = bf.RateParams(rho=5.0, alpha=0.0, n_t=4)
    assert bf.spectral_efficiency(h, v1, p_hi) > bf.spectral_efficiency(h, v1, p_lo)
    assert bf.spectral_efficiency(h, v1, p_lo) == pytest.approx(
        bf.spectral_efficiency(h, v2, p_lo), rel=1e-12)
    assert bf.spectral_efficiency(h, v1, p_lo) >= bf.spectral_efficiency(h, v3, p_lo)


def test_sinr_reduces_to_single_cell_when_alpha_zero():
    rng = np.random.default_rng(2)
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v = bf.conj_phase_bf(h)
    params = bf.RateParams(rho=7.0, alpha=0.0, n_t=4)
    s = bf.sinr(h, g, v, params)
    z = np.vdot(h, v)
    assert s == pytest.approx(7.0 * abs(z) ** 2 / 4)


def test_sinr_with_orthogonal_interference():
    h = np.array([1.0, 1.0])
    g = np.array([1.0, -1.0])
    v = np.ones(2)
    params = bf.RateParams(rho=10.0, alpha=0.5, n_t=2)
    s = bf.sinr(h, g, v, params)
    assert s == pytest.approx(10.0 * 4 / 2)  # g^H w = 0


def test_sinr_monotone_decreasing_in_alpha():
    rng = np.random.default_rng(3)
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    v = bf.conj_phase_bf(h)
    values = [bf.sinr(h, g, v, bf.RateParams(rho=10.0, alpha=a, n_t=4))
              for a in (0.0, 0.25, 0.5, 1.0)]
    assert all(a >= b for a, b in zip(values, values[1:]))


def test_high_sinr_log_approximation():
    # |log2(1+s) - log2(s)| = log2(1 + 1/s) < 0.015 for s >= 100
    for s in (100.0, 250.0, 1e4):
        assert abs(math.log2(1 + s) - math.log2(s)) < 0.015


def test_sum_and_mean_rate():
    sinrs = [1.0, 3.0, 7.0]
    assert bf.sum_rate(sinrs) == pytest.approx(1 + 2 + 3)
    assert bf.mean_rate(sinrs) == pytest.approx(2.0)


def test_oracle_matches_conj_phase_at_alpha_zero():
    rng = np.random.default_rng(4)
    for trial in range(5):
        h = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        g = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        params = bf.RateParams(rho=10.0, alpha=0.0, n_t=6)
        res = bf.multicell_bf_oracle(h, g, params, restarts=4, seed=trial)
        conj_obj = abs(np.vdot(h, bf.conj_phase_bf(h))) ** 2 / (6 / 10.0)
        assert res.objective == pytest.approx(conj_obj, rel=1e-6)


def test_oracle_never_below_conj_phase_start():
    rng = np.random.default_rng(5)
    for trial in range(10):
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        g = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        params = bf.RateParams(rho=31.6, alpha=0.5, n_t=4)
        res = bf.multicell_bf_oracle(h, g, params, restarts=3, seed=trial)
        v0 = bf.conj_phase_bf(h)
        start = bf.sinr(h, g, v0, params)
        assert res.objective >= start - 1e-12
        assert np.max(np.abs(np.abs(res.v_rf) - 1.0)) <= 1e-12


def test_oracle_within_slack_of_exhaustive_grid():
    # N_t=3, 12 levels per antenna: 1728 candidates
    rng = np.random.default_rng(6)
    beams = _phase_grid_beams(3, 12)
    for trial in range(5):
        h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        g = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        params = bf.RateParams(rho=10.0, alpha=0.3, n_t=3)
        grid_best = float(np.max(bf.sinr(
            np.broadcast_to(h, beams.shape), np.broadcast_to(g, beams.shape),
            beams, params)))
        res = bf.multicell_bf_oracle(h, g, params, restarts=8, seed=trial)
        assert res.objective >= grid_best * (1.0 - 1e-3)


def test_oracle_bounded_when_interferer_equals_desired():
    # g = h, alpha = 1: objective X/(X + n_t/rho) < 1 for any beam
    rng = np.random.default_rng(7)
    h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    params = bf.RateParams(rho=100.0, alpha=1.0, n_t=4)
    res = bf.multicell_bf_oracle(h, h, params, restarts=4, seed=0)
    assert res.objective < 1.0


def test_bit_accounting_examples():
    total, per = bf.bit_accounting(64, 4, 128)
    assert total == 4 and per == (4,)
    total, per = bf.bit_accounting(32, 4, (16, 16))
    assert total == 32 and per == (16, 16)
    with pytest.raises(ValueError):
        bf.bit_accounting(32, 4, 5)  # 5 does not divide 64
    with pytest.raises(ValueError):
        bf.bit_accounting(32, 4, (16, 7))
