"""Wiener phase model and AWGN application."""

import math

import numpy as np
import pytest

from qamphase import build_uniform, sample_frame
from qamphase.channel import (
    ChannelParams,
    apply_channel,
    snr_to_osnr_db,
    wiener_phase,
)
from qamphase.framing import build_layout


def _params(**kw):
    base = dict(linewidth_hz=5e4, snr_db=15.0, seed=42, symbol_rate_baud=16e9)
    base.update(kw)
    return ChannelParams(**base)


class TestWienerPhase:
    def test_zero_linewidth_is_all_zero(self):
        phase = wiener_phase(5000, _params(linewidth_hz=0.0))
        assert np.all(phase == 0.0)

    def test_increment_variance_value(self):
        # 2*pi * 50e3 / 16e9
        assert _params().increment_variance == pytest.approx(1.9635e-5, rel=1e-4)

    def test_variance_growth_monte_carlo(self):
        # Var[phi(1000)] ~ 1000 * sigma^2 across independent realizations
        n_real = 4000
        finals = np.empty(n_real)
        for i in range(n_real):
            finals[i] = wiener_phase(1001, _params(seed=i))[1000]
        expected = 1000 * _params().increment_variance
        assert np.var(finals) == pytest.approx(expected, rel=0.05)

    def test_initial_phase_offset(self):
        phase = wiener_phase(100, _params(initial_phase=0.3))
        assert phase[0] == 0.3
        base = wiener_phase(100, _params())
        assert np.allclose(phase - 0.3, base, atol=1e-12)

    def test_random_initial_phase(self):
        p = _params(initial_phase="random")
        phase = wiener_phase(10, p)
        assert -np.pi < phase[0] <= np.pi
        assert phase[0] != 0.0
        assert wiener_phase(10, p)[0] == phase[0]

    def test_needs_at_least_one_symbol(self):
        with pytest.raises(ValueError):
            wiener_phase(0, _params())


class TestApplyChannel:
    def test_identity_channel(self):
        c = build_uniform(16)
        layout = build_layout(100 + 160, 100, 16)
        tx = sample_frame(c, layout, 1).tx_symbols
        real = apply_channel(tx, _params(linewidth_hz=0.0, snr_db=math.inf))
        assert np.array_equal(real.rx_symbols, tx)
        assert real.noise_var == 0.0

    def test_noise_power(self):
        tx = np.ones(1_000_000, dtype=complex)
        real = apply_channel(tx, _params(linewidth_hz=0.0, snr_db=10.0))
        measured = np.mean(np.abs(real.rx_symbols - tx) ** 2)
        assert measured == pytest.approx(0.1, rel=0.01)

    def test_half_turn_rotation(self):
        tx = np.exp(1j * np.linspace(0, 2, 64))
        real = apply_channel(
            tx, _params(snr_db=math.inf), phase=np.full(64, np.pi)
        )
        assert np.allclose(real.rx_symbols, -tx, atol=1e-12)

    def test_snr_round_trip(self):
        c = build_uniform(64)
        layout = build_layout(100 + 500_000 * 2, 100, 2)
        tx = sample_frame(c, layout, 5).tx_symbols
        p = _params(snr_db=17.0)
        real = apply_channel(tx, p)
        resid = real.rx_symbols - tx * np.exp(1j * real.phase)
        ratio = np.mean(np.abs(resid) ** 2) / np.mean(np.abs(tx) ** 2)
        assert ratio == pytest.approx(10 ** (-1.7), rel=0.02)

    def test_phase_path_independent_of_snr(self):
        tx = np.ones(4096, dtype=complex)
        r1 = apply_channel(tx, _params(snr_db=5.0))
        r2 = apply_channel(tx, _params(snr_db=25.0))
        assert np.array_equal(r1.phase, r2.phase)

    def test_phase_override_length_checked(self):
        with pytest.raises(ValueError):
            apply_channel(np.ones(8, dtype=complex), _params(), phase=np.zeros(7))


class TestValidation:
    def test_negative_linewidth_rejected(self):
        with pytest.raises(ValueError):
            _params(linewidth_hz=-1.0)

    def test_bad_symbol_rate_rejected(self):
        with pytest.raises(ValueError):
            _params(symbol_rate_baud=0.0)

    def test_bad_initial_phase_rejected(self):
        with pytest.raises(ValueError):
            _params(initial_phase="maybe")


def test_osnr_helper():
    assert snr_to_osnr_db(20.0, 16e9) == pytest.approx(21.0721, abs=1e-3)
    assert snr_to_osnr_db(20.0, 12.5e9) == pytest.approx(20.0, abs=1e-12)
