"""LLR demapping and the GMI/NGMI/AIR figures."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qamphase import (
    ChannelParams,
    apply_channel,
    build_layout,
    build_uniform,
    sample_frame,
    solve_shaping_factor,
)
from qamphase.metrics import (
    MetricReport,
    air,
    delta_gmi,
    gmi,
    llr,
    llr_generic,
    ngmi,
    pilot_noise_var,
)

from oracles import brute_force_llr, gmi_quadrature

# 48-node Gauss-Hermite values, converged to <1e-5 (64-node cross-check).
QUADRATURE_GMI = {
    (4, 5.0): 1.718389,
    (4, 10.0): 1.993517,
    (4, 15.0): 2.000000,
    (16, 5.0): 1.931578,
    (16, 10.0): 3.163579,
    (16, 15.0): 3.928534,
}

BPSK_POINTS = np.array([1.0 + 0.0j, -1.0 + 0.0j])
BPSK_LABELS = np.array([[0], [1]], dtype=np.uint8)


class TestLlrClosedForms:
    def test_bpsk_uniform(self):
        # antipodal points, unit noise: LLR = 4y/sigma^2
        out = llr_generic([0.5], BPSK_POINTS, BPSK_LABELS, [0.5, 0.5], 1.0)
        assert out[0, 0] == pytest.approx(2.0, abs=1e-12)

    def test_bpsk_symmetry_point(self):
        out = llr_generic([0.0], BPSK_POINTS, BPSK_LABELS, [0.5, 0.5], 1.0)
        assert out[0, 0] == 0.0

    def test_bpsk_prior_only(self):
        out = llr_generic([0.0], BPSK_POINTS, BPSK_LABELS, [0.9, 0.1], 1.0)
        assert out[0, 0] == pytest.approx(math.log(9.0), abs=1e-12)

    def test_non_positive_noise_var_rejected(self):
        c = build_uniform(16)
        with pytest.raises(ValueError):
            llr([0.1 + 0.1j], c, 0.0)
        with pytest.raises(ValueError):
            llr_generic([0.1], BPSK_POINTS, BPSK_LABELS, [0.5, 0.5], -1.0)


class TestLlrOracle:
    def test_four_point_arbitrary_prior_matches_brute_force(self):
        rng = np.random.default_rng(3)
        points = np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j]) / math.sqrt(2)
        labels = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.uint8)
        prior = np.array([0.4, 0.3, 0.2, 0.1])
        y = rng.standard_normal(200) + 1j * rng.standard_normal(200)
        got = llr_generic(y, points, labels, prior, 0.25)
        want = brute_force_llr(y, points, labels, prior, 0.25)
        assert np.max(np.abs(got - want)) < 1e-10

    @pytest.mark.parametrize(
        "const", [build_uniform(16), solve_shaping_factor(64, 4.347)],
        ids=["US-16", "PS-64"],
    )
    def test_factorized_path_matches_generic(self, const):
        rng = np.random.default_rng(4)
        y = 1.2 * (rng.standard_normal(500) + 1j * rng.standard_normal(500))
        fast = llr(y, const, 0.05)
        slow = llr_generic(y, const.points, const.labels, const.prior, 0.05)
        assert np.max(np.abs(fast - slow)) < 1e-10

    def test_sign_consistency_at_vanishing_noise(self):
        const = solve_shaping_factor(64, 4.347)
        out = llr(const.points, const, 1e-9)
        signs_ok = np.where(const.labels == 0, out > 0, out < 0)
        assert np.all(signs_ok)
        assert np.min(np.abs(out)) > 1e3


class TestGmi:
    def test_perfect_llrs_give_entropy(self):
        bits = np.array([[0, 1], [1, 0], [0, 0]], dtype=np.uint8)
        llrs = np.where(bits == 0, np.inf, -np.inf)
        assert gmi(llrs, bits, 1.75) == 1.75

    def test_zero_llrs_lose_m_bits(self):
        bits = np.zeros((100, 4), dtype=np.uint8)
        assert gmi(np.zeros((100, 4)), bits, 4.0) == pytest.approx(0.0, abs=1e-12)
        assert gmi(np.zeros((100, 4)), bits, 4.347) == pytest.approx(0.347, abs=1e-12)

    def test_empty_payload_rejected(self):
        with pytest.raises(ValueError):
            gmi(np.zeros((0, 4)), np.zeros((0, 4), dtype=np.uint8), 4.0)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            gmi(np.zeros((10, 4)), np.zeros((10, 3), dtype=np.uint8), 4.0)

    @pytest.mark.slow
    @pytest.mark.parametrize("order,snr_db", sorted(QUADRATURE_GMI))
    def test_monte_carlo_matches_quadrature(self, order, snr_db):
        const = build_uniform(order)
        layout = build_layout(100 + 1_000_016, 100, 62501)
        frame = sample_frame(const, layout, order * 1000 + int(snr_db))
        real = apply_channel(
            frame.tx_symbols,
            ChannelParams(linewidth_hz=0.0, snr_db=snr_db, seed=int(snr_db)),
        )
        pos = layout.payload_positions
        llrs = llr(real.rx_symbols[pos], const, real.noise_var)
        g = gmi(llrs, frame.tx_bits, const.entropy_bits)
        assert g == pytest.approx(QUADRATURE_GMI[(order, snr_db)], abs=0.02)


class TestNgmi:
    def test_equal_gmi_gives_one(self):
        assert ngmi(4.347, 4.347, 6) == 1.0

    def test_uniform_256_threshold(self):
        assert ngmi(6.856, 8.0, 8) == pytest.approx(0.857, abs=1e-12)

    def test_shaped_1024_threshold(self):
        assert ngmi(6.917, 8.347, 10) == pytest.approx(0.857, abs=1e-12)

    def test_uniform_equals_gmi_over_m(self):
        for g in (0.3, 2.71, 5.9):
            assert ngmi(g, 6.0, 6) == pytest.approx(g / 6.0, abs=1e-12)

    def test_small_m_rejected(self):
        with pytest.raises(ValueError):
            ngmi(1.0, 2.0, 1)


class TestAir:
    def test_endpoints(self):
        assert air(6.8, 0.0) == 6.8
        assert air(6.8, 1.0) == 0.0

    def test_example_value(self):
        assert air(6.8, 0.0625) == pytest.approx(6.375, abs=1e-12)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            air(1.0, -0.1)
        with pytest.raises(ValueError):
            air(1.0, 1.1)

    @settings(max_examples=1000, deadline=None)
    @given(
        g=st.floats(-2.0, 12.0, allow_nan=False),
        r=st.floats(0.0, 1.0, allow_nan=False),
    )
    def test_exact_product_identity(self, g, r):
        assert air(g, r) == (1.0 - r) * g


def _report(policy, k1=0.001, k2=0.05, **over):
    echo = {
        "format": "US-16QAM", "linewidth_hz": 1e4, "snr_db": 15.0,
        "pilot_ratio": 0.0625, "seed": 3, "policy": policy, "k1": k1, "k2": k2,
    }
    echo.update(over)
    return MetricReport(
        gmi_bits=over.get("gmi_bits", 3.2), ngmi=0.9, air_bits=3.0,
        n_payload=1000, noise_var_used=0.03, config_echo=echo,
    )


class TestDeltaGmi:
    def test_identical_runs_give_zero(self):
        a = _report("all")
        b = _report("pilot-only")
        assert delta_gmi(a, b) == 0.0

    def test_gains_may_differ_between_policies(self):
        a = _report("all", k1=0.001, k2=0.05)
        b = _report("pilot-only", k1=0.003, k2=0.2)
        assert delta_gmi(a, b) == 0.0

    def test_other_mismatch_rejected(self):
        a = _report("all")
        b = _report("pilot-only", seed=4)
        with pytest.raises(ValueError, match="seed"):
            delta_gmi(a, b)

    def test_difference_sign(self):
        a = _report("all")
        b = _report("pilot-only")
        b = MetricReport(
            gmi_bits=3.0, ngmi=b.ngmi, air_bits=b.air_bits,
            n_payload=b.n_payload, noise_var_used=b.noise_var_used,
            config_echo=b.config_echo,
        )
        assert delta_gmi(a, b) == pytest.approx(0.2, abs=1e-12)


class TestPilotNoiseVar:
    def test_matches_true_variance_without_phase_error(self):
        const = build_uniform(16)
        layout = build_layout(100 + 200_000, 100, 2)
        frame = sample_frame(const, layout, 6)
        real = apply_channel(
            frame.tx_symbols, ChannelParams(linewidth_hz=0.0, snr_db=13.0, seed=6)
        )
        refs = np.concatenate([np.arange(100), layout.pilot_positions])
        est = pilot_noise_var(real.rx_symbols, frame.tx_symbols, refs)
        assert est == pytest.approx(real.noise_var, rel=0.02)

    def test_empty_positions_rejected(self):
        with pytest.raises(ValueError):
            pilot_noise_var(np.ones(4), np.ones(4), np.array([], dtype=int))
