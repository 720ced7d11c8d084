"""Phase comparator, symbol decisions, and the tracking loop."""

import math

import numpy as np
import pytest

from qamphase import (
    ChannelParams,
    PllConfig,
    apply_channel,
    build_layout,
    build_uniform,
    decide,
    phase_comparator,
    pll_run,
    sample_frame,
    solve_shaping_factor,
    wrap_phase,
)
from qamphase.channel import ChannelRealization
from qamphase.cpr import (
    DECISION_MAP,
    HOLD_FREEZE,
    POLICY_PILOT_ONLY,
    decide_index,
)

from oracles import scalar_loop_recurrence

NOISELESS = dict(linewidth_hz=0.0, snr_db=math.inf, seed=0)


def _run_setup(order=16, n_blocks=256, period=16, seed=5, training=100):
    const = build_uniform(order)
    layout = build_layout(training + n_blocks * period, training, period)
    frame = sample_frame(const, layout, seed)
    return const, layout, frame


class TestWrapPhase:
    def test_interval_is_half_open_at_minus_pi(self):
        assert wrap_phase(np.pi) == pytest.approx(np.pi)
        assert wrap_phase(-np.pi) == pytest.approx(np.pi)
        assert wrap_phase(3 * np.pi) == pytest.approx(np.pi)

    def test_identity_inside_interval(self):
        x = np.linspace(-3.14, 3.14, 101)
        assert np.allclose(wrap_phase(x), x, atol=1e-15)

    def test_multiple_turns(self):
        assert wrap_phase(0.3 + 6 * np.pi) == pytest.approx(0.3, abs=1e-12)


class TestPhaseComparator:
    def test_equal_phases(self):
        assert phase_comparator(1 + 1j, 1 + 1j) == 0.0

    def test_known_rotation(self):
        ref = 0.7 - 0.2j
        assert phase_comparator(ref * np.exp(0.1j), ref) == pytest.approx(0.1, abs=1e-12)

    def test_qpsk_decision_flip_geometry(self):
        # truth at pi/4 rotated by 0.9 rad lands nearer the pi*3/4 point;
        # the comparator against that decision reads 1.685 - 2.356 = -0.671
        c = build_uniform(4)
        y = np.exp(1j * (np.pi / 4 + 0.9))
        decision = decide(y, c)
        assert decision == pytest.approx(np.exp(3j * np.pi / 4), abs=1e-12)
        assert phase_comparator(y, decision) == pytest.approx(-0.671, abs=1e-3)

    def test_zero_reference_rejected(self):
        with pytest.raises(ValueError):
            phase_comparator(1 + 1j, 0)


class TestDecide:
    @pytest.mark.parametrize("order", [4, 16, 64, 1024])
    def test_exact_point_maps_to_itself(self, order):
        c = build_uniform(order)
        assert np.array_equal(decide(c.points, c), c.points)

    def test_midpoint_tie_breaks_to_lower_index(self):
        c = build_uniform(16)
        mid = 0.5 * (c.points[0] + c.points[1])
        assert decide(mid, c) == c.points[0]
        assert decide_index(mid, c)[0] == 0

    @pytest.mark.parametrize("order", [4, 16, 64, 256])
    def test_matches_exhaustive_scan(self, order):
        c = build_uniform(order)
        rng = np.random.default_rng(1)
        y = 1.5 * (rng.standard_normal(10_000) + 1j * rng.standard_normal(10_000))
        got = decide_index(y, c)
        # brute-force scan, first minimum wins
        want = np.empty(y.size, dtype=int)
        for i, yv in enumerate(y):
            d = np.abs(yv - c.points)
            want[i] = int(np.argmin(d))
        assert np.array_equal(got, want)

    def test_kernel_decisions_match_decide(self):
        # open loop so the kernel decides on raw received symbols
        const, layout, frame = _run_setup(order=64, n_blocks=64)
        real = apply_channel(frame.tx_symbols, ChannelParams(linewidth_hz=0.0, snr_db=14.0, seed=2))
        trace = pll_run(real, frame, const, PllConfig(k1=0.0, k2=0.0))
        pos = layout.payload_positions
        assert np.array_equal(trace.decided_index[pos], decide_index(real.rx_symbols[pos], const))


class TestLoopDynamics:
    def test_open_loop_leaves_input_untouched(self):
        const, layout, frame = _run_setup()
        real = apply_channel(frame.tx_symbols, ChannelParams(**NOISELESS))
        trace = pll_run(real, frame, const, PllConfig(k1=0.0, k2=0.0))
        assert np.all(trace.phi_hat == 0.0)
        assert np.array_equal(trace.compensated, real.rx_symbols)

    def test_constant_offset_converges(self):
        # all-pilot frame, constant 0.3 rad rotation
        const = build_uniform(16)
        layout = build_layout(100 + 4000, 100, 1)
        frame = sample_frame(const, layout, 5)
        real = apply_channel(
            frame.tx_symbols, ChannelParams(**NOISELESS),
            phase=np.full(layout.total_symbols, 0.3),
        )
        trace = pll_run(real, frame, const, PllConfig(k1=0.01, k2=0.1))
        assert np.all(np.abs(trace.phi_hat[2000:] - 0.3) < 1e-3)

    def test_constant_offset_matches_scalar_recurrence(self):
        # with known references and no noise the loop is a pure recurrence
        const = build_uniform(16)
        layout = build_layout(100 + 500, 100, 1)
        frame = sample_frame(const, layout, 5)
        phase = np.full(layout.total_symbols, 0.3)
        real = apply_channel(frame.tx_symbols, ChannelParams(**NOISELESS), phase=phase)
        trace = pll_run(real, frame, const, PllConfig(k1=0.01, k2=0.1))
        ref = scalar_loop_recurrence(phase, None, 0.01, 0.1)
        assert np.allclose(trace.phi_hat, ref, atol=1e-10)

    def test_frequency_ramp_tracked_by_type2_loop(self):
        const = build_uniform(16)
        layout = build_layout(100 + 60_000, 100, 1)
        frame = sample_frame(const, layout, 5)
        ramp = 1e-4 * np.arange(layout.total_symbols)
        real = apply_channel(frame.tx_symbols, ChannelParams(**NOISELESS), phase=ramp)
        trace = pll_run(real, frame, const, PllConfig(k1=0.01, k2=0.1))
        assert np.all(np.abs(trace.phi_e[-1000:]) < 1e-3)
        # integrator carries the ramp slope
        assert trace.phi_i[-1] == pytest.approx(1e-4, abs=1e-6)
        ref = scalar_loop_recurrence(ramp, None, 0.01, 0.1)
        assert np.allclose(trace.phi_hat, ref, atol=1e-9)

    def test_perfect_start_stays_perfect(self):
        const, layout, frame = _run_setup()
        real = apply_channel(frame.tx_symbols, ChannelParams(**NOISELESS))
        trace = pll_run(real, frame, const, PllConfig(k1=0.01, k2=0.1))
        assert trace.decision_errors == 0
        assert np.all(trace.phi_hat == 0.0)

    def test_causality(self):
        const, layout, frame = _run_setup(order=16, n_blocks=16)
        real = apply_channel(
            frame.tx_symbols,
            ChannelParams(linewidth_hz=5e4, snr_db=15.0, seed=3),
        )
        cfg = PllConfig(k1=0.001, k2=0.05)
        base = pll_run(real, frame, const, cfg)
        k = 150
        tampered = real.rx_symbols.copy()
        tampered[k + 1 :] = 123.0 - 45.0j
        trace2 = pll_run(
            ChannelRealization(real.phase, tampered, real.noise_var), frame, const, cfg
        )
        assert np.array_equal(base.phi_hat[: k + 2], trace2.phi_hat[: k + 2])

    def test_rotation_equivariance_on_all_pilot_frame(self):
        const = build_uniform(16)
        layout = build_layout(100 + 900, 100, 1)
        frame = sample_frame(const, layout, 5)
        real = apply_channel(
            frame.tx_symbols, ChannelParams(linewidth_hz=1e4, snr_db=20.0, seed=8)
        )
        theta = 1.234
        base = pll_run(real, frame, const, PllConfig(k1=0.01, k2=0.1))
        rotated = ChannelRealization(
            real.phase, real.rx_symbols * np.exp(1j * theta), real.noise_var
        )
        shifted = pll_run(
            rotated, frame, const, PllConfig(k1=0.01, k2=0.1, initial_estimate=theta)
        )
        assert np.allclose(shifted.compensated, base.compensated, atol=1e-9)
        assert np.allclose(shifted.phi_hat - theta, base.phi_hat, atol=1e-9)

    def test_length_mismatch_rejected(self):
        const, layout, frame = _run_setup()
        real = apply_channel(frame.tx_symbols[:-1], ChannelParams(**NOISELESS))
        with pytest.raises(ValueError):
            pll_run(real, frame, const, PllConfig(k1=0.01, k2=0.1))


class TestPolicies:
    def test_policies_coincide_on_all_pilot_frame(self):
        const = build_uniform(64)
        layout = build_layout(100 + 2000, 100, 1)
        frame = sample_frame(const, layout, 5)
        real = apply_channel(
            frame.tx_symbols, ChannelParams(linewidth_hz=5e4, snr_db=18.0, seed=4)
        )
        t_all = pll_run(real, frame, const, PllConfig(k1=0.001, k2=0.05))
        t_po = pll_run(
            real, frame, const, PllConfig(k1=0.001, k2=0.05, policy=POLICY_PILOT_ONLY)
        )
        assert np.array_equal(t_all.phi_hat, t_po.phi_hat)
        assert np.array_equal(t_all.compensated, t_po.compensated)

    def test_pilot_only_updates_only_at_references(self):
        const, layout, frame = _run_setup(order=16, n_blocks=64)
        real = apply_channel(
            frame.tx_symbols, ChannelParams(linewidth_hz=5e4, snr_db=18.0, seed=4)
        )
        trace = pll_run(
            real, frame, const, PllConfig(k1=0.001, k2=0.05, policy=POLICY_PILOT_ONLY)
        )
        assert np.all(trace.phi_e[layout.payload_positions] == 0.0)
        # flywheel: estimate advances by the held integrator between pilots
        inside = layout.payload_positions
        inside = inside[inside < layout.total_symbols - 1]
        steps = trace.phi_hat[inside + 1] - trace.phi_hat[inside]
        assert np.allclose(steps, trace.phi_i[inside], atol=1e-15)

    def test_freeze_holds_estimate_between_pilots(self):
        const, layout, frame = _run_setup(order=16, n_blocks=64)
        real = apply_channel(
            frame.tx_symbols, ChannelParams(linewidth_hz=5e4, snr_db=18.0, seed=4)
        )
        trace = pll_run(
            real,
            frame,
            const,
            PllConfig(
                k1=0.001, k2=0.05, policy=POLICY_PILOT_ONLY, pilot_only_hold=HOLD_FREEZE
            ),
        )
        inside = layout.payload_positions
        inside = inside[inside < layout.total_symbols - 1]
        assert np.all(trace.phi_hat[inside + 1] == trace.phi_hat[inside])

    def test_map_decisions_match_prior_biased_scan(self):
        const = solve_shaping_factor(64, 4.347)
        layout = build_layout(100 + 320, 100, 16)
        frame = sample_frame(const, layout, 9)
        real = apply_channel(
            frame.tx_symbols, ChannelParams(linewidth_hz=0.0, snr_db=10.0, seed=4)
        )
        trace = pll_run(
            real, frame, const,
            PllConfig(k1=0.0, k2=0.0, decision_rule=DECISION_MAP),
        )
        pos = layout.payload_positions
        # brute force MAP: minimize |y-x|^2 - noise_var*ln P(x)
        cost_bias = -real.noise_var * np.log(const.prior)
        y = real.rx_symbols[pos]
        want = np.argmin(np.abs(y[:, None] - const.points[None, :]) ** 2 + cost_bias, axis=1)
        assert np.array_equal(trace.decided_index[pos], want)
        # and they must differ from plain ML somewhere at this noise level
        ml = decide_index(y, const)
        assert np.any(ml != want)


class TestConfigValidation:
    def test_negative_gains_rejected(self):
        with pytest.raises(ValueError):
            PllConfig(k1=-0.1, k2=0.1)

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError):
            PllConfig(k1=0.1, k2=0.1, policy="sometimes")

    def test_unknown_hold_rejected(self):
        with pytest.raises(ValueError):
            PllConfig(k1=0.1, k2=0.1, pilot_only_hold="meh")

    def test_unknown_decision_rule_rejected(self):
        with pytest.raises(ValueError):
            PllConfig(k1=0.1, k2=0.1, decision_rule="genie")
