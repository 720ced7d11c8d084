"""Wiener laser phase noise plus AWGN, applied at symbol rate.

The received sequence is r(n) = t(n) * exp(j*phi(n)) + N(n) where phi is a
Wiener process with per-symbol increment variance 2*pi*linewidth/symbol_rate
and N is circular complex Gaussian with total power 10^(-snr_db/10) (the
transmit sequence is assumed to have unit average power).

Phase and additive noise are drawn from separate substreams of the channel
seed: changing snr_db never perturbs the phase path, which keeps SNR sweeps
on a fixed seed smooth and lets paired comparisons share realizations.
"""

import math
from dataclasses import dataclass

import numpy as np

from .seeding import TAG_INIT_PHASE, TAG_NOISE, TAG_PHASE, rng_for

REFERENCE_NOISE_BANDWIDTH_HZ = 12.5e9


@dataclass(frozen=True)
class ChannelParams:
    """Combined-linewidth / SNR description of one channel realization.

    snr_db may be math.inf for a noiseless channel.  initial_phase is the
    value of phi(0); pass "random" to draw it uniformly from (-pi, pi].
    """

    linewidth_hz: float
    snr_db: float
    seed: int
    symbol_rate_baud: float = 16e9
    initial_phase: float | str = 0.0

    def __post_init__(self):
        if self.linewidth_hz < 0.0:
            raise ValueError(f"linewidth must be >= 0, got {self.linewidth_hz}")
        if self.symbol_rate_baud <= 0.0:
            raise ValueError(f"symbol rate must be > 0, got {self.symbol_rate_baud}")
        if isinstance(self.initial_phase, str) and self.initial_phase != "random":
            raise ValueError("initial_phase must be a float or 'random'")

    @property
    def increment_variance(self) -> float:
        """Per-symbol Wiener increment variance 2*pi*linewidth/symbol_rate."""
        return 2.0 * math.pi * self.linewidth_hz / self.symbol_rate_baud

    @property
    def noise_variance(self) -> float:
        """Total complex noise power for unit signal power."""
        if math.isinf(self.snr_db):
            return 0.0
        return 10.0 ** (-self.snr_db / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    phase: np.ndarray
    rx_symbols: np.ndarray
    noise_var: float


def wiener_phase(n_symbols: int, params: ChannelParams) -> np.ndarray:
    """Cumulative sum of i.i.d. Gaussian increments; phi(0) is the start."""
    if n_symbols < 1:
        raise ValueError(f"need at least one symbol, got {n_symbols}")
    if params.initial_phase == "random":
        phi0 = float(rng_for(params.seed, TAG_INIT_PHASE).uniform(-np.pi, np.pi))
    else:
        phi0 = float(params.initial_phase)
    sigma = math.sqrt(params.increment_variance)
    increments = sigma * rng_for(params.seed, TAG_PHASE).standard_normal(n_symbols - 1)
    phase = np.empty(n_symbols)
    phase[0] = phi0
    np.cumsum(increments, out=phase[1:])
    phase[1:] += phi0
    return phase


def apply_channel(
    tx_symbols: np.ndarray,
    params: ChannelParams,
    phase: np.ndarray | None = None,
) -> ChannelRealization:
    """Rotate by the phase path and add circular Gaussian noise.

    ``phase`` overrides the generated Wiener path (same length as the
    transmit sequence); used by tests that force a known rotation.
    """
    tx = np.asarray(tx_symbols, dtype=np.complex128)
    if phase is None:
        phase = wiener_phase(tx.size, params)
    else:
        phase = np.asarray(phase, dtype=float)
        if phase.size != tx.size:
            raise ValueError(
                f"phase length {phase.size} does not match {tx.size} symbols"
            )
    noise_var = params.noise_variance
    rx = tx * np.exp(1j * phase)
    if noise_var > 0.0:
        g = rng_for(params.seed, TAG_NOISE).standard_normal((tx.size, 2))
        rx = rx + math.sqrt(noise_var / 2.0) * (g[:, 0] + 1j * g[:, 1])
    return ChannelRealization(phase=phase, rx_symbols=rx, noise_var=noise_var)


def snr_to_osnr_db(snr_db: float, symbol_rate_baud: float) -> float:
    """Approximate single-polarization OSNR in the 12.5 GHz reference band."""
    return snr_db + 10.0 * math.log10(symbol_rate_baud / REFERENCE_NOISE_BANDWIDTH_HZ)
