"""Bitwise LLRs and the achievable-rate figures computed from them.

LLRs use the standard prior-weighted Gaussian metric

    L_k = ln sum_{x: bit_k=0} P(x) exp(-|y - x|^2 / noise_var)
        - ln sum_{x: bit_k=1} P(x) exp(-|y - x|^2 / noise_var)

evaluated in the log domain.  For square QAM the prior and the metric both
factorize over I and Q, so each bit costs a sum over sqrt(M) per-dimension
levels instead of M points.  Residual phase error is deliberately *not*
folded into noise_var: the mismatch of the Gaussian metric under phase noise
is the effect the simulations measure.

Figures of merit:
    GMI  = H - (1/N) sum_n sum_k log2(1 + exp(-s * L)),  s = +1 for bit 0
    NGMI = 1 - (H - GMI) / m          (so uniform formats give GMI / m)
    AIR  = (1 - pilot_ratio) * GMI

This NGMI normalization is the convention under which the 0.857 pre-FEC
threshold used throughout the sweeps is meaningful; other conventions exist
and are not interchangeable.
"""

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numba import njit

from .constellation import Constellation

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class MetricReport:
    """GMI/NGMI/AIR for one run, with enough context to pair runs."""

    gmi_bits: float
    ngmi: float
    air_bits: float
    n_payload: int
    noise_var_used: float
    config_echo: dict[str, Any]


def _subset_llr(e: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """log(sum over bit-0 members) - log(sum over bit-1 members), per bit.

    ``e`` holds shifted likelihood terms (N, points); ``bits`` the per-point
    labels (points, n_bits).  einsum keeps the reduction order fixed, so
    results are bit-reproducible regardless of worker or thread count.
    """
    ones = bits.astype(float)
    s1 = np.einsum("np,pk->nk", e, ones)
    s0 = np.einsum("np,pk->nk", e, 1.0 - ones)
    with np.errstate(divide="ignore"):
        return np.log(s0) - np.log(s1)


@njit(cache=True)
def _llr_dim_kernel(u, levels, logp, bits, inv_nv):
    n = u.shape[0]
    n_levels = levels.shape[0]
    n_bits = bits.shape[1]
    out = np.empty((n, n_bits))
    a = np.empty(n_levels)
    s0 = np.empty(n_bits)
    s1 = np.empty(n_bits)
    for i in range(n):
        amax = -np.inf
        for k in range(n_levels):
            d = u[i] - levels[k]
            v = -(d * d) * inv_nv + logp[k]
            a[k] = v
            if v > amax:
                amax = v
        for j in range(n_bits):
            s0[j] = 0.0
            s1[j] = 0.0
        for k in range(n_levels):
            e = math.exp(a[k] - amax)
            for j in range(n_bits):
                if bits[k, j]:
                    s1[j] += e
                else:
                    s0[j] += e
        for j in range(n_bits):
            out[i, j] = np.log(s0[j]) - np.log(s1[j])
    return out


def _llr_one_dimension(u: np.ndarray, levels, level_prior, level_bits, noise_var):
    """LLRs of one dimension's bits from its real amplitudes, shape (N, m/2)."""
    return _llr_dim_kernel(
        np.ascontiguousarray(u),
        levels,
        np.log(level_prior),
        level_bits,
        1.0 / noise_var,
    )


def llr(y, constellation: Constellation, noise_var: float) -> np.ndarray:
    """Bitwise LLRs for each symbol in ``y``; shape (N, m), label bit order.

    Positive values favor bit 0.  Magnitudes may be infinite when the noise
    variance is small enough that one bit hypothesis underflows entirely.
    """
    if noise_var <= 0.0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    y = np.atleast_1d(np.asarray(y, dtype=np.complex128))
    half = constellation.level_labels
    out_i = _llr_one_dimension(
        y.real, constellation.levels, constellation.level_prior, half, noise_var
    )
    out_q = _llr_one_dimension(
        y.imag, constellation.levels, constellation.level_prior, half, noise_var
    )
    return np.hstack([out_i, out_q])


def llr_generic(y, points, labels, prior, noise_var: float) -> np.ndarray:
    """LLRs by direct summation over all points; works for any labeled set.

    Intended for constellations without product structure (the square-QAM
    path in ``llr`` is algebraically identical but O(sqrt(M)) per dimension).
    """
    if noise_var <= 0.0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    y = np.atleast_1d(np.asarray(y, dtype=np.complex128))
    points = np.asarray(points, dtype=np.complex128)
    labels = np.asarray(labels, dtype=np.uint8)
    prior = np.asarray(prior, dtype=float)
    a = -(np.abs(y[:, None] - points[None, :]) ** 2) / noise_var + np.log(prior)[None, :]
    mx = a.max(axis=1)
    e = np.exp(a - mx[:, None])
    return _subset_llr(e, labels)


def gmi(llrs: np.ndarray, tx_bits: np.ndarray, entropy_bits: float) -> float:
    """Achievable rate of bit-metric decoding, in bit/QAM symbol.

    Not clamped: deeply negative LLR mismatch at very low SNR can push the
    estimate below zero.
    """
    llrs = np.asarray(llrs, dtype=float)
    tx_bits = np.asarray(tx_bits)
    if llrs.size == 0:
        raise ValueError("cannot estimate GMI from an empty payload")
    if llrs.shape != tx_bits.shape:
        raise ValueError(f"LLR shape {llrs.shape} != bit shape {tx_bits.shape}")
    sign = 1.0 - 2.0 * tx_bits.astype(float)
    penalty = np.logaddexp(0.0, -sign * llrs) / _LN2
    return float(entropy_bits - penalty.sum(axis=1).mean())


def ngmi(gmi_bits: float, entropy_bits: float, bits_per_symbol: int) -> float:
    """Normalized GMI: 1 - (H - GMI)/m."""
    if bits_per_symbol < 2:
        raise ValueError(f"bits_per_symbol must be >= 2, got {bits_per_symbol}")
    return 1.0 - (entropy_bits - gmi_bits) / bits_per_symbol


def air(gmi_bits: float, pilot_ratio: float) -> float:
    """Information rate left after pilot overhead: (1 - r) * GMI."""
    if not 0.0 <= pilot_ratio <= 1.0:
        raise ValueError(f"pilot ratio must be in [0, 1], got {pilot_ratio}")
    return (1.0 - pilot_ratio) * gmi_bits


# Config-echo keys allowed to differ between the two runs of a policy
# comparison: the policy itself and its per-policy tuned loop gains.
_POLICY_KEYS = ("policy", "k1", "k2")


def delta_gmi(report_all: MetricReport, report_pilot_only: MetricReport) -> float:
    """GMI(update at all symbols) - GMI(update at pilots only).

    Both reports must come from runs that differ only in update policy (and
    the gains tuned for it); any other configuration mismatch is rejected.
    """
    a = {k: v for k, v in report_all.config_echo.items() if k not in _POLICY_KEYS}
    b = {k: v for k, v in report_pilot_only.config_echo.items() if k not in _POLICY_KEYS}
    if a != b:
        diff = {k for k in a.keys() | b.keys() if a.get(k) != b.get(k)}
        raise ValueError(f"runs differ beyond update policy: {sorted(diff)}")
    return report_all.gmi_bits - report_pilot_only.gmi_bits


def pilot_noise_var(compensated, tx_symbols, positions) -> float:
    """Data-aided noise variance from pilot error vectors.

    Mean squared error between compensated and transmitted symbols at the
    given reference positions.  Includes any residual phase error, so it
    upper-bounds the additive noise power.
    """
    positions = np.asarray(positions)
    if positions.size == 0:
        raise ValueError("need at least one pilot position")
    err = np.asarray(compensated)[positions] - np.asarray(tx_symbols)[positions]
    return float(np.mean(np.abs(err) ** 2))
