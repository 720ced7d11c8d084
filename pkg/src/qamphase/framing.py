"""Frame construction: training preamble, periodic pilots, shaped payload.

A frame starts with a known training block (PLL acquisition), after which
every P-th symbol is a pilot and the rest carry payload drawn i.i.d. from the
constellation prior.  Pilot ratios are restricted to unit fractions 1/P so
the achieved ratio is exact.  Pilot and training symbols are pseudo-random
unit-amplitude QPSK (phases +/-pi/4, +/-3pi/4), which preserves the frame's
average power and gives the phase tracker an unambiguous reference.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .constellation import Constellation
from .seeding import TAG_PAYLOAD, TAG_PILOT, rng_for

DEFAULT_TRAINING_LEN = 100

_QPSK_PILOTS = np.exp(1j * np.pi * np.array([0.25, 0.75, -0.75, -0.25]))


class LayoutError(ValueError):
    """Frame layout request violates the pilot grid rules."""


@dataclass(frozen=True)
class FrameLayout:
    """Index bookkeeping for one frame.

    training, pilot and payload index sets partition [0, total_symbols).
    """

    total_symbols: int
    training_len: int
    pilot_period: int
    pilot_positions: np.ndarray
    payload_positions: np.ndarray

    @property
    def pilot_ratio(self) -> float:
        return 1.0 / self.pilot_period

    @property
    def training_positions(self) -> np.ndarray:
        return np.arange(self.training_len)

    @property
    def reference_mask(self) -> np.ndarray:
        """True where the receiver knows the transmitted symbol."""
        mask = np.zeros(self.total_symbols, dtype=bool)
        mask[: self.training_len] = True
        mask[self.pilot_positions] = True
        return mask


@dataclass(frozen=True)
class Frame:
    """A transmitted symbol sequence together with its payload bits."""

    layout: FrameLayout
    tx_symbols: np.ndarray
    tx_bits: np.ndarray
    tx_point_index: np.ndarray
    seed: int


def as_unit_fraction(ratio: float | str | Fraction) -> int:
    """Parse a pilot ratio into its period P, insisting on ratio == 1/P.

    Accepts "1/16", 0.0625 or Fraction(1, 16).  Values are taken at their
    exact rational value, so floats such as 0.05 (not exactly 1/20 in
    binary) are rejected with the nearest 1/P suggested; write the string
    form for periods that are not powers of two.
    """
    frac = Fraction(ratio)
    if frac <= 0 or frac > 1:
        raise LayoutError(f"pilot ratio must lie in (0, 1], got {ratio}")
    if frac.numerator != 1:
        nearest = max(round(1 / float(frac)), 1)
        raise LayoutError(
            f"pilot ratio {ratio} is not exactly a unit fraction; "
            f"nearest is 1/{nearest}"
        )
    return frac.denominator


def build_layout(
    total: int, training_len: int, pilot_period: int
) -> FrameLayout:
    """Pilots at every P-th post-training position, starting at the first.

    The post-training span must be a multiple of P so the achieved pilot
    ratio is exactly 1/P.
    """
    if pilot_period < 1:
        raise LayoutError(f"pilot period must be >= 1, got {pilot_period}")
    if training_len < 0:
        raise LayoutError(f"training length must be >= 0, got {training_len}")
    if total <= training_len + pilot_period:
        raise LayoutError(
            f"total={total} leaves no room after training={training_len} "
            f"and one pilot period of {pilot_period}"
        )
    post = total - training_len
    if post % pilot_period:
        suggestion = training_len + (post // pilot_period) * pilot_period
        raise LayoutError(
            f"post-training span {post} is not a multiple of P={pilot_period}; "
            f"use total={suggestion} for an exact 1/{pilot_period} pilot ratio"
        )
    pilots = np.arange(training_len, total, pilot_period)
    mask = np.zeros(total, dtype=bool)
    mask[:training_len] = True
    mask[pilots] = True
    payload = np.flatnonzero(~mask)
    return FrameLayout(
        total_symbols=total,
        training_len=training_len,
        pilot_period=pilot_period,
        pilot_positions=pilots,
        payload_positions=payload,
    )


def sample_frame(
    constellation: Constellation, layout: FrameLayout, seed: int
) -> Frame:
    """Draw a frame: payload by inverse-CDF on the prior, pilots QPSK.

    Payload and pilot values come from separate substreams of ``seed``, so
    the payload sequence does not depend on the pilot grid density.
    """
    pilot_rng = rng_for(seed, TAG_PILOT)
    payload_rng = rng_for(seed, TAG_PAYLOAD)

    tx = np.empty(layout.total_symbols, dtype=np.complex128)
    n_reference = layout.training_len + layout.pilot_positions.size
    ref_values = _QPSK_PILOTS[pilot_rng.integers(0, 4, size=n_reference)]
    tx[: layout.training_len] = ref_values[: layout.training_len]
    tx[layout.pilot_positions] = ref_values[layout.training_len :]

    cdf = np.cumsum(constellation.prior)
    cdf[-1] = 1.0  # guard against cumulative rounding
    u = payload_rng.random(layout.payload_positions.size)
    point_index = np.searchsorted(cdf, u, side="right").astype(np.int64)
    tx[layout.payload_positions] = constellation.points[point_index]

    return Frame(
        layout=layout,
        tx_symbols=tx,
        tx_bits=constellation.labels[point_index],
        tx_point_index=point_index,
        seed=seed,
    )
