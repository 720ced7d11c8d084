"""Square-QAM constellations with Gray labels and Maxwell-Boltzmann shaped priors.

Shaping acts independently on the I and Q amplitudes: each dimension carries a
discrete Maxwell-Boltzmann distribution P(a) proportional to exp(-lam * a^2)
over the odd-integer amplitude grid, which makes the joint prior proportional
to exp(-lam * |x|^2).  The shaping factor lam is solved by bisection so the
joint entropy hits a requested target, then the grid is rescaled to unit
average power under the solved prior.

Bit labels are binary-reflected Gray codes applied per dimension (the first
half of each label addresses the I amplitude, the second half the Q
amplitude).  GMI results at low SNR depend on this choice of labeling.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64, 256, 1024)

# Bisection stop criterion on per-dimension entropy, in bits.
_LAMBDA_TOL_BITS = 1e-6
_MAX_BISECT_ITER = 500


class ShapingError(ValueError):
    """Requested shaping target cannot be realized."""


@dataclass(frozen=True)
class ShapingSpec:
    """Net information rate plus FEC overhead bookkeeping for a shaped format.

    Implies a source entropy of ``information_rate + base_bits *
    (1 - code_rate)``: the net rate carried after FEC plus the redundancy
    the code will occupy.
    """

    information_rate: float
    base_bits: int
    code_rate: float

    def __post_init__(self):
        if not 0.0 < self.code_rate <= 1.0:
            raise ShapingError(f"code_rate must be in (0, 1], got {self.code_rate}")
        if self.information_rate <= 0.0:
            raise ShapingError("information_rate must be positive")
        if self.base_bits < 2:
            raise ShapingError("base_bits must be at least 2")


@dataclass(frozen=True)
class Constellation:
    """A square QAM constellation with per-point priors and Gray bit labels.

    Points are indexed as ``i_level * levels.size + q_level`` with levels in
    ascending amplitude order, so the per-dimension structure used by the
    demapper and the symbol decision is recoverable from the index.

    Fields:
        order: number of points M.
        points: complex array of length M, unit average power under ``prior``.
        labels: uint8 array (M, m) of bit labels, m = log2(M); the first m/2
            bits Gray-code the I level, the last m/2 the Q level.
        prior: per-point probabilities, product of identical per-dimension
            distributions.
        entropy_bits: source entropy -sum(P log2 P) in bit/QAM symbol.
        shaping_factor: Maxwell-Boltzmann lam on the odd-integer grid
            (0 for uniform).  lam refers to the grid before power rescaling.
        levels: the sqrt(M) per-dimension amplitudes after power rescaling.
        level_prior: per-dimension distribution over ``levels``.
        level_labels: uint8 array (sqrt(M), m/2) Gray labels of the levels.
    """

    order: int
    points: np.ndarray
    labels: np.ndarray
    prior: np.ndarray
    entropy_bits: float
    shaping_factor: float
    levels: np.ndarray
    level_prior: np.ndarray
    level_labels: np.ndarray

    @property
    def bits_per_symbol(self) -> int:
        return int(round(math.log2(self.order)))

    def label_strings(self) -> list[str]:
        """Labels as '0'/'1' strings, index-aligned with ``points``."""
        return ["".join(str(int(b)) for b in row) for row in self.labels]

    def to_json(self, indent: int | None = 2) -> str:
        """Serialize points, labels and priors for plotting and debugging."""
        doc = {
            "order": self.order,
            "entropy_bits": self.entropy_bits,
            "shaping_factor": self.shaping_factor,
            "points": [[float(p.real), float(p.imag)] for p in self.points],
            "labels": self.label_strings(),
            "prior": [float(p) for p in self.prior],
        }
        return json.dumps(doc, indent=indent)


def entropy_bits_of(prob: np.ndarray) -> float:
    """Shannon entropy in bits; zero-probability entries contribute zero."""
    p = np.asarray(prob, dtype=float)
    terms = np.where(p > 0.0, p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
    return float(-np.sum(terms))


def _gray_codes(n_levels: int) -> np.ndarray:
    """Binary-reflected Gray labels, one row per level index, MSB first."""
    width = int(round(math.log2(n_levels)))
    out = np.zeros((n_levels, width), dtype=np.uint8)
    for k in range(n_levels):
        g = k ^ (k >> 1)
        for j in range(width):
            out[k, j] = (g >> (width - 1 - j)) & 1
    return out


def _pam_amplitudes(n_levels: int) -> np.ndarray:
    """Odd-integer amplitudes -(L-1), ..., -1, +1, ..., +(L-1)."""
    return 2.0 * np.arange(n_levels) - (n_levels - 1)


def _pam_prior(amps: np.ndarray, lam: float) -> np.ndarray:
    # Shift exponents so the innermost levels have weight 1; keeps the
    # normalization finite for any lam >= 0.
    w = np.exp(-lam * (amps**2 - 1.0))
    return w / w.sum()


def _check_order(order: int) -> int:
    if order not in SUPPORTED_ORDERS:
        raise ShapingError(
            f"unsupported QAM order {order}; expected one of {SUPPORTED_ORDERS}"
        )
    return int(round(math.sqrt(order)))


def _assemble(order: int, lam: float) -> Constellation:
    n_levels = _check_order(order)
    amps = _pam_amplitudes(n_levels)
    level_prior = _pam_prior(amps, lam)
    if level_prior.min() <= 0.0:
        raise ShapingError(
            f"shaping factor {lam} drives outer-point priors below float precision"
        )

    # Unit average power under the prior: E|x|^2 = 2 * E[a^2] per dimension.
    scale = 1.0 / math.sqrt(2.0 * float(np.dot(level_prior, amps**2)))
    levels = amps * scale

    i_idx, q_idx = np.divmod(np.arange(order), n_levels)
    points = levels[i_idx] + 1j * levels[q_idx]
    prior = level_prior[i_idx] * level_prior[q_idx]

    level_labels = _gray_codes(n_levels)
    labels = np.hstack([level_labels[i_idx], level_labels[q_idx]])

    return Constellation(
        order=order,
        points=points,
        labels=labels,
        prior=prior,
        entropy_bits=entropy_bits_of(prior),
        shaping_factor=lam,
        levels=levels,
        level_prior=level_prior,
        level_labels=level_labels,
    )


def build_uniform(order: int) -> Constellation:
    """Equiprobable Gray-labeled square QAM with unit average power."""
    _check_order(order)
    return _assemble(order, 0.0)


def target_entropy(spec: ShapingSpec) -> float:
    """Source entropy needed to carry ``information_rate`` through the FEC.

    Raises ShapingError when the target exceeds the base constellation's
    bits (no distribution on the base grid can reach it) or is at most
    2 bits (below the shaped-QAM floor of an equiprobable QPSK skeleton).
    """
    h = spec.information_rate + spec.base_bits * (1.0 - spec.code_rate)
    if h > spec.base_bits:
        raise ShapingError(
            f"target entropy {h:.4f} exceeds base constellation bits {spec.base_bits}"
        )
    if h <= 2.0:
        raise ShapingError(f"target entropy {h:.4f} is at or below the 2-bit floor")
    return h


def solve_shaping_factor(order: int, target_h: float) -> Constellation:
    """Bisection on the per-dimension Maxwell-Boltzmann factor.

    Per-dimension entropy is strictly decreasing in lam from log2(sqrt(M))
    down to 1 bit, so the joint entropy spans (2, m) and a plain bisection
    over [0, lam_max] is guaranteed to converge.
    """
    n_levels = _check_order(order)
    m = int(round(math.log2(order)))
    if not 2.0 < target_h < m:
        raise ShapingError(
            f"target entropy {target_h} outside achievable range (2, {m}) "
            f"for {order}-QAM"
        )
    amps = _pam_amplitudes(n_levels)
    target_dim = target_h / 2.0

    def dim_entropy(lam: float) -> float:
        return entropy_bits_of(_pam_prior(amps, lam))

    hi = 0.01
    while dim_entropy(hi) > target_dim:
        hi *= 2.0
        if hi > 1e6:
            raise ShapingError(f"failed to bracket shaping factor for H={target_h}")
    lo = 0.0
    lam = hi
    for _ in range(_MAX_BISECT_ITER):
        lam = 0.5 * (lo + hi)
        err = dim_entropy(lam) - target_dim
        if abs(err) < _LAMBDA_TOL_BITS:
            break
        if err > 0.0:
            lo = lam
        else:
            hi = lam
    return _assemble(order, lam)


def information_rate(entropy_bits: float, base_bits: int, code_rate: float) -> float:
    """Net rate after FEC redundancy: H - m*(1 - R_c)."""
    return entropy_bits - base_bits * (1.0 - code_rate)
