"""Pilot-assisted decision-directed digital PLL for carrier phase recovery.

Each received symbol is first de-rotated by the current phase estimate.  The
comparator then measures the residual angle against a reference symbol: the
known transmitted value at training/pilot positions, the receiver's own
nearest-point decision elsewhere.  A proportional-plus-integrator loop filter
and an accumulator (the NCO) turn comparator outputs into the estimate for
the *next* symbol, so the loop is strictly causal.

Two update policies are supported.  "all" runs the comparator at every
symbol.  "pilot-only" updates only at training/pilot symbols and holds the
loop in between, either advancing the estimate by the stored integrator
value each symbol (flywheel, the default: the loop keeps its frequency
memory) or freezing the estimate entirely.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .channel import ChannelRealization
from .constellation import Constellation
from .framing import Frame

POLICY_ALL = "all"
POLICY_PILOT_ONLY = "pilot-only"
HOLD_FLYWHEEL = "flywheel"
HOLD_FREEZE = "freeze"
DECISION_ML = "ml"
DECISION_MAP = "map"


@dataclass(frozen=True)
class PllConfig:
    """Loop gains and update policy.

    Stability is not guaranteed by construction; gains are expected to come
    from the harness grid search.  decision_rule "map" biases the symbol
    decision by the shaped prior (needs the channel noise variance), "ml" is
    plain nearest-neighbor.
    """

    k1: float
    k2: float
    policy: str = POLICY_ALL
    pilot_only_hold: str = HOLD_FLYWHEEL
    decision_rule: str = DECISION_ML
    initial_estimate: float = 0.0

    def __post_init__(self):
        if self.k1 < 0.0 or self.k2 < 0.0:
            raise ValueError(f"loop gains must be >= 0, got k1={self.k1}, k2={self.k2}")
        if self.policy not in (POLICY_ALL, POLICY_PILOT_ONLY):
            raise ValueError(f"unknown policy {self.policy!r}")
        if self.pilot_only_hold not in (HOLD_FLYWHEEL, HOLD_FREEZE):
            raise ValueError(f"unknown hold mode {self.pilot_only_hold!r}")
        if self.decision_rule not in (DECISION_ML, DECISION_MAP):
            raise ValueError(f"unknown decision rule {self.decision_rule!r}")


@dataclass(frozen=True)
class PllTrace:
    """Per-symbol loop state.

    phi_hat[n] is the estimate applied to symbol n (a function of symbols
    < n only).  phi_e holds comparator outputs at update symbols and 0 where
    the loop did not update.  phi_d is the NCO increment actually applied
    after each symbol.  decided_index is the nearest-point decision at
    non-reference symbols and -1 where the reference was known.
    """

    phi_hat: np.ndarray
    phi_e: np.ndarray
    phi_i: np.ndarray
    phi_d: np.ndarray
    compensated: np.ndarray
    decided_index: np.ndarray
    decision_errors: int = field(default=0)


def wrap_phase(x):
    """Wrap angles to (-pi, pi]."""
    x = np.asarray(x, dtype=float)
    w = x - 2.0 * np.pi * np.floor((x + np.pi) / (2.0 * np.pi))
    w = np.where(w <= -np.pi, w + 2.0 * np.pi, w)
    return w if w.ndim else float(w)


def phase_comparator(y: complex, reference: complex) -> float:
    """arg(y) - arg(reference), wrapped to (-pi, pi]."""
    if reference == 0:
        raise ValueError("comparator reference must be nonzero")
    return wrap_phase(np.angle(y) - np.angle(reference))


def decide(y, constellation: Constellation) -> np.ndarray:
    """Nearest constellation point(s) in Euclidean distance.

    Ties resolve to the lowest point index.  Accepts a scalar or an array;
    returns point values with the same shape.
    """
    scalar = np.ndim(y) == 0
    y = np.atleast_1d(np.asarray(y, dtype=np.complex128))
    idx = np.argmin(
        np.abs(y[:, None] - constellation.points[None, :]), axis=1
    )
    out = constellation.points[idx]
    return complex(out[0]) if scalar else out


def decide_index(y, constellation: Constellation) -> np.ndarray:
    """Index form of ``decide`` (lowest index wins ties)."""
    y = np.atleast_1d(np.asarray(y, dtype=np.complex128))
    return np.argmin(np.abs(y[:, None] - constellation.points[None, :]), axis=1)


@njit(cache=True)
def _pll_kernel(
    rx,
    ref_known,
    is_known,
    levels,
    map_bias,
    k1,
    k2,
    update_all,
    flywheel,
    use_map,
    phi0,
):
    n = rx.shape[0]
    n_levels = levels.shape[0]
    spacing = levels[1] - levels[0]
    lo = levels[0]

    phi_hat = np.empty(n)
    phi_e = np.zeros(n)
    phi_i_tr = np.empty(n)
    phi_d_tr = np.empty(n)
    comp = np.empty(n, dtype=np.complex128)
    dec_idx = np.empty(n, dtype=np.int64)

    phi_i = 0.0
    est = phi0
    two_pi = 2.0 * math.pi
    for i in range(n):
        phi_hat[i] = est
        cp = math.cos(est)
        sp = math.sin(est)
        xr = rx[i].real
        xi = rx[i].imag
        yr = xr * cp + xi * sp
        yi = xi * cp - xr * sp
        comp[i] = complex(yr, yi)

        if is_known[i]:
            rr = ref_known[i].real
            ri = ref_known[i].imag
            dec_idx[i] = -1
            update = True
        else:
            if use_map:
                bi = 0
                bq = 0
                best_i = (yr - levels[0]) ** 2 + map_bias[0]
                best_q = (yi - levels[0]) ** 2 + map_bias[0]
                for k in range(1, n_levels):
                    ci = (yr - levels[k]) ** 2 + map_bias[k]
                    if ci < best_i:
                        best_i = ci
                        bi = k
                    cq = (yi - levels[k]) ** 2 + map_bias[k]
                    if cq < best_q:
                        best_q = cq
                        bq = k
            else:
                # Half-down rounding so exact midpoints take the lower
                # level, matching the argmin tie-break in decide().
                bi = int(math.ceil((yr - lo) / spacing - 0.5))
                bq = int(math.ceil((yi - lo) / spacing - 0.5))
                if bi < 0:
                    bi = 0
                elif bi >= n_levels:
                    bi = n_levels - 1
                if bq < 0:
                    bq = 0
                elif bq >= n_levels:
                    bq = n_levels - 1
            rr = levels[bi]
            ri = levels[bq]
            dec_idx[i] = bi * n_levels + bq
            update = update_all

        if update:
            e = math.atan2(yi, yr) - math.atan2(ri, rr)
            e = e - two_pi * math.floor((e + math.pi) / two_pi)
            if e <= -math.pi:
                e += two_pi
            phi_e[i] = e
            phi_i += k1 * e
            d = phi_i + k2 * e
        else:
            d = phi_i if flywheel else 0.0
        phi_i_tr[i] = phi_i
        phi_d_tr[i] = d
        est += d

    return phi_hat, phi_e, phi_i_tr, phi_d_tr, comp, dec_idx


def pll_run(
    realization: ChannelRealization,
    frame: Frame,
    constellation: Constellation,
    config: PllConfig,
) -> PllTrace:
    """Track the carrier phase over one frame and de-rotate it."""
    rx = np.asarray(realization.rx_symbols, dtype=np.complex128)
    if rx.size != frame.layout.total_symbols:
        raise ValueError(
            f"realization length {rx.size} does not match frame "
            f"length {frame.layout.total_symbols}"
        )

    is_known = frame.layout.reference_mask
    ref_known = np.where(is_known, frame.tx_symbols, 0.0).astype(np.complex128)

    if config.decision_rule == DECISION_MAP:
        # With zero noise the prior bias vanishes and MAP degrades to ML.
        map_bias = -realization.noise_var * np.log(constellation.level_prior)
        use_map = True
    else:
        map_bias = np.zeros_like(constellation.levels)
        use_map = False

    phi_hat, phi_e, phi_i, phi_d, comp, dec_idx = _pll_kernel(
        rx,
        ref_known,
        is_known,
        constellation.levels,
        map_bias,
        float(config.k1),
        float(config.k2),
        config.policy == POLICY_ALL,
        config.pilot_only_hold == HOLD_FLYWHEEL,
        use_map,
        float(config.initial_estimate),
    )

    payload = frame.layout.payload_positions
    errors = int(np.count_nonzero(dec_idx[payload] != frame.tx_point_index))
    return PllTrace(
        phi_hat=phi_hat,
        phi_e=phi_e,
        phi_i=phi_i,
        phi_d=phi_d,
        compensated=comp,
        decided_index=dec_idx,
        decision_errors=errors,
    )
