"""Monte Carlo experiment orchestration.

Builds on the constellation/framing/channel/cpr/metrics stack to run the
standard experiments: loop-gain grid search, required-SNR bisection at an
NGMI threshold, linewidth and pilot-ratio sweeps, and the update-policy
comparison.

Reproducibility contract: every random quantity derives from the master
seed, a per-point seed index, and (for payload data) the format tag.
Channel realizations depend only on (master_seed, seed_index), so paired
formats and policies see identical phase paths and noise draws, and SNR
enters only as a scale factor on the noise.  Tasks are independent and
results are reduced in a fixed order, so sweep output is byte-identical for
any worker count.
"""

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import channel as channel_mod
from . import cpr, metrics
from .constellation import (
    Constellation,
    ShapingSpec,
    build_uniform,
    information_rate,
    solve_shaping_factor,
    target_entropy,
)
from .framing import build_layout, sample_frame
from .seeding import derive_seed

DEFAULT_CODE_RATE = 1.0 / 1.21
DEFAULT_NGMI_TARGET = 0.857
DEFAULT_PAIRS = ((64, 16), (256, 64), (1024, 256))

# Harness-level words mixed into per-run seeds.
_WORD_FRAME = 101
_WORD_CHANNEL = 102

# Metric scoring floor for noiseless runs, so gain optimization can still
# rank loop behavior when snr_db is infinite.
_NOISELESS_LLR_VAR = 1e-12


class BracketError(RuntimeError):
    """Required-SNR target not straddled by the search bracket."""

    def __init__(self, message, snr_lo, ngmi_lo, snr_hi, ngmi_hi):
        super().__init__(message)
        self.snr_lo = snr_lo
        self.ngmi_lo = ngmi_lo
        self.snr_hi = snr_hi
        self.ngmi_hi = ngmi_hi


class MonotonicityError(RuntimeError):
    """NGMI-vs-SNR probes came out non-monotone; bisection result unsafe."""


@dataclass(frozen=True)
class FormatSpec:
    """One modulation format: shaping kind, order and source entropy."""

    shaping: str  # "US" or "PS"
    order: int
    entropy_bits: float

    @property
    def name(self) -> str:
        return f"{self.shaping}-{self.order}QAM"

    @property
    def bits(self) -> int:
        return int(round(math.log2(self.order)))

    def ir_bits(self, code_rate: float) -> float:
        return information_rate(self.entropy_bits, self.bits, code_rate)


def uniform_format(order: int) -> FormatSpec:
    return FormatSpec("US", order, float(round(math.log2(order))))


def shaped_format(order: int, entropy_bits: float) -> FormatSpec:
    return FormatSpec("PS", order, entropy_bits)


def format_pair(ps_order: int, us_order: int, code_rate: float):
    """The equal-information-rate (PS, US) pair for a given code rate."""
    us = uniform_format(us_order)
    spec = ShapingSpec(
        information_rate=us.ir_bits(code_rate),
        base_bits=int(round(math.log2(ps_order))),
        code_rate=code_rate,
    )
    return shaped_format(ps_order, target_entropy(spec)), us


@dataclass(frozen=True)
class GainGrid:
    """Log-spaced search grid for the loop gains.

    The k1 floor sits near zero because this channel has no frequency
    offset: the integrator only adds noise-driven wander, and dense shaped
    formats (many low-amplitude symbols, noisy comparator) want k1 as small
    as possible.  Frequency-offset studies should raise k1_min.
    """

    k1_min: float = 1e-6
    k1_max: float = 1e-1
    k1_points: int = 13
    k2_min: float = 1e-3
    k2_max: float = 0.5
    k2_points: int = 13

    def cells(self) -> list[tuple[float, float]]:
        k1s = np.geomspace(self.k1_min, self.k1_max, self.k1_points)
        k2s = np.geomspace(self.k2_min, self.k2_max, self.k2_points)
        return [(float(a), float(b)) for a in k1s for b in k2s]


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs shared by all experiments; defaults follow the simulation setup."""

    pairs: tuple = DEFAULT_PAIRS
    formats: tuple = ()  # explicit FormatSpec list for single-format commands
    linewidths_hz: tuple = (0.0, 1e3, 1e4, 2e4, 3e4, 4e4, 5e4)
    pilot_periods: tuple = (16,)
    snr_db: float = 26.0
    snr_bracket_db: tuple | None = None
    payload_symbols: int = 2**17
    seeds_per_point: int = 4
    ngmi_target: float = DEFAULT_NGMI_TARGET
    code_rate: float = DEFAULT_CODE_RATE
    symbol_rate_baud: float = 16e9
    training_len: int = 100
    settle_guard: int = 1000
    gain_grid: GainGrid = field(default_factory=GainGrid)
    policies: tuple = (cpr.POLICY_ALL, cpr.POLICY_PILOT_ONLY)
    pilot_only_hold: str = cpr.HOLD_FLYWHEEL
    decision_rule: str = cpr.DECISION_ML
    initial_phase: float | str = 0.0
    noise_var_mode: str = "genie"  # or "pilot"
    bisect_tol_db: float = 0.02
    # Largest tolerated NGMI dip between adjacent SNR probes.  NGMI(snr) is
    # deterministic for fixed seeds but individual cycle-slip events make it
    # non-monotone at the 1e-3 level; dips beyond this indicate a real
    # problem (e.g. noisy per-probe gain re-optimization) and abort.
    ngmi_guard_tol: float = 0.002
    reoptimize_per_probe: bool = False
    pilot_sweep_required_snr: bool = False
    # Reduced budget for the 13x13 gain search; None inherits the full
    # payload_symbols / seeds_per_point (slow: 169 cells per grid point).
    opt_payload_symbols: int | None = 2**15
    opt_seeds: int | None = 2

    def pair_formats(self) -> list[tuple[FormatSpec, FormatSpec]]:
        return [format_pair(ps, us, self.code_rate) for ps, us in self.pairs]

    def all_formats(self) -> list[FormatSpec]:
        if self.formats:
            return list(self.formats)
        out = []
        for ps, us in self.pair_formats():
            out.extend([ps, us])
        return out


@dataclass(frozen=True)
class PointSpec:
    """One sweep grid point: format x channel x frame x loop policy."""

    fmt: FormatSpec
    linewidth_hz: float
    snr_db: float
    pilot_period: int
    policy: str


@dataclass(frozen=True)
class RunRow:
    """One CSV row; field order matches the documented schema."""

    format: str
    order: int
    entropy_bits: float
    ir_bits: float
    linewidth_hz: float
    snr_db: float
    pilot_ratio: float
    k1: float
    k2: float
    policy: str
    seed: int
    n_payload: int
    gmi: float
    ngmi: float
    air: float
    decision_error_rate: float


@dataclass(frozen=True)
class GainChoice:
    k1: float
    k2: float
    ngmi: float
    on_boundary: bool


@dataclass(frozen=True)
class RequiredSnr:
    snr_db: float
    gains: GainChoice
    probes: tuple  # (snr_db, mean ngmi) pairs in probe order


@dataclass
class SweepResult:
    rows: list
    summary: dict


@lru_cache(maxsize=32)
def _constellation_for(shaping: str, order: int, entropy_key: float) -> Constellation:
    if shaping == "US":
        return build_uniform(order)
    return solve_shaping_factor(order, entropy_key)


def constellation_for(fmt: FormatSpec) -> Constellation:
    return _constellation_for(fmt.shaping, fmt.order, round(fmt.entropy_bits, 9))


def frame_total_symbols(payload_target: int, period: int, training: int, guard: int) -> int:
    """Smallest pilot-aligned frame with >= payload_target metric symbols."""
    if period == 1:
        return training + guard + payload_target
    blocks_guard = -(-guard // period)
    blocks_payload = -(-payload_target // (period - 1))
    return training + (blocks_guard + blocks_payload) * period


def _format_tag(fmt: FormatSpec) -> int:
    return 2 * fmt.order + (1 if fmt.shaping == "PS" else 0)


def simulate_point(
    cfg: ExperimentConfig,
    master_seed: int,
    point: PointSpec,
    k1: float,
    k2: float,
    seed_index: int,
    payload_override: int | None = None,
):
    """Full simulation of one frame; returns (row, trace, frame, realization).

    Frames with no payload (pilot period 1) report zero for the rate
    metrics; the achievable rate after overhead is genuinely zero there.
    """
    const = constellation_for(point.fmt)
    payload_target = payload_override or cfg.payload_symbols
    total = frame_total_symbols(
        payload_target, point.pilot_period, cfg.training_len, cfg.settle_guard
    )
    layout = build_layout(total, cfg.training_len, point.pilot_period)
    frame_seed = derive_seed(master_seed, _WORD_FRAME, seed_index, _format_tag(point.fmt))
    frame = sample_frame(const, layout, frame_seed)

    params = channel_mod.ChannelParams(
        linewidth_hz=point.linewidth_hz,
        snr_db=point.snr_db,
        seed=derive_seed(master_seed, _WORD_CHANNEL, seed_index),
        symbol_rate_baud=cfg.symbol_rate_baud,
        initial_phase=cfg.initial_phase,
    )
    realization = channel_mod.apply_channel(frame.tx_symbols, params)

    pll_cfg = cpr.PllConfig(
        k1=k1,
        k2=k2,
        policy=point.policy,
        pilot_only_hold=cfg.pilot_only_hold,
        decision_rule=cfg.decision_rule,
    )
    trace = cpr.pll_run(realization, frame, const, pll_cfg)

    cutoff = cfg.training_len + cfg.settle_guard
    in_metric = layout.payload_positions >= cutoff
    positions = layout.payload_positions[in_metric]

    row = RunRow(
        format=point.fmt.name,
        order=point.fmt.order,
        entropy_bits=const.entropy_bits,
        ir_bits=point.fmt.ir_bits(cfg.code_rate),
        linewidth_hz=point.linewidth_hz,
        snr_db=point.snr_db,
        pilot_ratio=layout.pilot_ratio,
        k1=k1,
        k2=k2,
        policy=point.policy,
        seed=seed_index,
        n_payload=int(positions.size),
        gmi=0.0,
        ngmi=0.0,
        air=0.0,
        decision_error_rate=0.0,
    )
    if positions.size == 0:
        return row, trace, frame, realization

    if cfg.noise_var_mode == "pilot":
        ref = layout.reference_mask.nonzero()[0]
        ref = ref[ref >= cutoff]
        noise_var = metrics.pilot_noise_var(trace.compensated, frame.tx_symbols, ref)
    else:
        noise_var = realization.noise_var
    noise_var = max(noise_var, _NOISELESS_LLR_VAR)

    llrs = metrics.llr(trace.compensated[positions], const, noise_var)
    g = metrics.gmi(llrs, frame.tx_bits[in_metric], const.entropy_bits)
    errors = int(
        np.count_nonzero(
            trace.decided_index[positions] != frame.tx_point_index[in_metric]
        )
    )
    row = replace(
        row,
        gmi=g,
        ngmi=metrics.ngmi(g, const.entropy_bits, point.fmt.bits),
        air=metrics.air(g, layout.pilot_ratio),
        decision_error_rate=errors / positions.size,
    )
    return row, trace, frame, realization


def run_point(
    cfg: ExperimentConfig,
    master_seed: int,
    point: PointSpec,
    k1: float,
    k2: float,
    seed_index: int,
    payload_override: int | None = None,
) -> RunRow:
    """Row-only form of ``simulate_point`` (the pool task unit)."""
    row, _, _, _ = simulate_point(
        cfg, master_seed, point, k1, k2, seed_index, payload_override
    )
    return row


# ---------------------------------------------------------------------------
# Task pool
# ---------------------------------------------------------------------------

def _call(task):
    fn, args = task
    return fn(*args)


def run_tasks(tasks, workers: int):
    """Execute (fn, args) tasks, preserving task order in the results."""
    if workers <= 1 or len(tasks) <= 1:
        return [_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, len(tasks) // (4 * workers))
        return list(pool.map(_call, tasks, chunksize=chunk))


# ---------------------------------------------------------------------------
# Gain optimization
# ---------------------------------------------------------------------------

def _opt_budget(cfg: ExperimentConfig) -> tuple[int, int]:
    return (
        cfg.opt_payload_symbols or cfg.payload_symbols,
        cfg.opt_seeds or cfg.seeds_per_point,
    )


def _gain_eval_tasks(cfg, master_seed, point):
    payload, seeds = _opt_budget(cfg)
    cells = cfg.gain_grid.cells()
    tasks = [
        (run_point, (cfg, master_seed, point, k1, k2, s, payload))
        for (k1, k2) in cells
        for s in range(seeds)
    ]
    return cells, tasks


def _choose_gains(cfg, cells, rows) -> GainChoice:
    _, seeds = _opt_budget(cfg)
    grid = cfg.gain_grid
    best = None
    for i, (k1, k2) in enumerate(cells):
        mean_ngmi = float(np.mean([rows[i * seeds + s].ngmi for s in range(seeds)]))
        cand = (-mean_ngmi, k1, k2)
        if best is None or cand < best:
            best = cand
    ngmi_best, k1, k2 = -best[0], best[1], best[2]
    on_boundary = (
        k1 in (grid.k1_min, grid.k1_max) or k2 in (grid.k2_min, grid.k2_max)
    ) and grid.k1_points > 1 and grid.k2_points > 1
    return GainChoice(k1=k1, k2=k2, ngmi=ngmi_best, on_boundary=on_boundary)


def optimize_gains(
    cfg: ExperimentConfig, master_seed: int, point: PointSpec, workers: int = 1
) -> GainChoice:
    """Exhaustive grid search maximizing mean NGMI over the tuning seeds.

    Exact ties resolve toward smaller (k1, k2); a best point on the grid
    edge is flagged on the result rather than raised.
    """
    cells, tasks = _gain_eval_tasks(cfg, master_seed, point)
    rows = run_tasks(tasks, workers)
    return _choose_gains(cfg, cells, rows)


# ---------------------------------------------------------------------------
# Required SNR at the NGMI threshold
# ---------------------------------------------------------------------------

def default_bracket(fmt: FormatSpec, ngmi_target: float) -> tuple[float, float]:
    """Bracket around a Gaussian-capacity guess for the threshold SNR."""
    req_gmi = fmt.entropy_bits - fmt.bits * (1.0 - ngmi_target)
    est = 10.0 * math.log10(2.0**req_gmi - 1.0)
    return (est - 4.0, est + 10.0)


def _mean_ngmi(cfg, master_seed, point, gains, seeds) -> float:
    rows = [
        run_point(cfg, master_seed, point, gains.k1, gains.k2, s) for s in seeds
    ]
    return float(np.mean([r.ngmi for r in rows]))


def required_snr(
    cfg: ExperimentConfig,
    master_seed: int,
    point: PointSpec,
    seeds=None,
    gains: GainChoice | None = None,
    workers: int = 1,
) -> RequiredSnr:
    """Bisect the SNR at which mean NGMI crosses the FEC threshold.

    Seeds are held fixed across probes and the additive noise enters only
    through its scale, so NGMI(snr) is a deterministic, effectively monotone
    curve; probes that come out non-monotone abort the search.  Loop gains
    are optimized once at the bracket midpoint unless
    ``cfg.reoptimize_per_probe`` asks for a per-probe search.
    """
    target = cfg.ngmi_target
    seeds = list(range(cfg.seeds_per_point)) if seeds is None else list(seeds)
    lo, hi = cfg.snr_bracket_db or default_bracket(point.fmt, target)

    def gains_at(snr_db: float) -> GainChoice:
        return optimize_gains(
            cfg, master_seed, replace(point, snr_db=snr_db), workers=workers
        )

    if gains is None and not cfg.reoptimize_per_probe:
        gains = gains_at(0.5 * (lo + hi))

    probes = []

    def probe(snr_db: float) -> float:
        g = gains_at(snr_db) if cfg.reoptimize_per_probe else gains
        val = _mean_ngmi(cfg, master_seed, replace(point, snr_db=snr_db), g, seeds)
        probes.append((snr_db, val))
        return val

    ngmi_lo = probe(lo)
    ngmi_hi = probe(hi)
    if not (ngmi_lo < target <= ngmi_hi):
        raise BracketError(
            f"{point.fmt.name}: NGMI target {target} not bracketed on "
            f"[{lo}, {hi}] dB (endpoints {ngmi_lo:.4f}, {ngmi_hi:.4f})",
            lo, ngmi_lo, hi, ngmi_hi,
        )
    while hi - lo > cfg.bisect_tol_db:
        mid = 0.5 * (lo + hi)
        if probe(mid) >= target:
            hi = mid
        else:
            lo = mid

    ordered = sorted(probes)
    values = [v for _, v in ordered]
    if any(b - a < -cfg.ngmi_guard_tol for a, b in zip(values, values[1:])):
        table = ", ".join(f"{s:.3f}dB->{v:.5f}" for s, v in ordered)
        raise MonotonicityError(
            f"{point.fmt.name}: NGMI not monotone over SNR probes ({table}); "
            "refusing to report a bisection root"
        )
    return RequiredSnr(
        snr_db=0.5 * (lo + hi),
        gains=gains if gains is not None else gains_at(0.5 * (lo + hi)),
        probes=tuple(probes),
    )


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

def _sweep_policy(cfg: ExperimentConfig) -> str:
    return cfg.policies[0] if cfg.policies else cpr.POLICY_ALL


def _row_report(row: RunRow) -> metrics.MetricReport:
    """MetricReport view of a sweep row, for the paired-policy difference."""
    echo = dataclasses.asdict(row)
    for skip in ("gmi", "ngmi", "air", "n_payload", "decision_error_rate"):
        echo.pop(skip)
    return metrics.MetricReport(
        gmi_bits=row.gmi,
        ngmi=row.ngmi,
        air_bits=row.air,
        n_payload=row.n_payload,
        noise_var_used=10.0 ** (-row.snr_db / 10.0),
        config_echo=echo,
    )


def _mean_stderr(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size <= 1:
        return float(arr.mean()), 0.0
    return float(arr.mean()), float(arr.std(ddof=1) / math.sqrt(arr.size))


def _required_snr_task(cfg, master_seed, point, seeds, gains):
    res = required_snr(cfg, master_seed, point, seeds=seeds, gains=gains)
    rows = [
        run_point(
            cfg, master_seed, replace(point, snr_db=res.snr_db),
            res.gains.k1, res.gains.k2, s,
        )
        for s in seeds
    ]
    return res, rows


def sweep_linewidth(
    cfg: ExperimentConfig, master_seed: int, workers: int = 1
) -> SweepResult:
    """Required SNR (and shaping gain) as a function of laser linewidth.

    Each (format, linewidth, seed) triple gets its own single-seed bisection
    so the per-pair shaping gain carries a Monte Carlo standard error; loop
    gains are shared per (format, linewidth).
    """
    policy = _sweep_policy(cfg)
    period = cfg.pilot_periods[0]
    pairs = cfg.pair_formats()
    formats = [f for pair in pairs for f in pair]

    points = [
        PointSpec(fmt, lw, 0.0, period, policy)
        for fmt in formats
        for lw in cfg.linewidths_hz
    ]
    gain_tasks = []
    cells_per_point = []
    for p in points:
        lo, hi = cfg.snr_bracket_db or default_bracket(p.fmt, cfg.ngmi_target)
        cells, tasks = _gain_eval_tasks(
            cfg, master_seed, replace(p, snr_db=0.5 * (lo + hi))
        )
        cells_per_point.append(cells)
        gain_tasks.append(tasks)
    flat = [t for ts in gain_tasks for t in ts]
    flat_rows = run_tasks(flat, workers)
    gains_by_point = {}
    offset = 0
    for p, cells, tasks in zip(points, cells_per_point, gain_tasks):
        rows = flat_rows[offset : offset + len(tasks)]
        offset += len(tasks)
        gains_by_point[p] = _choose_gains(cfg, cells, rows)

    bisect_tasks = [
        (_required_snr_task, (cfg, master_seed, p, [s], gains_by_point[p]))
        for p in points
        for s in range(cfg.seeds_per_point)
    ]
    results = run_tasks(bisect_tasks, workers)

    rows = []
    snr_by_key = {}
    idx = 0
    for p in points:
        for s in range(cfg.seeds_per_point):
            res, point_rows = results[idx]
            idx += 1
            rows.extend(point_rows)
            snr_by_key[(p.fmt.name, p.linewidth_hz, s)] = res.snr_db

    gain_curves = {}
    for ps, us in pairs:
        for lw in cfg.linewidths_hz:
            diffs = [
                snr_by_key[(us.name, lw, s)] - snr_by_key[(ps.name, lw, s)]
                for s in range(cfg.seeds_per_point)
            ]
            mean, err = _mean_stderr(diffs)
            gain_curves[f"{ps.name}~{us.name}@{lw:g}Hz"] = {
                "linewidth_hz": lw,
                "shaping_gain_db": mean,
                "stderr_db": err,
            }
    summary = {
        "required_snr_db": {
            f"{name}@{lw:g}Hz@seed{s}": snr for (name, lw, s), snr in sorted(snr_by_key.items())
        },
        "shaping_gain": gain_curves,
    }
    rows.sort(key=_row_key)
    return SweepResult(rows=rows, summary=summary)


def _row_key(r: RunRow):
    return (
        r.format, r.linewidth_hz, r.pilot_ratio, r.policy, r.snr_db, r.seed,
    )


def _optimize_many(cfg, master_seed, points, workers):
    """Gain search for many points through one flat task list."""
    all_tasks = []
    cells_per_point = []
    counts = []
    for p in points:
        cells, tasks = _gain_eval_tasks(cfg, master_seed, p)
        cells_per_point.append(cells)
        counts.append(len(tasks))
        all_tasks.extend(tasks)
    flat_rows = run_tasks(all_tasks, workers)
    out = {}
    offset = 0
    for p, cells, n in zip(points, cells_per_point, counts):
        out[p] = _choose_gains(cfg, cells, flat_rows[offset : offset + n])
        offset += n
    return out


def sweep_pilot_ratio(
    cfg: ExperimentConfig, master_seed: int, workers: int = 1
) -> SweepResult:
    """GMI/AIR (or required SNR) across pilot ratios at fixed linewidths.

    With ``pilot_sweep_required_snr`` the SNR column holds the bisected
    threshold SNR per ratio; otherwise all runs share ``cfg.snr_db`` and the
    interesting output is the AIR column.
    """
    policy = _sweep_policy(cfg)
    formats = cfg.all_formats()
    points = [
        PointSpec(fmt, lw, cfg.snr_db, period, policy)
        for fmt in formats
        for lw in cfg.linewidths_hz
        for period in cfg.pilot_periods
    ]
    metric_points = [p for p in points if p.pilot_period > 1]
    trivial_points = [p for p in points if p.pilot_period == 1]

    rows = []
    if cfg.pilot_sweep_required_snr:
        # Gains resolve inside each bisection task, at its bracket midpoint.
        tasks = [
            (_required_snr_task, (cfg, master_seed, p, list(range(cfg.seeds_per_point)), None))
            for p in metric_points
        ]
        for (res, point_rows) in run_tasks(tasks, workers):
            rows.extend(point_rows)
    else:
        gains_by_point = _optimize_many(cfg, master_seed, metric_points, workers)
        tasks = [
            (run_point, (cfg, master_seed, p, gains_by_point[p].k1, gains_by_point[p].k2, s))
            for p in metric_points
            for s in range(cfg.seeds_per_point)
        ]
        rows.extend(run_tasks(tasks, workers))

    # All-pilot frames carry no payload; their rate metrics are zero by
    # construction and need no simulation beyond the row itself.
    for p in trivial_points:
        for s in range(cfg.seeds_per_point):
            rows.append(run_point(cfg, master_seed, p, 0.01, 0.1, s))

    summary = _pilot_summary(cfg, rows)
    rows.sort(key=_row_key)
    return SweepResult(rows=rows, summary=summary)


def _pilot_summary(cfg, rows) -> dict:
    by_curve = {}
    for r in rows:
        by_curve.setdefault((r.format, r.linewidth_hz), {}).setdefault(
            r.pilot_ratio, []
        ).append(r.air)
    curves = {}
    for (fmt, lw), ratios in by_curve.items():
        pts = sorted((ratio, float(np.mean(vals))) for ratio, vals in ratios.items())
        best_ratio, best_air = max(pts, key=lambda t: (t[1], -t[0]))
        curves[f"{fmt}@{lw:g}Hz"] = {
            "air_by_ratio": {f"{r:.17g}": a for r, a in pts},
            "max_air": best_air,
            "argmax_ratio": best_ratio,
        }
    summary = {"air_curves": curves}
    crossovers = {}
    for ps, us in cfg.pair_formats():
        for lw in cfg.linewidths_hz:
            ps_curve = by_curve.get((ps.name, lw))
            us_curve = by_curve.get((us.name, lw))
            if not ps_curve or not us_curve:
                continue
            shared = sorted(set(ps_curve) & set(us_curve))
            diffs = [
                (r, float(np.mean(ps_curve[r])) - float(np.mean(us_curve[r])))
                for r in shared
            ]
            cross = None
            for (r0, d0), (r1, d1) in zip(diffs, diffs[1:]):
                if d0 == 0.0:
                    cross = r0
                    break
                if d0 * d1 < 0.0:
                    cross = r0 + (r1 - r0) * (-d0) / (d1 - d0)
                    break
            crossovers[f"{ps.name}~{us.name}@{lw:g}Hz"] = cross
    summary["ps_minus_us_crossover_ratio"] = crossovers
    return summary


def compare_policies(
    cfg: ExperimentConfig, master_seed: int, workers: int = 1
) -> SweepResult:
    """All-symbol vs pilot-only updates on shared channel realizations.

    Gains are tuned per policy (each scheme runs at its own best operating
    point); seeds, frames and channel draws are identical across the two
    policy runs of each grid point, so the per-seed GMI difference is a
    paired sample.
    """
    formats = cfg.all_formats()
    points = [
        PointSpec(fmt, lw, cfg.snr_db, period, policy)
        for fmt in formats
        for lw in cfg.linewidths_hz
        for period in cfg.pilot_periods
        for policy in (cpr.POLICY_ALL, cpr.POLICY_PILOT_ONLY)
    ]
    metric_points = [p for p in points if p.pilot_period > 1]
    gains_by_point = _optimize_many(cfg, master_seed, metric_points, workers)

    tasks = [
        (run_point, (cfg, master_seed, p, gains_by_point[p].k1, gains_by_point[p].k2, s))
        for p in metric_points
        for s in range(cfg.seeds_per_point)
    ]
    rows = run_tasks(tasks, workers)
    for p in (q for q in points if q.pilot_period == 1):
        for s in range(cfg.seeds_per_point):
            rows.append(run_point(cfg, master_seed, p, 0.01, 0.1, s))

    report_by = {}
    for r in rows:
        report_by[(r.format, r.linewidth_hz, r.pilot_ratio, r.policy, r.seed)] = (
            _row_report(r)
        )
    delta = {}
    for fmt in formats:
        for lw in cfg.linewidths_hz:
            for period in cfg.pilot_periods:
                ratio = 1.0 / period
                diffs = [
                    metrics.delta_gmi(
                        report_by[(fmt.name, lw, ratio, cpr.POLICY_ALL, s)],
                        report_by[(fmt.name, lw, ratio, cpr.POLICY_PILOT_ONLY, s)],
                    )
                    for s in range(cfg.seeds_per_point)
                ]
                mean, err = _mean_stderr(diffs)
                delta[f"{fmt.name}@{lw:g}Hz@r={ratio:.17g}"] = {
                    "delta_gmi": mean,
                    "stderr": err,
                }
    rows.sort(key=_row_key)
    return SweepResult(rows=rows, summary={"delta_gmi": delta})


def single_run(
    cfg: ExperimentConfig, master_seed: int, workers: int = 1
) -> SweepResult:
    """One grid point, all seeds, fixed gains from a quick optimization."""
    fmt = cfg.all_formats()[0]
    point = PointSpec(
        fmt, cfg.linewidths_hz[0], cfg.snr_db, cfg.pilot_periods[0], _sweep_policy(cfg)
    )
    if point.pilot_period > 1:
        gains = optimize_gains(cfg, master_seed, point, workers=workers)
    else:
        gains = GainChoice(0.01, 0.1, 0.0, False)
    tasks = [
        (run_point, (cfg, master_seed, point, gains.k1, gains.k2, s))
        for s in range(cfg.seeds_per_point)
    ]
    rows = run_tasks(tasks, workers)
    mean, err = _mean_stderr([r.gmi for r in rows])
    rows.sort(key=_row_key)
    return SweepResult(
        rows=rows,
        summary={
            "gains": {"k1": gains.k1, "k2": gains.k2, "on_boundary": gains.on_boundary},
            "gmi_mean": mean,
            "gmi_stderr": err,
        },
    )


def optimize_gains_sweep(
    cfg: ExperimentConfig, master_seed: int, workers: int = 1
) -> SweepResult:
    """Expose the full gain grid as rows plus the chosen optimum."""
    fmt = cfg.all_formats()[0]
    point = PointSpec(
        fmt, cfg.linewidths_hz[0], cfg.snr_db, cfg.pilot_periods[0], _sweep_policy(cfg)
    )
    cells, tasks = _gain_eval_tasks(cfg, master_seed, point)
    rows = run_tasks(tasks, workers)
    choice = _choose_gains(cfg, cells, rows)
    rows = sorted(rows, key=lambda r: (r.k1, r.k2, r.seed))
    return SweepResult(
        rows=rows,
        summary={
            "best": {
                "k1": choice.k1,
                "k2": choice.k2,
                "ngmi": choice.ngmi,
                "on_boundary": choice.on_boundary,
            }
        },
    )
