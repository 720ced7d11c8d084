"""Command-line front end: config parsing, dispatch, result serialization.

Results are written as a CSV of runs plus a JSON summary, both carrying a
schema_version, and a manifest recording the tool version, master seed and a
hash of the normalized config.  All numbers serialize with 17 significant
digits so 64-bit floats round-trip exactly; given the same config and master
seed, the CSV is byte-identical regardless of worker count.

Flags may also be set through environment variables with the ``QAMPHASE_``
prefix (QAMPHASE_CONFIG, QAMPHASE_OUT, QAMPHASE_SEED, QAMPHASE_WORKERS,
QAMPHASE_DEBUG_TRACE); explicit flags win.
"""

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

from . import __version__, cpr, harness
from .constellation import SUPPORTED_ORDERS, ShapingError
from .framing import LayoutError, as_unit_fraction

SCHEMA_VERSION = 1
ENV_PREFIX = "QAMPHASE_"

CSV_COLUMNS = (
    "run_id", "format", "order", "entropy_bits", "ir_bits", "linewidth_hz",
    "snr_db", "pilot_ratio", "k1", "k2", "policy", "seed", "n_payload",
    "gmi", "ngmi", "air", "decision_error_rate",
)

SUBCOMMANDS = (
    "single-run", "required-snr", "sweep-linewidth", "sweep-pilot",
    "compare-policies", "optimize-gains", "export-constellation",
)


class ConfigError(ValueError):
    """Config document rejected; message names the offending field."""


# Field name -> (parser, default provider).  Unknown keys are a hard error.
_CONFIG_FIELDS = (
    "pairs", "formats", "linewidths_hz", "pilot_ratios", "snr_db",
    "snr_bracket_db", "payload_symbols", "seeds_per_point", "ngmi_target",
    "code_rate", "symbol_rate_baud", "training_len", "settle_guard",
    "gain_grid", "policies", "pilot_only_hold", "decision_rule",
    "initial_phase", "noise_var_mode", "bisect_tol_db", "ngmi_guard_tol",
    "reoptimize_per_probe", "pilot_sweep_required_snr",
    "opt_payload_symbols", "opt_seeds",
)

_GAIN_GRID_KEYS = ("k1_min", "k1_max", "k1_points", "k2_min", "k2_max", "k2_points")


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _as_number(doc, key, lo=None, hi=None, integer=False, lo_open=False):
    v = doc[key]
    _require(isinstance(v, (int, float)) and not isinstance(v, bool),
             f"{key} must be a number, got {v!r}")
    if integer:
        _require(float(v).is_integer(), f"{key} must be an integer, got {v!r}")
        v = int(v)
    if lo is not None:
        ok = v > lo if lo_open else v >= lo
        _require(ok, f"{key} must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None:
        _require(v <= hi, f"{key} must be <= {hi}, got {v}")
    return v


def _parse_formats(entries) -> tuple:
    out = []
    for e in entries:
        _require(isinstance(e, dict), f"formats entries must be objects, got {e!r}")
        unknown = set(e) - {"shaping", "order", "entropy_bits"}
        _require(not unknown, f"unknown format keys: {sorted(unknown)}")
        shaping = e.get("shaping")
        _require(shaping in ("US", "PS"), f"format shaping must be US or PS, got {shaping!r}")
        order = e.get("order")
        _require(order in SUPPORTED_ORDERS,
                 f"format order must be one of {SUPPORTED_ORDERS}, got {order!r}")
        if shaping == "US":
            _require("entropy_bits" not in e, "US formats fix their own entropy")
            out.append(harness.uniform_format(order))
        else:
            _require("entropy_bits" in e, "PS formats need an entropy_bits target")
            h = float(e["entropy_bits"])
            m = int(round(math.log2(order)))
            _require(2.0 < h < m, f"entropy_bits must lie in (2, {m}), got {h}")
            out.append(harness.shaped_format(order, h))
    return tuple(out)


def parse_config(text: str) -> harness.ExperimentConfig:
    """Parse and validate a JSON config; unknown keys are rejected."""
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    _require(isinstance(doc, dict), "config must be a JSON object")
    unknown = set(doc) - set(_CONFIG_FIELDS)
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")

    kw = {}
    if "pairs" in doc:
        pairs = doc["pairs"]
        _require(isinstance(pairs, list) and all(
            isinstance(p, list) and len(p) == 2 for p in pairs),
            "pairs must be a list of [ps_order, us_order] pairs")
        for ps, us in pairs:
            _require(ps in SUPPORTED_ORDERS and us in SUPPORTED_ORDERS,
                     f"pair orders must be in {SUPPORTED_ORDERS}, got [{ps}, {us}]")
            _require(ps > us, f"PS order must exceed US order in a pair, got [{ps}, {us}]")
        kw["pairs"] = tuple((int(ps), int(us)) for ps, us in pairs)
    if "formats" in doc:
        kw["formats"] = _parse_formats(doc["formats"])
    if "linewidths_hz" in doc:
        lws = doc["linewidths_hz"]
        _require(isinstance(lws, list) and lws, "linewidths_hz must be a non-empty list")
        for lw in lws:
            _require(isinstance(lw, (int, float)) and lw >= 0,
                     f"linewidths_hz entries must be >= 0, got {lw!r}")
        kw["linewidths_hz"] = tuple(float(lw) for lw in lws)
    if "pilot_ratios" in doc:
        ratios = doc["pilot_ratios"]
        _require(isinstance(ratios, list) and ratios,
                 "pilot_ratios must be a non-empty list")
        try:
            kw["pilot_periods"] = tuple(as_unit_fraction(r) for r in ratios)
        except (LayoutError, ValueError, ZeroDivisionError) as e:
            raise ConfigError(f"pilot_ratios: {e}") from e
    if "snr_db" in doc:
        kw["snr_db"] = float(_as_number(doc, "snr_db"))
    if doc.get("snr_bracket_db") is not None:
        br = doc["snr_bracket_db"]
        _require(isinstance(br, list) and len(br) == 2 and br[0] < br[1],
                 f"snr_bracket_db must be [lo, hi] with lo < hi, got {br!r}")
        kw["snr_bracket_db"] = (float(br[0]), float(br[1]))
    if "payload_symbols" in doc:
        kw["payload_symbols"] = _as_number(doc, "payload_symbols", lo=1, integer=True)
    if "seeds_per_point" in doc:
        kw["seeds_per_point"] = _as_number(doc, "seeds_per_point", lo=1, integer=True)
    if "ngmi_target" in doc:
        kw["ngmi_target"] = _as_number(doc, "ngmi_target", lo=0.0, hi=1.0, lo_open=True)
    if "code_rate" in doc:
        kw["code_rate"] = _as_number(doc, "code_rate", lo=0.0, hi=1.0, lo_open=True)
    if "symbol_rate_baud" in doc:
        kw["symbol_rate_baud"] = float(
            _as_number(doc, "symbol_rate_baud", lo=0.0, lo_open=True))
    if "training_len" in doc:
        kw["training_len"] = _as_number(doc, "training_len", lo=0, integer=True)
    if "settle_guard" in doc:
        kw["settle_guard"] = _as_number(doc, "settle_guard", lo=0, integer=True)
    if "gain_grid" in doc:
        gg = doc["gain_grid"]
        _require(isinstance(gg, dict), "gain_grid must be an object")
        unknown = set(gg) - set(_GAIN_GRID_KEYS)
        _require(not unknown, f"unknown gain_grid keys: {sorted(unknown)}")
        merged = dataclasses.asdict(harness.GainGrid())
        merged.update(gg)
        for k in ("k1_min", "k1_max", "k2_min", "k2_max"):
            _require(merged[k] > 0, f"gain_grid.{k} must be > 0, got {merged[k]}")
        for k in ("k1_points", "k2_points"):
            _require(isinstance(merged[k], int) and merged[k] >= 1,
                     f"gain_grid.{k} must be an integer >= 1, got {merged[k]}")
        _require(merged["k1_min"] <= merged["k1_max"], "gain_grid k1_min must be <= k1_max")
        _require(merged["k2_min"] <= merged["k2_max"], "gain_grid k2_min must be <= k2_max")
        kw["gain_grid"] = harness.GainGrid(**merged)
    if "policies" in doc:
        pol = doc["policies"]
        _require(isinstance(pol, list) and pol, "policies must be a non-empty list")
        for p in pol:
            _require(p in (cpr.POLICY_ALL, cpr.POLICY_PILOT_ONLY),
                     f"policies entries must be 'all' or 'pilot-only', got {p!r}")
        kw["policies"] = tuple(pol)
    if "pilot_only_hold" in doc:
        v = doc["pilot_only_hold"]
        _require(v in (cpr.HOLD_FLYWHEEL, cpr.HOLD_FREEZE),
                 f"pilot_only_hold must be 'flywheel' or 'freeze', got {v!r}")
        kw["pilot_only_hold"] = v
    if "decision_rule" in doc:
        v = doc["decision_rule"]
        _require(v in (cpr.DECISION_ML, cpr.DECISION_MAP),
                 f"decision_rule must be 'ml' or 'map', got {v!r}")
        kw["decision_rule"] = v
    if "initial_phase" in doc:
        v = doc["initial_phase"]
        if v != "random":
            _require(isinstance(v, (int, float)) and not isinstance(v, bool),
                     f"initial_phase must be a number or 'random', got {v!r}")
            v = float(v)
        kw["initial_phase"] = v
    if "noise_var_mode" in doc:
        v = doc["noise_var_mode"]
        _require(v in ("genie", "pilot"),
                 f"noise_var_mode must be 'genie' or 'pilot', got {v!r}")
        kw["noise_var_mode"] = v
    if "bisect_tol_db" in doc:
        kw["bisect_tol_db"] = _as_number(doc, "bisect_tol_db", lo=0.0, lo_open=True)
    if "ngmi_guard_tol" in doc:
        kw["ngmi_guard_tol"] = _as_number(doc, "ngmi_guard_tol", lo=0.0)
    for key in ("reoptimize_per_probe", "pilot_sweep_required_snr"):
        if key in doc:
            _require(isinstance(doc[key], bool), f"{key} must be a boolean")
            kw[key] = doc[key]
    # explicit null means "inherit the full run budget"
    if "opt_payload_symbols" in doc:
        kw["opt_payload_symbols"] = (
            None if doc["opt_payload_symbols"] is None
            else _as_number(doc, "opt_payload_symbols", lo=1, integer=True)
        )
    if "opt_seeds" in doc:
        kw["opt_seeds"] = (
            None if doc["opt_seeds"] is None
            else _as_number(doc, "opt_seeds", lo=1, integer=True)
        )

    return harness.ExperimentConfig(**kw)


def config_to_dict(cfg: harness.ExperimentConfig) -> dict:
    """Normalized (fully explicit) form of a config."""
    return {
        "pairs": [list(p) for p in cfg.pairs],
        "formats": [
            {"shaping": f.shaping, "order": f.order, "entropy_bits": f.entropy_bits}
            if f.shaping == "PS" else {"shaping": f.shaping, "order": f.order}
            for f in cfg.formats
        ],
        "linewidths_hz": list(cfg.linewidths_hz),
        "pilot_ratios": [f"1/{p}" for p in cfg.pilot_periods],
        "snr_db": cfg.snr_db,
        "snr_bracket_db": list(cfg.snr_bracket_db) if cfg.snr_bracket_db else None,
        "payload_symbols": cfg.payload_symbols,
        "seeds_per_point": cfg.seeds_per_point,
        "ngmi_target": cfg.ngmi_target,
        "code_rate": cfg.code_rate,
        "symbol_rate_baud": cfg.symbol_rate_baud,
        "training_len": cfg.training_len,
        "settle_guard": cfg.settle_guard,
        "gain_grid": dataclasses.asdict(cfg.gain_grid),
        "policies": list(cfg.policies),
        "pilot_only_hold": cfg.pilot_only_hold,
        "decision_rule": cfg.decision_rule,
        "initial_phase": cfg.initial_phase,
        "noise_var_mode": cfg.noise_var_mode,
        "bisect_tol_db": cfg.bisect_tol_db,
        "ngmi_guard_tol": cfg.ngmi_guard_tol,
        "reoptimize_per_probe": cfg.reoptimize_per_probe,
        "pilot_sweep_required_snr": cfg.pilot_sweep_required_snr,
        "opt_payload_symbols": cfg.opt_payload_symbols,
        "opt_seeds": cfg.opt_seeds,
    }


def serialize_config(cfg: harness.ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True)


def config_hash(cfg: harness.ExperimentConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _fmt_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def rows_to_csv(rows) -> str:
    """Fixed-column CSV with a schema_version comment line."""
    lines = [f"# schema_version={SCHEMA_VERSION}", ",".join(CSV_COLUMNS)]
    for i, row in enumerate(rows):
        d = dataclasses.asdict(row)
        d["run_id"] = i
        lines.append(",".join(_fmt_value(d[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def _write_outputs(out_dir: Path, name: str, result, manifest: dict):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{name}.csv").write_text(rows_to_csv(result.rows))
    summary = {
        "schema_version": SCHEMA_VERSION,
        "subcommand": name,
        "summary": result.summary,
    }
    (out_dir / f"{name}_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    )


def _dump_debug_trace(out_dir: Path, cfg, master_seed):
    fmt = cfg.all_formats()[0]
    point = harness.PointSpec(
        fmt, cfg.linewidths_hz[0], cfg.snr_db, cfg.pilot_periods[0],
        cfg.policies[0] if cfg.policies else cpr.POLICY_ALL,
    )
    _, trace, _, realization = harness.simulate_point(
        cfg, master_seed, point, 0.01, 0.1, 0
    )
    lines = ["n,phi,phi_hat,phi_e"]
    for n in range(trace.phi_hat.size):
        lines.append(
            f"{n},{_fmt_value(float(realization.phase[n]))},"
            f"{_fmt_value(float(trace.phi_hat[n]))},{_fmt_value(float(trace.phi_e[n]))}"
        )
    (out_dir / "trace_seed0.csv").write_text("\n".join(lines) + "\n")


def run(subcommand: str, cfg: harness.ExperimentConfig, master_seed: int,
        out_dir: Path, workers: int = 1, debug_trace: bool = False,
        config_path: str | None = None) -> int:
    """Execute one subcommand and write CSV/JSON/manifest into ``out_dir``."""
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "tool": "qamphase",
        "version": __version__,
        "subcommand": subcommand,
        "master_seed": master_seed,
        "workers": workers,
        "config_path": config_path,
        "config_hash": config_hash(cfg),
        "config": config_to_dict(cfg),
    }
    if subcommand == "export-constellation":
        out_dir.mkdir(parents=True, exist_ok=True)
        for fmt in cfg.all_formats():
            const = harness.constellation_for(fmt)
            (out_dir / f"{fmt.name}.json").write_text(const.to_json() + "\n")
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return 0

    if subcommand == "single-run":
        result = harness.single_run(cfg, master_seed, workers)
    elif subcommand == "required-snr":
        result = _required_snr_command(cfg, master_seed, workers)
    elif subcommand == "sweep-linewidth":
        result = harness.sweep_linewidth(cfg, master_seed, workers)
    elif subcommand == "sweep-pilot":
        result = harness.sweep_pilot_ratio(cfg, master_seed, workers)
    elif subcommand == "compare-policies":
        result = harness.compare_policies(cfg, master_seed, workers)
    elif subcommand == "optimize-gains":
        result = harness.optimize_gains_sweep(cfg, master_seed, workers)
    else:
        raise ConfigError(f"unknown subcommand {subcommand!r}")

    _write_outputs(out_dir, subcommand, result, manifest)
    if debug_trace and subcommand == "single-run":
        _dump_debug_trace(out_dir, cfg, master_seed)
    return 0


def _required_snr_command(cfg, master_seed, workers):
    policy = cfg.policies[0] if cfg.policies else cpr.POLICY_ALL
    lw = cfg.linewidths_hz[0]
    period = cfg.pilot_periods[0]
    rows = []
    summary = {}
    tasks = [
        (harness._required_snr_task,
         (cfg, master_seed, harness.PointSpec(fmt, lw, 0.0, period, policy),
          list(range(cfg.seeds_per_point)), None))
        for fmt in cfg.all_formats()
    ]
    for fmt, (res, point_rows) in zip(cfg.all_formats(), harness.run_tasks(tasks, workers)):
        rows.extend(point_rows)
        summary[fmt.name] = {
            "required_snr_db": res.snr_db,
            "k1": res.gains.k1,
            "k2": res.gains.k2,
            "gains_on_boundary": res.gains.on_boundary,
            "probes": [[s, v] for s, v in res.probes],
        }
    rows.sort(key=harness._row_key)
    return harness.SweepResult(rows=rows, summary=summary)


def _env_default(name: str, fallback=None):
    return os.environ.get(ENV_PREFIX + name, fallback)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qamphase",
        description="Phase-noise tolerance experiments for shaped and uniform QAM",
    )
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", default=_env_default("CONFIG"),
                    help="JSON config path (defaults apply when omitted)")
    ap.add_argument("--out", default=_env_default("OUT", "out"),
                    help="output directory")
    ap.add_argument("--seed", type=int,
                    default=int(_env_default("SEED", "20190131")),
                    help="64-bit master seed")
    ap.add_argument("--workers", type=int,
                    default=int(_env_default("WORKERS", "1")),
                    help="process pool size")
    ap.add_argument("--debug-trace", action="store_true",
                    default=_env_default("DEBUG_TRACE", "") not in ("", "0"),
                    help="dump a per-symbol loop trace (single-run only)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        text = Path(args.config).read_text() if args.config else "{}"
        cfg = parse_config(text)
        return run(
            args.subcommand, cfg, args.seed, out_dir,
            workers=max(1, args.workers), debug_trace=args.debug_trace,
            config_path=args.config,
        )
    except (ConfigError, LayoutError, ShapingError) as e:
        _emit_error(out_dir, "config-error", e, extra=None)
        return 2
    except harness.BracketError as e:
        extra = {
            "snr_lo": e.snr_lo, "ngmi_lo": e.ngmi_lo,
            "snr_hi": e.snr_hi, "ngmi_hi": e.ngmi_hi,
        }
        _emit_error(out_dir, "bracket-failure", e, extra)
        return 1
    except (harness.MonotonicityError, OSError, ValueError) as e:
        _emit_error(out_dir, type(e).__name__, e, extra=None)
        return 1


def _emit_error(out_dir: Path, kind: str, exc: Exception, extra):
    doc = {"error": kind, "message": str(exc)}
    if extra:
        doc.update(extra)
    text = json.dumps(doc, indent=2, sort_keys=True)
    print(text, file=sys.stderr)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "error.json").write_text(text + "\n")
    except OSError:
        pass


if __name__ == "__main__":
    sys.exit(main())
