"""Phase-noise tolerance of uniform and probabilistically shaped QAM.

Symbol-rate Monte Carlo simulation of shaped/uniform square QAM over a
Wiener-phase-noise + AWGN channel, carrier recovery with a pilot-assisted
decision-directed PLL, and achievable-rate scoring via prior-aware bitwise
LLRs (GMI, NGMI, AIR).
"""

__version__ = "0.1.0"

from .channel import ChannelParams, ChannelRealization, apply_channel, snr_to_osnr_db, wiener_phase
from .constellation import (
    Constellation,
    ShapingError,
    ShapingSpec,
    build_uniform,
    information_rate,
    solve_shaping_factor,
    target_entropy,
)
from .cpr import PllConfig, PllTrace, decide, phase_comparator, pll_run, wrap_phase
from .framing import Frame, FrameLayout, LayoutError, as_unit_fraction, build_layout, sample_frame
from .harness import (
    ExperimentConfig,
    FormatSpec,
    GainGrid,
    PointSpec,
    compare_policies,
    format_pair,
    optimize_gains,
    required_snr,
    run_point,
    shaped_format,
    single_run,
    sweep_linewidth,
    sweep_pilot_ratio,
    uniform_format,
)
from .metrics import MetricReport, air, delta_gmi, gmi, llr, llr_generic, ngmi

__all__ = [
    "ChannelParams",
    "ChannelRealization",
    "Constellation",
    "ExperimentConfig",
    "FormatSpec",
    "Frame",
    "FrameLayout",
    "GainGrid",
    "LayoutError",
    "MetricReport",
    "PllConfig",
    "PllTrace",
    "PointSpec",
    "ShapingError",
    "ShapingSpec",
    "air",
    "apply_channel",
    "as_unit_fraction",
    "build_layout",
    "build_uniform",
    "compare_policies",
    "decide",
    "delta_gmi",
    "format_pair",
    "gmi",
    "information_rate",
    "llr",
    "llr_generic",
    "ngmi",
    "optimize_gains",
    "phase_comparator",
    "pll_run",
    "required_snr",
    "run_point",
    "sample_frame",
    "shaped_format",
    "single_run",
    "snr_to_osnr_db",
    "solve_shaping_factor",
    "sweep_linewidth",
    "sweep_pilot_ratio",
    "target_entropy",
    "uniform_format",
    "wiener_phase",
    "wrap_phase",
]
