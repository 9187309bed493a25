"""TRIS spatial modulation: link model, error-rate analysis, simulation and rate adaptation."""

from .adaptive import (
    InfeasibleRateError,
    RateAllocation,
    min_distance,
    optimize_improved,
    optimize_si,
)
from .analysis import abep_curves, abep_union_bound, upep_eb, upep_vb
from .channel import ChannelRealization, draw_channel, fixed_channel
from .constellation import Constellation, make_constellation, make_psk, make_qam
from .core import BitWord, ConfigError, SystemConfig, substream, validate_config
from .montecarlo import SimResult, StopRule, simulate_ber, simulate_fixed_channel_ber
from .txrx import CandidateSet, TrisSmCodeword, map_bits, ml_detect

__version__ = "0.1.0"

__all__ = [
    "BitWord",
    "CandidateSet",
    "ChannelRealization",
    "ConfigError",
    "Constellation",
    "InfeasibleRateError",
    "RateAllocation",
    "SimResult",
    "StopRule",
    "SystemConfig",
    "TrisSmCodeword",
    "abep_curves",
    "abep_union_bound",
    "draw_channel",
    "fixed_channel",
    "make_constellation",
    "make_psk",
    "make_qam",
    "map_bits",
    "min_distance",
    "ml_detect",
    "optimize_improved",
    "optimize_si",
    "simulate_ber",
    "simulate_fixed_channel_ber",
    "substream",
    "upep_eb",
    "upep_vb",
]
