"""Desk-scale Monte Carlo of the estimate-and-forward coding scheme."""

from .codebooks import CodebookSystem, index_space
from .pipeline import (
    OUTCOMES,
    Scheme,
    SimConfig,
    SimResult,
    decode_block,
    encode_transmitter,
    relay_step,
    run_trials,
)
from .typicality import JointTest, is_strongly_typical

__all__ = [
    "CodebookSystem",
    "JointTest",
    "OUTCOMES",
    "Scheme",
    "SimConfig",
    "SimResult",
    "decode_block",
    "encode_transmitter",
    "index_space",
    "is_strongly_typical",
    "relay_step",
    "run_trials",
]
