"""Bounded-memory butterfly count estimation over fully dynamic bipartite edge streams."""

from .errors import (
    CensusOverflow,
    ConfigError,
    DegenerateStream,
    EmptyStream,
    EquivalenceViolation,
    StreamInvariantViolation,
    UndefinedMetric,
)
from .estimator import Abacus, EstimateLedger, run_abacus
from .oracle import ExactGraph, exact_butterfly_count, exact_count_stream
from .parallel import ParAbacus, run_parabacus
from .sample import PairingState, SampleGraph
from .stream import DELETE, INSERT, EdgeEvent, generate_dynamic_stream, parse_edge_list, validate_stream

__version__ = "0.1.0"
