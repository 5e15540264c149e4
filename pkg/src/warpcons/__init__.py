"""Simulator and checker for warp-scheduled Byzantine consensus over a sticky append-only list."""

from .engine import Trace, WarpEngine, run_to_completion
from .errors import WarpConsError
from .model import (
    NULL,
    SystemConfig,
    ValidatedConfig,
    decision_phase_bound,
    make_config,
    resilience_limit,
    validate_config,
)
from .verifier import evaluate_trace, exhaustive_check, find_violation

__version__ = "0.1.0"

__all__ = [
    "NULL",
    "SystemConfig",
    "Trace",
    "ValidatedConfig",
    "WarpConsError",
    "WarpEngine",
    "decision_phase_bound",
    "evaluate_trace",
    "exhaustive_check",
    "find_violation",
    "make_config",
    "resilience_limit",
    "run_to_completion",
    "validate_config",
]
