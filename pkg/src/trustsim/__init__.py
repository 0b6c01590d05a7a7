"""Discrete-event simulator for Markov-chain driver-trust models in VANETs."""
from .trust import (MAX_TRUST, Cause, ModelKind, Severity, TrustAdjustment, TrustModel,
                    TrustStateDef, apply_adjustment, builtin_model, can_announce, fmt_trust,
                    state_of, to_hundredths, validate_model)
from .config import ScenarioConfig, ScriptedStep, parse_config
from .engine import SimResult, build_schedule, run_scenario, summarize

__version__ = "0.1.0"

__all__ = [
    "MAX_TRUST", "Cause", "ModelKind", "Severity", "TrustAdjustment", "TrustModel",
    "TrustStateDef", "apply_adjustment", "builtin_model", "can_announce", "fmt_trust",
    "state_of", "to_hundredths", "validate_model", "ScenarioConfig", "ScriptedStep",
    "parse_config", "SimResult", "build_schedule", "run_scenario", "summarize",
]
