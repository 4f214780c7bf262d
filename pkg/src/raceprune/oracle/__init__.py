"""Concrete execution oracle: interpreter, schedule exploration,
happens-before race detectors, dynamic sharing tracer, and the
verifiers that hold the static reduction to account."""

from .detectors import RaceReport, VcReport, detect_races_offline, detect_races_vc
from .explore import Trace, count_schedules, enumerate_traces, sample_traces
from .hb import hb_masks, ordered
from .interp import (
    Bounds,
    ConcreteLocation,
    Event,
    FuncRef,
    State,
    initial_state,
    location_text,
    step,
)
from .tracer import instrumentation_gap, shared_accesses_in, traced_shared_accesses
from .verify import (
    SafetyResult,
    SufficiencyResult,
    Violation,
    verify_safety,
    verify_weak_sufficiency,
)

__all__ = [
    "Bounds",
    "ConcreteLocation",
    "Event",
    "FuncRef",
    "RaceReport",
    "SafetyResult",
    "State",
    "SufficiencyResult",
    "Trace",
    "VcReport",
    "Violation",
    "count_schedules",
    "detect_races_offline",
    "detect_races_vc",
    "enumerate_traces",
    "hb_masks",
    "initial_state",
    "instrumentation_gap",
    "location_text",
    "ordered",
    "sample_traces",
    "shared_accesses_in",
    "step",
    "traced_shared_accesses",
    "verify_safety",
    "verify_weak_sufficiency",
]
