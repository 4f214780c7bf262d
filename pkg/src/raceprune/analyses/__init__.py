"""The static analyses that retire accesses from instrumentation."""

from .stc import StcResult, compute_stc, stc_safe_accesses
from .swmr import swmr_safe_reads
from .lockset import LockOwnership, compute_lock_ownership
from .escape import EscapeResult, compute_escape, escape_safe_accesses

__all__ = [
    "EscapeResult",
    "LockOwnership",
    "StcResult",
    "compute_escape",
    "compute_lock_ownership",
    "compute_stc",
    "escape_safe_accesses",
    "stc_safe_accesses",
    "swmr_safe_reads",
]
