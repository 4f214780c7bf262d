"""Happens-before closure over a trace, as bitmasks.

Orderings:

* program order: consecutive events of one thread,
* lock order: an unlock followed by the next acquisition of the same
  lock,
* creation order: a create event followed by the first event of the
  thread it spawned.

`hb_masks` returns, for each event index i, an int whose set bits are
the indices of events ordered at-or-before event i (including i
itself).  Since every direct predecessor of an event appears earlier in
the trace, one forward pass unioning predecessor masks computes the
full reflexive-transitive closure.
"""

from __future__ import annotations

from typing import Sequence

from ..ir import KIND_CREATE, KIND_LOCK, KIND_UNLOCK
from .interp import Event


def hb_masks(events: Sequence[Event]) -> list[int]:
    masks: list[int] = []
    last_of_tid: dict[int, int] = {}
    last_unlock: dict[str, int] = {}
    creator_of: dict[int, int] = {}
    for i, e in enumerate(events):
        m = 1 << i
        prev = last_of_tid.get(e.tid)
        if prev is not None:
            m |= masks[prev]
        else:
            parent = creator_of.get(e.tid)
            if parent is not None:
                m |= masks[parent]
        if e.kind == KIND_LOCK:
            u = last_unlock.get(e.lock)
            if u is not None:
                m |= masks[u]
        masks.append(m)
        last_of_tid[e.tid] = i
        if e.kind == KIND_UNLOCK:
            last_unlock[e.lock] = i
        elif e.kind == KIND_CREATE:
            creator_of[e.child] = i
    return masks


def ordered(masks: Sequence[int], i: int, j: int) -> bool:
    """True when events i and j are happens-before ordered (either way)."""
    if i > j:
        i, j = j, i
    return bool(masks[j] >> i & 1)
