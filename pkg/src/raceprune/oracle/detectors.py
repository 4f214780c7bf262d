"""Race detectors over a single trace.

Two independent implementations of the same happens-before relation:

* `detect_races_offline` closes the whole trace into bitmasks and then
  checks every conflicting pair.  It reports all racing pairs and is
  the reference the verifiers use.
* `detect_races_vc` runs forward with vector clocks, keeping only the
  last write and the latest read per thread per location.  It reports
  race existence and, per location, the first racing pair.

Both agree on race existence and on the first pair per location: for
the earliest racing later-event of a location, every earlier same-cell
pair is ordered, so writes form a happens-before chain and per-thread
latest reads dominate older ones.  The compressed vector-clock state is
lossless exactly there.

A racing pair is reported as (i, j) with i < j: indices into the
trace's event tuple.  The canonical first pair per location fixes j as
the earliest event racing with anything before it, and i as the
latest-sequenced conflicting event unordered with j.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from ..ir import (
    AccessId,
    KIND_CREATE,
    KIND_LOCK,
    KIND_READ,
    KIND_UNLOCK,
    KIND_WRITE,
)
from .explore import Trace
from .hb import hb_masks
from .interp import ConcreteLocation


@dataclass(frozen=True)
class RaceReport:
    pairs: tuple[tuple[int, int], ...]
    first_pairs: dict[ConcreteLocation, tuple[int, int]]

    @property
    def has_race(self) -> bool:
        return bool(self.pairs)


@dataclass(frozen=True)
class VcReport:
    first_pairs: dict[ConcreteLocation, tuple[int, int]]

    @property
    def has_race(self) -> bool:
        return bool(self.first_pairs)


def detect_races_offline(
    trace: Trace,
    restrict: Optional[Iterable[AccessId]] = None,
) -> RaceReport:
    """All unordered conflicting pairs.  `restrict` limits which access
    events may participate in a pair; the happens-before relation is
    always built from the full trace."""
    events = trace.events
    masks = hb_masks(events)
    allowed = None if restrict is None else frozenset(restrict)
    by_loc: dict[ConcreteLocation, list[int]] = {}
    for i, e in enumerate(events):
        if not e.is_access:
            continue
        if allowed is not None and e.access_id not in allowed:
            continue
        by_loc.setdefault(e.loc, []).append(i)

    pairs: list[tuple[int, int]] = []
    first_pairs: dict[ConcreteLocation, tuple[int, int]] = {}
    for loc, idxs in by_loc.items():
        for a, j in enumerate(idxs):
            mask_j = masks[j]
            write_j = events[j].kind == KIND_WRITE
            partner = -1
            for i in idxs[:a]:
                if not (write_j or events[i].kind == KIND_WRITE):
                    continue
                if mask_j >> i & 1:
                    continue
                pairs.append((i, j))
                partner = max(partner, i)
            if partner >= 0 and loc not in first_pairs:
                first_pairs[loc] = (partner, j)
    pairs.sort()
    return RaceReport(pairs=tuple(pairs), first_pairs=first_pairs)


def detect_races_vc(trace: Trace) -> VcReport:
    """Forward vector-clock pass; first racing pair per location."""
    events = trace.events
    clocks: dict[int, dict[int, int]] = {}
    lock_clock: dict[str, dict[int, int]] = {}
    child_init: dict[int, dict[int, int]] = {}
    # per location: last write as (index, tid, stamp), latest read per thread
    last_write: dict[ConcreteLocation, tuple[int, int, int]] = {}
    last_reads: dict[ConcreteLocation, dict[int, tuple[int, int]]] = {}
    first_pairs: dict[ConcreteLocation, tuple[int, int]] = {}

    for j, e in enumerate(events):
        c = clocks.get(e.tid)
        if c is None:
            c = dict(child_init.get(e.tid, ()))
            clocks[e.tid] = c
        if e.kind == KIND_LOCK:
            for t, v in lock_clock.get(e.lock, {}).items():
                if v > c.get(t, 0):
                    c[t] = v
        c[e.tid] = c.get(e.tid, 0) + 1

        if e.kind == KIND_UNLOCK:
            lock_clock[e.lock] = dict(c)
        elif e.kind == KIND_CREATE:
            child_init[e.child] = dict(c)
        elif e.kind == KIND_READ:
            w = last_write.get(e.loc)
            if w is not None and w[2] > c.get(w[1], 0) and e.loc not in first_pairs:
                first_pairs[e.loc] = (w[0], j)
            last_reads.setdefault(e.loc, {})[e.tid] = (j, c[e.tid])
        elif e.kind == KIND_WRITE:
            partner = -1
            w = last_write.get(e.loc)
            if w is not None and w[2] > c.get(w[1], 0):
                partner = w[0]
            for t, (i, stamp) in last_reads.get(e.loc, {}).items():
                if stamp > c.get(t, 0):
                    partner = max(partner, i)
            if partner >= 0 and e.loc not in first_pairs:
                first_pairs[e.loc] = (partner, j)
            last_write[e.loc] = (j, e.tid, c[e.tid])
    return VcReport(first_pairs=first_pairs)
