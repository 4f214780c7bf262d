"""Dynamic sharing tracer and the instrumentation gap metric.

The tracer watches traces concretely and marks an access as
shared-reachable when some trace has one of its events touching a cell
that at least two threads touch in that same trace, after the first
thread was created.  It is the tightest reference the concrete
executions support: anything it never flags cannot race in the explored
schedules, so the difference between the static answer and the traced
answer measures how much precision the static side left behind.
"""

from __future__ import annotations

from typing import Iterable

from ..ir import AccessId, KIND_CREATE, Program
from .explore import Trace
from .interp import ConcreteLocation


def shared_accesses_in(trace: Trace) -> frozenset[AccessId]:
    first_create = None
    touched_by: dict[ConcreteLocation, set[int]] = {}
    for e in trace.events:
        if e.kind == KIND_CREATE and first_create is None:
            first_create = e.seq
        if e.is_access:
            touched_by.setdefault(e.loc, set()).add(e.tid)
    if first_create is None:
        return frozenset()
    shared = {loc for loc, tids in touched_by.items() if len(tids) >= 2}
    return frozenset(
        e.access_id
        for e in trace.events
        if e.is_access and e.loc in shared and e.seq > first_create
    )


def traced_shared_accesses(traces: Iterable[Trace]) -> frozenset[AccessId]:
    out: set[AccessId] = set()
    for trace in traces:
        out |= shared_accesses_in(trace)
    return frozenset(out)


def instrumentation_gap(
    program: Program,
    instrumented: frozenset[AccessId],
    traced: frozenset[AccessId],
) -> tuple[frozenset[AccessId], float]:
    """Accesses the static side kept that no explored trace ever shared,
    and their fraction of all accesses in the program."""
    total = len(program.access_ids())
    extra = frozenset(instrumented - traced)
    ratio = 0.0 if total == 0 else len(extra) / total
    return extra, ratio
