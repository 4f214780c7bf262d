"""Interleaving enumeration and sampling.

`enumerate_traces` walks the full scheduling tree depth-first, yielding
one `Trace` per maximal interleaving.  A scheduling point offers one
choice per available thread, and two per thread sitting at a two-way
branch.  The interpreter state is cloned only at points with more than
one choice; single-choice runs advance in place.  The event list is
shared down the recursion and truncated on backtrack, so a trace costs
one list copy when yielded.

Traces end when no thread can make progress.  Flags:

* terminated: every thread ran to completion (faults included).
* deadlock: some live thread is stuck on a lock forever.
* bounded: a loop, event, or thread budget was exceeded; the trace is a
  proper prefix of at least one longer interleaving.
* faulted: at least one thread trapped.

`sample_traces` draws complete interleavings uniformly at each choice
point using a seeded `random.Random`, for programs whose full tree is
out of reach.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterator, Optional

from ..ir import Program
from .interp import (
    Bounds,
    Event,
    RUNNING,
    State,
    Thread,
    at_branch,
    available,
    initial_state,
    step,
)


@dataclass(frozen=True)
class Trace:
    events: tuple[Event, ...]
    terminated: bool
    deadlock: bool
    bounded: bool
    faulted: bool

    @property
    def complete(self) -> bool:
        return not self.bounded


Choice = tuple[int, Optional[int]]  # (thread index, branch arm)


def _choices(state: State) -> list[Choice]:
    out: list[Choice] = []
    for i, t in enumerate(state.threads):
        if not available(state, t):
            continue
        if at_branch(t):
            out.append((i, 0))
            out.append((i, 1))
        else:
            out.append((i, None))
    return out


def _finish(state: State, events: list[Event]) -> Trace:
    stuck = any(t.status == RUNNING for t in state.threads)
    return Trace(
        events=tuple(events),
        terminated=not stuck and not state.bounded,
        deadlock=stuck and not state.bounded,
        bounded=state.bounded,
        faulted=state.faulted,
    )


def _apply(state: State, events: list[Event], choice: Choice) -> None:
    ev = step(state, state.threads[choice[0]], choice[1])
    if ev is not None:
        events.append(ev)


def enumerate_traces(program: Program, bounds: Bounds = Bounds()) -> Iterator[Trace]:
    events: list[Event] = []

    def walk(state: State) -> Iterator[Trace]:
        while True:
            if state.bounded:
                yield _finish(state, events)
                return
            choices = _choices(state)
            if not choices:
                yield _finish(state, events)
                return
            if len(choices) == 1:
                _apply(state, events, choices[0])
                continue
            mark = len(events)
            for choice in choices:
                child = state.clone()
                _apply(child, events, choice)
                yield from walk(child)
                del events[mark:]
            return

    yield from walk(initial_state(program, bounds))


def count_schedules(program: Program, bounds: Bounds = Bounds(), cap: int = 10**6) -> int:
    """Number of maximal traces, stopping early once `cap` is reached."""
    n = 0
    for _ in enumerate_traces(program, bounds):
        n += 1
        if n >= cap:
            break
    return n


def sample_traces(
    program: Program,
    count: int,
    seed: int,
    bounds: Bounds = Bounds(),
) -> Iterator[Trace]:
    rng = random.Random(seed)
    for _ in range(count):
        state = initial_state(program, bounds)
        events: list[Event] = []
        while not state.bounded:
            choices = _choices(state)
            if not choices:
                break
            _apply(state, events, rng.choice(choices))
        yield _finish(state, events)
