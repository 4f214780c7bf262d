"""Small-step interpreter: memory model, traps, blocking, bounds."""

from __future__ import annotations

from raceprune.ir import parse
from raceprune.oracle import Bounds, enumerate_traces
from raceprune.oracle.interp import (
    FAULTED,
    FINISHED,
    Event,
    State,
    at_branch,
    available,
    initial_state,
    location_text,
    step,
)


def _drive(source: str, bounds: Bounds = Bounds()) -> tuple[State, list[Event]]:
    """Run every thread round-robin until nothing can move."""
    state = initial_state(parse(source), bounds)
    events: list[Event] = []
    for _ in range(10000):
        thread = next((t for t in state.threads if available(state, t)), None)
        if thread is None:
            break
        ev = step(state, thread, 0 if at_branch(thread) else None)
        if ev is not None:
            events.append(ev)
    return state, events


def test_unwritten_memory_reads_as_zero():
    source = """
    global g;
    fn main() {
      regs r, v;
      b0:
        r = &g;
        v = read *r;
        return;
    }
    """
    state = initial_state(parse(source), Bounds())
    main = state.threads[0]
    step(state, main, None)
    step(state, main, None)
    assert main.frame.regs["v"] == 0


def test_compute_sums_and_launders_addresses():
    source = """
    global g;
    fn main() {
      regs r, v, x;
      b0:
        r = &g;
        v = op r, r;
        x = read *v;
        return;
    }
    """
    state, events = _drive(source)
    # summing skips the addresses, leaving an integer, and integers trap
    # when dereferenced
    assert state.threads[0].status == FAULTED
    assert state.faulted
    assert not any(e.is_access for e in events)


def test_trap_emits_no_event_and_spares_other_threads():
    source = """
    global g;
    fn worker() {
      regs r, z;
      b0:
        r = &g;
        write *r, z;
        return;
    }
    fn main() {
      regs x;
      b0:
        create worker;
        x = read *x;
        return;
    }
    """
    for trace in enumerate_traces(parse(source)):
        assert trace.faulted
        assert trace.terminated
        main_accesses = [e for e in trace.events if e.is_access and e.tid == 1]
        assert main_accesses == []
        worker_writes = [e for e in trace.events if e.is_access and e.tid == 2]
        assert len(worker_writes) == 1
        assert worker_writes[0].abstract_loc.var == "g"


def test_unlock_without_holding_traps():
    source = """
    lock lk;
    fn main() {
      b0:
        unlock lk;
        return;
    }
    """
    state, events = _drive(source)
    assert state.threads[0].status == FAULTED
    assert events == []


def test_relocking_a_held_lock_deadlocks():
    source = """
    lock lk;
    fn main() {
      b0:
        lock lk;
        lock lk;
        return;
    }
    """
    traces = list(enumerate_traces(parse(source)))
    assert len(traces) == 1
    t = traces[0]
    assert t.deadlock
    assert not t.terminated
    assert [e.kind for e in t.events] == ["lock"]


def test_lock_blocks_the_other_thread():
    source = """
    global g;
    lock lk;
    fn worker() {
      regs r, z;
      b0:
        lock lk;
        r = &g;
        write *r, z;
        unlock lk;
        return;
    }
    fn main() {
      b0:
        create worker;
        create worker;
        return;
    }
    """
    for trace in enumerate_traces(parse(source)):
        holder = None
        for e in trace.events:
            if e.kind == "lock":
                assert holder is None
                holder = e.tid
            elif e.kind == "unlock":
                assert holder == e.tid
                holder = None


def test_thread_budget_marks_the_trace_bounded():
    source = """
    fn worker() { b0: return; }
    fn main() {
      b0:
        create worker;
        create worker;
        return;
    }
    """
    bounds = Bounds(max_threads=2)
    traces = list(enumerate_traces(parse(source), bounds))
    assert traces
    for t in traces:
        assert t.bounded
        assert not t.complete
        assert sum(1 for e in t.events if e.kind == "create") == 1


def test_loop_budget_cuts_long_runs_but_keeps_short_ones():
    source = """
    global g;
    fn main() {
      regs r, v, c;
      b0:
        r = &g;
        goto b1;
      b1:
        v = read *r;
        branch [c] b1 b2;
      b2:
        return;
    }
    """
    traces = list(enumerate_traces(parse(source), Bounds(max_loop_iters=3)))
    complete = [t for t in traces if t.complete]
    bounded = [t for t in traces if t.bounded]
    assert complete and bounded
    reads = {sum(1 for e in t.events if e.is_access) for t in complete}
    assert reads == {1, 2, 3}


def test_each_activation_gets_its_own_cells():
    source = """
    fn worker() {
      regs r, z;
      locals pad;
      b0:
        r = &pad;
        write *r, z;
        return;
    }
    fn main() {
      b0:
        create worker;
        create worker;
        return;
    }
    """
    for trace in enumerate_traces(parse(source)):
        locs = {e.loc for e in trace.events if e.is_access}
        assert len(locs) == 2
        assert {loc.var for loc in locs} == {"pad"}
        assert all(loc.frame != 0 for loc in locs)
        assert len({loc.frame for loc in locs}) == 2


def test_globals_share_one_cell_across_threads():
    source = """
    global g;
    fn worker() {
      regs r, z;
      b0:
        r = &g;
        write *r, z;
        return;
    }
    fn main() {
      b0:
        create worker;
        create worker;
        return;
    }
    """
    for trace in enumerate_traces(parse(source)):
        locs = {e.loc for e in trace.events if e.is_access}
        assert len(locs) == 1
        (loc,) = locs
        assert loc.frame == 0 and loc.func is None
        assert location_text(loc) == "g"


def test_call_passes_arguments_and_returns_values():
    source = """
    global g;
    fn id(p) {
      b0:
        return p;
    }
    fn main() {
      regs r, q, v;
      b0:
        r = &g;
        q = call id(r);
        v = read *q;
        return;
    }
    """
    state, events = _drive(source)
    assert state.threads[0].status == FINISHED
    reads = [e for e in events if e.is_access]
    assert len(reads) == 1
    assert reads[0].abstract_loc.var == "g"


def test_extern_calls_return_zero_and_emit_one_event():
    source = """
    extern mystery;
    fn main() {
      regs v, x;
      b0:
        v = call mystery();
        x = read *v;
        return;
    }
    """
    state, events = _drive(source)
    assert state.threads[0].status == FAULTED
    assert [e.kind for e in events if e.func == "main"][0] == "static_call"


def test_field_cells_are_distinct():
    source = """
    global pair { lo, hi };
    fn main() {
      regs a, b, z;
      b0:
        a = &pair.lo;
        b = &pair.hi;
        write *a, z;
        write *b, z;
        return;
    }
    """
    state, events = _drive(source)
    cells = [e.loc for e in events if e.is_access]
    assert len(set(cells)) == 2
    assert {location_text(c) for c in cells} == {"pair.lo", "pair.hi"}


def test_access_id_reconstruction():
    source = """
    global g;
    fn main() {
      regs r, v;
      b0:
        r = &g;
        v = read *r;
        return;
    }
    """
    _, events = _drive(source)
    (read,) = [e for e in events if e.is_access]
    assert read.access_id.text == "main:b0:1:r"
