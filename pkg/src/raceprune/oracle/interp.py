"""Small-step concrete interpreter.

Runs a program under one chosen interleaving, producing the event
sequence the race detectors consume.  Semantics:

* Values are integers, concrete memory locations, or function
  references.  Memory and registers are zero-initialized.
* ``op`` sums the integer values of its arguments; addresses and
  function references contribute zero, so results are always plain
  integers.
* Branches are nondeterministic; the guard text is display only.
* Extern calls are no-ops returning 0.  They touch nothing.
* Dereferencing a non-location, unlocking a lock the thread does not
  hold, and dynamically calling a non-function (or with the wrong
  arity) trap: the thread stops, the rest of the trace continues.
* ``lock`` blocks while any thread holds the lock.  A thread relocking
  a lock it already holds blocks forever.
* Every completed instruction appends one event.  Control transfers at
  block ends are not instructions and produce no events.

Locations are per-activation: each call frame gets a fresh id, so
recursion and two threads in the same function get distinct cells.
Globals live in frame 0.  The mapping onto the abstract cells used by
the static analyses is one-to-one per activation (`Event.abstract_loc`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

from ..ir import (
    AccessId,
    BasicBlock,
    Function,
    KIND_ADDR_OF_FIELD,
    KIND_ADDR_OF_FUNC,
    KIND_ADDR_OF_VAR,
    KIND_COMPUTE,
    KIND_CREATE,
    KIND_DYNAMIC_CALL,
    KIND_LOCK,
    KIND_READ,
    KIND_RETURN,
    KIND_STATIC_CALL,
    KIND_UNLOCK,
    KIND_WRITE,
    Program,
)
from ..facts import Loc


class ConcreteLocation(NamedTuple):
    frame: int  # 0 for globals, else activation id
    func: Optional[str]
    var: str
    field: Optional[str]


class FuncRef(NamedTuple):
    name: str


def location_text(loc: ConcreteLocation) -> str:
    base = loc.var if loc.field is None else f"{loc.var}.{loc.field}"
    if loc.frame == 0:
        return base
    return f"{base}@{loc.func}#{loc.frame}"


Value = Union[int, ConcreteLocation, FuncRef]


class Event(NamedTuple):
    seq: int
    tid: int
    func: str
    block: str
    index: int
    kind: str
    loc: Optional[ConcreteLocation] = None
    lock: Optional[str] = None
    child: Optional[int] = None

    @property
    def is_access(self) -> bool:
        return self.kind in (KIND_READ, KIND_WRITE)

    @property
    def access_id(self) -> AccessId:
        mode = "r" if self.kind == KIND_READ else "w"
        return AccessId(self.func, self.block, self.index, mode)

    @property
    def abstract_loc(self) -> Optional[Loc]:
        if self.loc is None:
            return None
        return Loc(self.loc.func, self.loc.var, self.loc.field)


@dataclass(frozen=True)
class Bounds:
    max_loop_iters: int = 3
    max_events: int = 10000
    max_threads: int = 8


@dataclass
class Frame:
    act_id: int
    func: Function
    block: BasicBlock
    index: int
    regs: dict[str, Value]
    ret_dst: Optional[str]
    entries: dict[str, int]

    def clone(self) -> "Frame":
        return Frame(
            self.act_id,
            self.func,
            self.block,
            self.index,
            dict(self.regs),
            self.ret_dst,
            dict(self.entries),
        )


RUNNING = "running"
FINISHED = "finished"
FAULTED = "faulted"


@dataclass
class Thread:
    tid: int
    status: str
    stack: list[Frame]

    def clone(self) -> "Thread":
        return Thread(self.tid, self.status, [f.clone() for f in self.stack])

    @property
    def frame(self) -> Frame:
        return self.stack[-1]


@dataclass
class State:
    program: Program
    bounds: Bounds
    memory: dict[ConcreteLocation, Value] = field(default_factory=dict)
    lock_holder: dict[str, int] = field(default_factory=dict)
    threads: list[Thread] = field(default_factory=list)
    next_act: int = 1
    next_tid: int = 1
    event_count: int = 0
    bounded: bool = False
    faulted: bool = False

    def clone(self) -> "State":
        return State(
            program=self.program,
            bounds=self.bounds,
            memory=dict(self.memory),
            lock_holder=dict(self.lock_holder),
            threads=[t.clone() for t in self.threads],
            next_act=self.next_act,
            next_tid=self.next_tid,
            event_count=self.event_count,
            bounded=self.bounded,
            faulted=self.faulted,
        )


def initial_state(program: Program, bounds: Bounds) -> State:
    state = State(program=program, bounds=bounds)
    _spawn(state, program.function("main"))
    return state


def _spawn(state: State, fn: Function) -> Thread:
    frame = Frame(
        act_id=state.next_act,
        func=fn,
        block=fn.entry,
        index=0,
        regs={},
        ret_dst=None,
        entries={fn.entry.name: 1},
    )
    state.next_act += 1
    thread = Thread(tid=state.next_tid, status=RUNNING, stack=[frame])
    state.next_tid += 1
    state.threads.append(thread)
    if frame.entries[fn.entry.name] > state.bounds.max_loop_iters:
        state.bounded = True
    normalize(state, thread)
    return thread


def _reg(frame: Frame, name: str) -> Value:
    return frame.regs.get(name, 0)


def at_branch(thread: Thread) -> bool:
    f = thread.frame
    return f.index >= len(f.block.instructions) and len(f.block.successors) == 2


def _enter_block(state: State, frame: Frame, name: str) -> None:
    frame.block = frame.func.block(name)
    frame.index = 0
    count = frame.entries.get(name, 0) + 1
    frame.entries[name] = count
    if count > state.bounds.max_loop_iters:
        state.bounded = True


def normalize(state: State, thread: Thread) -> None:
    """Advance through unconditional transfers until the thread sits at an
    instruction or at a two-way branch (or the state hits a bound)."""
    while not state.bounded and thread.status == RUNNING:
        f = thread.frame
        if f.index < len(f.block.instructions):
            return
        if len(f.block.successors) == 1:
            _enter_block(state, f, f.block.successors[0])
            continue
        return  # two-way branch: a scheduler choice


def available(state: State, thread: Thread) -> bool:
    """Can this thread make progress right now?"""
    if thread.status != RUNNING:
        return False
    f = thread.frame
    if f.index >= len(f.block.instructions):
        return len(f.block.successors) == 2
    instr = f.block.instructions[f.index]
    if instr.kind == KIND_LOCK:
        return instr.lock not in state.lock_holder
    return True


def step(state: State, thread: Thread, branch_arm: Optional[int]) -> Optional[Event]:
    """Execute one instruction of `thread` (resolving a pending branch
    first, using `branch_arm`).  Returns the event, or None when the step
    was pure control transfer or ended in a trap or bound."""
    f = thread.frame
    if at_branch(thread):
        assert branch_arm is not None, "branch requires a chosen arm"
        _enter_block(state, f, f.block.successors[branch_arm])
        normalize(state, thread)
        if state.bounded or at_branch(thread):
            return None
        f = thread.frame
    instr = f.block.instructions[f.index]
    kind = instr.kind
    mk = lambda **aux: Event(
        seq=state.event_count,
        tid=thread.tid,
        func=f.func.name,
        block=f.block.name,
        index=f.index,
        kind=kind,
        **aux,
    )

    def trap() -> None:
        thread.status = FAULTED
        state.faulted = True

    event: Optional[Event] = None
    if kind == KIND_LOCK:
        holder = state.lock_holder.get(instr.lock)
        assert holder is None, "scheduler stepped a blocked thread"
        state.lock_holder[instr.lock] = thread.tid
        event = mk(lock=instr.lock)
    elif kind == KIND_UNLOCK:
        if state.lock_holder.get(instr.lock) != thread.tid:
            trap()
            return None
        del state.lock_holder[instr.lock]
        event = mk(lock=instr.lock)
    elif kind == KIND_CREATE:
        if len(state.threads) >= state.bounds.max_threads:
            state.bounded = True
            return None
        child = _spawn(state, state.program.function(instr.func))
        event = mk(child=child.tid)
    elif kind == KIND_READ:
        addr = _reg(f, instr.addr)
        if not isinstance(addr, ConcreteLocation):
            trap()
            return None
        f.regs[instr.dst] = state.memory.get(addr, 0)
        event = mk(loc=addr)
    elif kind == KIND_WRITE:
        addr = _reg(f, instr.addr)
        if not isinstance(addr, ConcreteLocation):
            trap()
            return None
        state.memory[addr] = _reg(f, instr.src)
        event = mk(loc=addr)
    elif kind == KIND_COMPUTE:
        total = 0
        for a in instr.args:
            v = _reg(f, a)
            if isinstance(v, int):
                total += v
        f.regs[instr.dst] = total
        event = mk()
    elif kind == KIND_ADDR_OF_VAR:
        f.regs[instr.dst] = _var_location(f, instr.var, None)
        event = mk()
    elif kind == KIND_ADDR_OF_FIELD:
        f.regs[instr.dst] = _var_location(f, instr.var, instr.field_name)
        event = mk()
    elif kind == KIND_ADDR_OF_FUNC:
        f.regs[instr.dst] = FuncRef(instr.func)
        event = mk()
    elif kind == KIND_RETURN:
        event = mk()
        value: Value = _reg(f, instr.src) if instr.src is not None else 0
        ret_dst = f.ret_dst
        thread.stack.pop()
        state.event_count += 1
        if not thread.stack:
            thread.status = FINISHED
        else:
            caller = thread.frame
            if ret_dst is not None:
                caller.regs[ret_dst] = value
            # the caller resumes after its call instruction
            caller.index += 1
            normalize(state, thread)
        _check_event_bound(state)
        return event
    elif kind in (KIND_STATIC_CALL, KIND_DYNAMIC_CALL):
        if kind == KIND_STATIC_CALL:
            target = instr.func
            if not state.program.has_function(target):
                # extern: no-op returning 0
                if instr.dst is not None:
                    f.regs[instr.dst] = 0
                event = mk()
                _advance(state, thread)
                return event
            callee = state.program.function(target)
        else:
            fv = _reg(f, instr.fn_reg)
            if not isinstance(fv, FuncRef):
                trap()
                return None
            callee = state.program.function(fv.name)
            if len(callee.formals) != len(instr.args):
                trap()
                return None
        event = mk()
        args = [_reg(f, a) for a in instr.args]
        new = Frame(
            act_id=state.next_act,
            func=callee,
            block=callee.entry,
            index=0,
            regs=dict(zip(callee.formals, args)),
            ret_dst=instr.dst,
            entries={callee.entry.name: 1},
        )
        state.next_act += 1
        if new.entries[callee.entry.name] > state.bounds.max_loop_iters:
            state.bounded = True
        thread.stack.append(new)
        state.event_count += 1
        normalize(state, thread)
        _check_event_bound(state)
        return event
    else:  # pragma: no cover - the parser emits no other kinds
        raise AssertionError(f"unhandled instruction kind {kind!r}")

    _advance(state, thread)
    return event


def _advance(state: State, thread: Thread) -> None:
    thread.frame.index += 1
    state.event_count += 1
    normalize(state, thread)
    _check_event_bound(state)


def _check_event_bound(state: State) -> None:
    if state.event_count >= state.bounds.max_events:
        state.bounded = True


def _var_location(frame: Frame, var: str, fieldname: Optional[str]) -> ConcreteLocation:
    if any(v.name == var for v in frame.func.locals):
        return ConcreteLocation(frame.act_id, frame.func.name, var, fieldname)
    return ConcreteLocation(0, None, var, fieldname)
