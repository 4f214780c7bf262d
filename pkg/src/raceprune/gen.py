"""Seeded random program generator.

Emits small concurrent programs whose full interleaving tree stays
enumerable, so the concrete oracle can check every schedule.  Bodies
are stitched from a pattern pool that deliberately baits each analysis:
lock-protected counters, raw shared accesses, repeated same-cell
accesses with no synchronization in between, publication of local
addresses through global slots, single-threaded prefix writes, helper
and function-pointer calls, and the occasional loop, diamond, or
forgotten unlock.

The scheduling cost of a candidate is estimated up front: interleaving
two workers with e0 and e1 events plus an m-event tail in the spawning
thread costs about multinomial(e0, e1, m) schedules, times two per
executed branch.  Patterns are dropped from the heaviest thread until
the estimate fits the budget, so enumeration stays tractable while
bodies stay as busy as the budget allows.

Same seed, same source, byte for byte.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .ir import Program, parse

SCHEDULE_BUDGET = 30000
DEFAULT_MAX_INSTRUCTIONS = 40


@dataclass
class _Block:
    label: str
    lines: list[str] = field(default_factory=list)
    term: Optional[str] = None


class _Fn:
    def __init__(self, name: str, formals: tuple[str, ...] = ()):
        self.name = name
        self.formals = formals
        self.regs: list[str] = []
        self.locals: list[str] = []
        self._zero: Optional[str] = None
        self.blocks: list[_Block] = [_Block("b0")]

    @property
    def cur(self) -> _Block:
        return self.blocks[-1]

    def reg(self) -> str:
        name = f"r{len(self.regs)}"
        self.regs.append(name)
        return name

    def zero(self) -> str:
        # a register no instruction assigns; registers start at zero
        if self._zero is None:
            self._zero = f"z{len(self.regs)}"
            self.regs.append(self._zero)
        return self._zero

    def local_record(self) -> str:
        if "req { f0, f1 }" not in self.locals:
            self.locals.append("req { f0, f1 }")
        return "req"

    def emit(self, line: str) -> None:
        self.cur.lines.append(line)

    def open_block(self) -> str:
        label = f"b{len(self.blocks)}"
        self.blocks.append(_Block(label))
        return label

    def instruction_count(self) -> int:
        n = 0
        for b in self.blocks:
            n += len(b.lines)
            if b.term is None or b.term == "return;":
                n += 1
        return n

    def render(self) -> list[str]:
        out = [f"fn {self.name}({', '.join(self.formals)}) {{"]
        if self.regs:
            out.append(f"  regs {', '.join(self.regs)};")
        if self.locals:
            out.append(f"  locals {', '.join(self.locals)};")
        for b in self.blocks:
            out.append(f"  {b.label}:")
            for line in b.lines:
                out.append(f"    {line}")
            out.append(f"    {b.term or 'return;'}")
        out.append("}")
        return out


@dataclass(frozen=True)
class _Pattern:
    name: str
    instructions: int
    events: int
    multiplier: int
    apply: Callable[[_Fn], None]


def _addr(fn: _Fn, target: str) -> str:
    r = fn.reg()
    fn.emit(f"{r} = &{target};")
    return r


def _access(fn: _Fn, rng: random.Random, reg: str, write_bias: float = 0.5) -> None:
    if rng.random() < write_bias:
        fn.emit(f"write *{reg}, {fn.zero()};")
    else:
        v = fn.reg()
        fn.emit(f"{v} = read *{reg};")


class _Pool:
    """Pattern constructors; each returns a `_Pattern` whose `apply`
    appends the statements to a function body."""

    def __init__(
        self,
        rng: random.Random,
        targets: list[str],
        locks: list[str],
        extern: Optional[str],
        helper: Optional[str],
        st_targets: list[str],
    ):
        self.rng = rng
        self.targets = targets
        self.slot = targets[0]  # fixed, so publishers and consumers meet
        self.locks = locks
        self.extern = extern
        self.helper = helper
        self.helper_events = 0
        self.st_targets = st_targets

    def raw(self, target: Optional[str] = None) -> _Pattern:
        t = target or self.rng.choice(self.targets)
        b = self.rng.random()
        return _Pattern(
            "raw", 2, 2, 1,
            lambda fn: _access(fn, self.rng, _addr(fn, t), 0.3 + b * 0.5),
        )

    def locked(self, target: Optional[str] = None) -> _Pattern:
        t = target or self.rng.choice(self.targets)
        lk = self.rng.choice(self.locks)

        def apply(fn: _Fn) -> None:
            fn.emit(f"lock {lk};")
            _access(fn, self.rng, _addr(fn, t), 0.6)
            fn.emit(f"unlock {lk};")

        return _Pattern("locked", 4, 4, 1, apply)

    def repeat_after_write(self, target: Optional[str] = None) -> _Pattern:
        t = target or self.rng.choice(self.targets)

        def apply(fn: _Fn) -> None:
            r = _addr(fn, t)
            fn.emit(f"write *{r}, {fn.zero()};")
            v = fn.reg()
            fn.emit(f"{v} = read *{r};")

        return _Pattern("repeat_after_write", 3, 3, 1, apply)

    def read_then_write(self, target: Optional[str] = None) -> _Pattern:
        t = target or self.rng.choice(self.targets)

        def apply(fn: _Fn) -> None:
            r = _addr(fn, t)
            v = fn.reg()
            fn.emit(f"{v} = read *{r};")
            fn.emit(f"write *{r}, {fn.zero()};")

        return _Pattern("read_then_write", 3, 3, 1, apply)

    def lock_then_raw(self, target: Optional[str] = None) -> _Pattern:
        t = target or self.rng.choice(self.targets)
        lk = self.rng.choice(self.locks)

        def apply(fn: _Fn) -> None:
            fn.emit(f"lock {lk};")
            r = _addr(fn, t)
            fn.emit(f"write *{r}, {fn.zero()};")
            fn.emit(f"unlock {lk};")
            fn.emit(f"write *{r}, {fn.zero()};")

        return _Pattern("lock_then_raw", 5, 5, 1, apply)

    def prefix_read(self) -> _Pattern:
        t = self.rng.choice(self.st_targets)

        def apply(fn: _Fn) -> None:
            r = _addr(fn, t)
            v = fn.reg()
            fn.emit(f"{v} = read *{r};")

        return _Pattern("prefix_read", 2, 2, 1, apply)

    def publish(self) -> _Pattern:
        def apply(fn: _Fn) -> None:
            rec = fn.local_record()
            rf = _addr(fn, f"{rec}.f0")
            rs = _addr(fn, self.slot)
            fn.emit(f"write *{rs}, {rf};")

        return _Pattern("publish", 3, 3, 1, apply)

    def publish_and_touch(self) -> _Pattern:
        def apply(fn: _Fn) -> None:
            rec = fn.local_record()
            rf = _addr(fn, f"{rec}.f0")
            rs = _addr(fn, self.slot)
            fn.emit(f"write *{rs}, {rf};")
            fn.emit(f"write *{rf}, {fn.zero()};")

        return _Pattern("publish_and_touch", 4, 4, 1, apply)

    def consume(self) -> _Pattern:
        bias = self.rng.random()

        def apply(fn: _Fn) -> None:
            rs = _addr(fn, self.slot)
            p = fn.reg()
            fn.emit(f"{p} = read *{rs};")
            _access(fn, self.rng, p, 0.3 + bias * 0.4)

        return _Pattern("consume", 3, 3, 1, apply)

    def private_local(self) -> _Pattern:
        def apply(fn: _Fn) -> None:
            rec = fn.local_record()
            rf = _addr(fn, f"{rec}.f1")
            fn.emit(f"write *{rf}, {fn.zero()};")
            v = fn.reg()
            fn.emit(f"{v} = read *{rf};")

        return _Pattern("private_local", 3, 3, 1, apply)

    def extern_call(self) -> _Pattern:
        def apply(fn: _Fn) -> None:
            v = fn.reg()
            fn.emit(f"{v} = call {self.extern}();")

        return _Pattern("extern_call", 1, 1, 1, apply)

    def helper_call(self) -> _Pattern:
        return _Pattern(
            "helper_call", 1, 1 + self.helper_events, 1,
            lambda fn: fn.emit(f"call {self.helper}();"),
        )

    def fp_call(self) -> _Pattern:
        def apply(fn: _Fn) -> None:
            fp = fn.reg()
            fn.emit(f"{fp} = &&{self.helper};")
            v = fn.reg()
            fn.emit(f"{v} = call *{fp}();")

        return _Pattern("fp_call", 2, 2 + self.helper_events, 1, apply)

    def forgotten_unlock(self) -> _Pattern:
        t, lk = self.rng.choice(self.targets), self.rng.choice(self.locks)

        def apply(fn: _Fn) -> None:
            fn.emit(f"lock {lk};")
            r = _addr(fn, t)
            fn.emit(f"write *{r}, {fn.zero()};")

        return _Pattern("forgotten_unlock", 3, 3, 1, apply)

    def loop(self) -> _Pattern:
        t = self.rng.choice(self.targets)

        def apply(fn: _Fn) -> None:
            r = _addr(fn, t)
            head = fn.open_block()
            fn.blocks[-2].term = f"goto {head};"
            v = fn.reg()
            fn.emit(f"{v} = read *{r};")
            tail = f"b{len(fn.blocks)}"
            fn.cur.term = f"branch [{v}] {head} {tail};"
            fn.open_block()

        # three trips around the loop before the bound trips
        return _Pattern("loop", 2, 4, 8, apply)

    def diamond(self) -> _Pattern:
        t0 = self.rng.choice(self.targets)
        t1 = self.rng.choice(self.targets)

        def apply(fn: _Fn) -> None:
            cond = fn.reg()
            fn.emit(f"{cond} = op;")
            here = fn.cur
            left = fn.open_block()
            r0 = _addr(fn, t0)
            fn.emit(f"write *{r0}, {fn.zero()};")
            right = fn.open_block()
            r1 = _addr(fn, t1)
            v = fn.reg()
            fn.emit(f"{v} = read *{r1};")
            join = fn.open_block()
            here.term = f"branch [{cond}] {left} {right};"
            fn.blocks[-3].term = f"goto {join};"
            fn.blocks[-2].term = f"goto {join};"

        return _Pattern("diamond", 5, 3, 2, apply)


def _estimate(worker_events: list[int], tail: int, multipliers: list[int]) -> int:
    est = 1
    acc = 0
    for n in worker_events + [tail]:
        acc += n
        est *= math.comb(acc, n)
    for m in multipliers:
        est *= m
    return est


def generate_source(seed: int, max_instructions: int = DEFAULT_MAX_INSTRUCTIONS) -> str:
    rng = random.Random(seed)
    n_globals = rng.randint(2, 4)
    scalars = [f"g{i}" for i in range(n_globals)]
    record = rng.random() < 0.35
    targets = list(scalars) + (["rec.h0", "rec.h1"] if record else [])
    locks = [f"lk{i}" for i in range(rng.randint(1, 2))]
    extern = "ext0" if rng.random() < 0.3 else None

    roll = rng.random()
    n_workers = 0 if roll < 0.1 else (1 if roll < 0.6 else 2)

    fns: list[_Fn] = []

    setup: Optional[_Fn] = None
    st_targets: list[str] = []
    if n_workers and rng.random() < 0.6:
        setup = _Fn("setup")
        for t in rng.sample(scalars, rng.randint(1, min(2, len(scalars)))):
            r = _addr(setup, t)
            setup.emit(f"write *{r}, {setup.zero()};")
            st_targets.append(t)
        fns.append(setup)

    helper: Optional[_Fn] = None
    if rng.random() < 0.35:
        helper = _Fn("h0")
        pool0 = _Pool(rng, targets, locks, None, None, st_targets)
        pat = pool0.locked() if rng.random() < 0.5 else pool0.raw()
        pat.apply(helper)
        helper_events = pat.events + 1  # plus its return
        fns.append(helper)
    else:
        helper_events = 0

    pool = _Pool(
        rng, targets, locks, extern,
        helper.name if helper else None, st_targets,
    )
    pool.helper_events = helper_events

    weighted: list[tuple[Callable[[], _Pattern], float]] = [
        (pool.raw, 3.0),
        (pool.locked, 2.5),
        (pool.repeat_after_write, 1.5),
        (pool.read_then_write, 1.5),
        (pool.lock_then_raw, 1.0),
    ]
    if st_targets:
        weighted.append((pool.prefix_read, 1.5))
    weighted.append((pool.publish, 0.5))
    weighted.append((pool.publish_and_touch, 1.0))
    weighted.append((pool.consume, 1.0))
    weighted.append((pool.private_local, 1.2))
    if extern:
        weighted.append((pool.extern_call, 0.8))
    if helper:
        weighted.append((pool.helper_call, 0.8))
        weighted.append((pool.fp_call, 0.4))
    weighted.append((pool.forgotten_unlock, 0.25))
    if n_workers <= 1:
        weighted.append((pool.loop, 0.8))
        weighted.append((pool.diamond, 0.6))
    else:
        weighted.append((pool.diamond, 0.3))
    makers = [w[0] for w in weighted]
    weights = [w[1] for w in weighted]

    def plan_body(event_target: int) -> list[_Pattern]:
        plan: list[_Pattern] = []
        events = 0
        while events < event_target:
            pat = rng.choices(makers, weights)[0]()
            plan.append(pat)
            events += pat.events
        return plan

    protected: list[_Pattern] = []
    if n_workers == 2:
        worker_names = ["w0", "w0"] if rng.random() < 0.4 else ["w0", "w1"]
        plans = {"w0": plan_body(rng.randint(3, 6))}
        if "w1" in worker_names:
            plans["w1"] = plan_body(rng.randint(3, 6))

        def inject_same_routine() -> None:
            # shared routine: both threads run one identical access
            # sequence against a cell nothing else touches, so the
            # contention lines up on exactly one cell and one lock
            scalars.append("gs")
            maker = rng.choices(
                [pool.lock_then_raw, pool.locked, pool.raw,
                 pool.repeat_after_write, pool.read_then_write],
                [0.35, 0.2, 0.2, 0.15, 0.1],
            )[0]
            shared = maker(target="gs")
            for plan in plans.values():
                plan.insert(0, shared)
            protected.append(shared)

        roll = rng.random()
        if roll < 0.40:
            inject_same_routine()
        elif roll < 0.60:
            if len(plans) == 2:
                # one side hands out the address of its scratch record,
                # the other chases whatever the slot holds
                pub = pool.publish_and_touch()
                con = pool.consume()
                plans["w0"].insert(0, pub)
                plans["w1"].insert(0, con)
                protected.extend([pub, con])
            else:
                inject_same_routine()
        tail_access = False
    elif n_workers == 1:
        worker_names = ["w0"]
        plans = {"w0": plan_body(rng.randint(4, 10))}
        tail_access = rng.random() < 0.35
    else:
        worker_names = []
        plans = {"main": plan_body(rng.randint(4, 12))}
        tail_access = False

    def plan_events(name: str) -> int:
        return sum(p.events for p in plans[name]) + 1  # body plus return

    def current_estimate() -> int:
        if not worker_names:
            mults = [p.multiplier for p in plans["main"] if p.multiplier > 1]
            return _estimate([], 0, mults)
        per_thread = [plan_events(n) for n in worker_names]
        tail = (len(worker_names) - 1) + (2 if tail_access else 0) + 1
        mults = [
            p.multiplier
            for n in worker_names
            for p in plans[n]
            if p.multiplier > 1
        ]
        return _estimate(per_thread, tail, mults)

    def fixed_instructions() -> int:
        n = sum(f.instruction_count() for f in fns)
        n += 1  # main's return
        n += 1 if setup else 0  # the call to setup
        n += len(worker_names)  # creates
        n += 2 if tail_access else 0
        return n

    def plan_instructions() -> int:
        return sum(p.instructions for plan in plans.values() for p in plan) + len(plans)

    # Trim until both budgets hold: heaviest plan first, and the
    # injected rendezvous patterns only once nothing else is left,
    # so cross-thread contention survives the cut.
    protected_ids = {id(p) for p in protected}

    def pop_one() -> bool:
        by_weight = sorted(
            plans, key=lambda n: -sum(p.events for p in plans[n])
        )
        for name in by_weight:
            plan = plans[name]
            for i in range(len(plan) - 1, -1, -1):
                if id(plan[i]) not in protected_ids:
                    plan.pop(i)
                    return True
        return False

    while True:
        over_schedule = current_estimate() > SCHEDULE_BUDGET
        over_size = fixed_instructions() + plan_instructions() > max_instructions
        if not over_schedule and not over_size:
            break
        if pop_one():
            continue
        if tail_access:
            tail_access = False
            continue
        break

    for name in dict.fromkeys(worker_names):
        fn = _Fn(name)
        for pat in plans[name]:
            pat.apply(fn)
        fns.append(fn)

    main = _Fn("main")
    if setup:
        main.emit("call setup();")
    if n_workers == 0:
        for pat in plans["main"]:
            pat.apply(main)
    for name in worker_names:
        main.emit(f"create {name};")
    if tail_access:
        t = pool.slot if rng.random() < 0.6 else rng.choice(targets)
        _access(main, rng, _addr(main, t), 0.5)
    fns.append(main)

    lines = [f"# generated: seed={seed}", ""]
    for g in scalars:
        lines.append(f"global {g};")
    if record:
        lines.append("global rec { h0, h1 };")
    for lk in locks:
        lines.append(f"lock {lk};")
    if extern:
        lines.append(f"extern {extern};")
    lines.append("")
    for f in fns:
        lines.extend(f.render())
        lines.append("")
    return "\n".join(lines)


def generate_program(seed: int, max_instructions: int = DEFAULT_MAX_INSTRUCTIONS) -> Program:
    return parse(generate_source(seed, max_instructions))


def iter_corpus(
    count: int, start_seed: int = 0, max_instructions: int = DEFAULT_MAX_INSTRUCTIONS
) -> Iterator[tuple[int, Program]]:
    for seed in range(start_seed, start_seed + count):
        yield seed, generate_program(seed, max_instructions)
