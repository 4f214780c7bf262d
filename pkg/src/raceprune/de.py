"""Redundant-access elimination.

Within one function, an access is redundant when another access (its
witness) touches the same cell on every execution that reaches the
access, with no intervening synchronization that could change which
events the two are ordered against.  Any race the redundant access
participates in then shows up at the witness too, so the redundant one
needs no instrumentation.

Two symmetric phases:

* Domination: the witness executes before the access.  Paths from the
  witness to the access must be free of release-like operations
  (``unlock``, ``create``) and extern calls; those could order the
  witness before a foreign event that still races the access.

* Post-domination: the witness executes after the access.  Paths from
  the access to the witness must be free of acquire-like operations
  (``lock``) and extern calls, and the witness must actually be reached:
  by default this phase proves inevitability (no loop, call, or
  possibly-faulting instruction sits between access and witness), while
  ``optimistic_termination`` assumes loops terminate and calls return.

Witness/access pairs must be must-aliases: both address registers carry
the same singleton points-to cell, and for stack cells each register is
only ever assigned the address of that one variable in this function,
pinning both to the current activation.  A write may only be covered by
a write; a read by either mode.  Witnesses are never eliminated
themselves, so every recorded witness survives into the final
instrumented set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from .ir import (
    AccessId,
    CfgView,
    Function,
    Instruction,
    KIND_ADDR_OF_FIELD,
    KIND_ADDR_OF_VAR,
    KIND_CREATE,
    KIND_DYNAMIC_CALL,
    KIND_LOCK,
    KIND_READ,
    KIND_STATIC_CALL,
    KIND_UNLOCK,
    KIND_WRITE,
    Program,
    VIRTUAL_EXIT,
    build_cfg,
)
from .facts import CallGraph, DominanceInfo, Loc, PointsToInfo, compute_dominance
from .analyses.lockset import LockOwnership

Point = tuple[str, int]
EXIT_POINT: Point = (VIRTUAL_EXIT, 0)


@dataclass(frozen=True)
class SyncClassification:
    """Which instruction kinds act as barriers in each direction."""

    release_kinds: tuple[str, ...] = (KIND_UNLOCK, KIND_CREATE)
    acquire_kinds: tuple[str, ...] = (KIND_LOCK,)


@dataclass(frozen=True)
class DeConfig:
    enable_postdom: bool = True
    optimistic_termination: bool = False
    faults: frozenset[str] = frozenset()

    def classification(self) -> SyncClassification:
        if "de.ignore_release_like" in self.faults:
            return SyncClassification(release_kinds=())
        return SyncClassification()


@dataclass(frozen=True)
class Elimination:
    access: AccessId
    phase: str  # "de_dom" | "de_postdom"
    witness: AccessId


@dataclass
class RedundantSet:
    eliminated: dict[AccessId, Elimination] = field(default_factory=dict)
    kept: frozenset[AccessId] = frozenset()


def _callee_functions(program: Program, cg: CallGraph, instr: Instruction) -> list[str]:
    if instr.kind == KIND_STATIC_CALL:
        return [instr.func] if program.has_function(instr.func) else []
    return [
        g
        for g in sorted(cg.address_taken)
        if len(program.function(g).formals) == len(instr.args)
    ]


def sync_free_functions(
    program: Program, cg: CallGraph, barrier_kinds: tuple[str, ...]
) -> dict[str, bool]:
    """Functions that, transitively, execute no barrier-kind instruction
    and no extern call on the caller's thread."""
    free = {f.name: True for f in program.functions}
    callees: dict[str, set[str]] = {f.name: set() for f in program.functions}
    for fn in program.functions:
        for block in fn.blocks:
            for instr in block.instructions:
                if instr.kind in barrier_kinds:
                    free[fn.name] = False
                elif instr.kind == KIND_STATIC_CALL:
                    if program.has_function(instr.func):
                        callees[fn.name].add(instr.func)
                    else:
                        free[fn.name] = False  # extern
                elif instr.kind == KIND_DYNAMIC_CALL:
                    callees[fn.name].update(_callee_functions(program, cg, instr))
    changed = True
    while changed:
        changed = False
        for f, gs in callees.items():
            if free[f] and any(not free[g] for g in gs):
                free[f] = False
                changed = True
    return free


def _direct_addressing(fn: Function, program: Program) -> tuple[dict[str, Loc], set[str]]:
    """Per register: the single cell it is pinned to (every assignment is
    an addr-of of that same scalar variable or field), and the set of
    registers that always hold *some* variable address when assigned."""
    local_names = {v.name for v in fn.locals}

    def addressed(instr: Instruction) -> Optional[Loc]:
        owner = fn.name if instr.var in local_names else None
        if instr.kind == KIND_ADDR_OF_FIELD:
            return Loc(owner, instr.var, instr.field_name)
        decl = (
            next(v for v in fn.locals if v.name == instr.var)
            if owner
            else program.global_decl(instr.var)
        )
        if decl is not None and decl.is_aggregate:
            return None  # base pointer: valid address, but not one cell
        return Loc(owner, instr.var, None)

    defs: dict[str, list[Instruction]] = {}
    for block in fn.blocks:
        for instr in block.instructions:
            if instr.dst is not None:
                defs.setdefault(instr.dst, []).append(instr)

    pinned: dict[str, Loc] = {}
    always_addr: set[str] = set()
    for reg, instrs in defs.items():
        if reg in fn.formals:
            continue  # also assigned by callers
        if not all(
            d.kind in (KIND_ADDR_OF_VAR, KIND_ADDR_OF_FIELD) for d in instrs
        ):
            continue
        always_addr.add(reg)
        cells = {addressed(d) for d in instrs}
        if len(cells) == 1 and None not in cells:
            pinned[reg] = cells.pop()
    return pinned, always_addr


def _definitely_assigned(fn: Function) -> dict[Point, frozenset[str]]:
    """Registers assigned on every path reaching each instruction point."""
    all_regs = frozenset(fn.all_regs)
    entry_val = frozenset(fn.formals)
    block_in: dict[str, frozenset[str]] = {b.name: all_regs for b in fn.blocks}
    block_in[fn.entry.name] = entry_val
    block_out: dict[str, frozenset[str]] = {}
    preds: dict[str, list[str]] = {b.name: [] for b in fn.blocks}
    for b in fn.blocks:
        for s in b.successors:
            preds[s].append(b.name)
    at: dict[Point, frozenset[str]] = {}
    changed = True
    while changed:
        changed = False
        for b in fn.blocks:
            assigned = entry_val if b.name == fn.entry.name else all_regs
            for p in preds[b.name]:
                assigned &= block_out.get(p, all_regs)
            if b.name != fn.entry.name and not preds[b.name]:
                assigned = all_regs  # unreachable: vacuous
            if assigned != block_in[b.name]:
                block_in[b.name] = assigned
                changed = True
            cur = block_in[b.name]
            for i, instr in enumerate(b.instructions):
                at[(b.name, i)] = cur
                if instr.dst is not None:
                    cur = cur | {instr.dst}
            if block_out.get(b.name) != cur:
                block_out[b.name] = cur
                changed = True
    return at


class _FnContext:
    """Point graph of one function plus everything the checks consult.

    Points are (block, i) for i in 0..len(instructions); the edge from
    (b, i) to (b, i+1) executes instruction i, and the edge out of
    (b, len) transfers control to a successor block (or the exit)."""

    def __init__(
        self,
        program: Program,
        cg: CallGraph,
        pti: PointsToInfo,
        lo: LockOwnership,
        fn: Function,
        config: DeConfig,
        release_free: dict[str, bool],
        acquire_free: dict[str, bool],
    ):
        self.program = program
        self.cg = cg
        self.pti = pti
        self.lo = lo
        self.fn = fn
        self.config = config
        self.sync = config.classification()
        self.release_free = release_free
        self.acquire_free = acquire_free
        self.cfg: CfgView = build_cfg(fn)
        self.dom: DominanceInfo = compute_dominance(self.cfg)
        self.pinned, self.always_addr = _direct_addressing(fn, program)
        self.assigned = _definitely_assigned(fn)

        self.instr_at: dict[Point, Instruction] = {}
        self.succ: dict[Point, list[Point]] = {}
        self.pred: dict[Point, list[Point]] = {EXIT_POINT: []}
        for b in fn.blocks:
            n = len(b.instructions)
            for i, instr in enumerate(b.instructions):
                self.instr_at[(b.name, i)] = instr
                self.succ[(b.name, i)] = [(b.name, i + 1)]
            targets = [(s, 0) for s in b.successors] or [EXIT_POINT]
            self.succ[(b.name, n)] = targets
        self.succ[EXIT_POINT] = []
        for u, vs in self.succ.items():
            for v in vs:
                self.pred.setdefault(v, []).append(u)
        for u in self.succ:
            self.pred.setdefault(u, [])

    # -- reachability ---------------------------------------------------

    def _reach(self, start: Point, edges: dict[Point, list[Point]]) -> set[Point]:
        seen = {start}
        frontier = [start]
        while frontier:
            p = frontier.pop()
            for q in edges.get(p, ()):
                if q not in seen:
                    seen.add(q)
                    frontier.append(q)
        return seen

    def _edges_between(self, start: Point, target: Point) -> Iterator[tuple[Point, Instruction]]:
        """Instruction edges that can lie on some path start ->* target.

        Paths are not cut at intermediate occurrences of the target, so a
        loop that revisits the access is inspected too; that errs toward
        rejecting eliminations."""
        fwd = self._reach(start, self.succ)
        bwd = self._reach(target, self.pred)
        for point, instr in self.instr_at.items():
            after = (point[0], point[1] + 1)
            if point in fwd and after in bwd:
                yield point, instr

    # -- barrier and fault classification --------------------------------

    def _call_free(self, instr: Instruction, free: dict[str, bool]) -> bool:
        if instr.kind == KIND_STATIC_CALL and not self.program.has_function(instr.func):
            return False
        return all(free[g] for g in _callee_functions(self.program, self.cg, instr))

    def _release_barrier(self, instr: Instruction) -> bool:
        if instr.kind in self.sync.release_kinds:
            return True
        if instr.is_call:
            return not self._call_free(instr, self.release_free)
        return False

    def _acquire_barrier(self, instr: Instruction) -> bool:
        if instr.kind in self.sync.acquire_kinds:
            return True
        if instr.is_call:
            return not self._call_free(instr, self.acquire_free)
        return False

    def _may_fault_or_diverge(self, point: Point, instr: Instruction) -> bool:
        """Could this instruction stop control from reaching the point
        after it?  Traps (bad dereference, unlocking a lock not held) and
        calls (which may loop forever or fault inside) count; straight
        data flow does not."""
        kind = instr.kind
        if instr.is_call:
            return True
        if kind in (KIND_READ, KIND_WRITE):
            if instr.addr not in self.always_addr:
                return True
            return instr.addr not in self.assigned[point]
        if kind == KIND_UNLOCK:
            held = self.lo.held_at.get((self.fn.name, point[0], point[1]), frozenset())
            return instr.lock not in held
        return False

    # -- path checks ------------------------------------------------------

    def release_free_between(self, witness: AccessId, access: AccessId) -> bool:
        start = (witness.block, witness.index + 1)
        target = (access.block, access.index)
        return not any(
            self._release_barrier(instr) for _p, instr in self._edges_between(start, target)
        )

    def acquire_free_between(self, access: AccessId, witness: AccessId) -> bool:
        start = (access.block, access.index + 1)
        target = (witness.block, witness.index)
        for point, instr in self._edges_between(start, target):
            if self._acquire_barrier(instr):
                return False
            if not self.config.optimistic_termination and self._may_fault_or_diverge(
                point, instr
            ):
                return False
        return True

    def witness_inevitable(self, access: AccessId, witness: AccessId) -> bool:
        """With the witness point removed, nothing is reachable from the
        point after the access that could avoid it: neither the exit nor
        any cycle to loop in."""
        start = (access.block, access.index + 1)
        wpoint = (witness.block, witness.index)
        if start == wpoint:
            return True
        seen = {start}
        frontier = [start]
        while frontier:
            p = frontier.pop()
            for q in self.succ.get(p, ()):
                if q == wpoint:
                    continue
                if q == EXIT_POINT:
                    return False
                if q not in seen:
                    seen.add(q)
                    frontier.append(q)
        # Cycle detection on the induced subgraph by peeling.
        indeg = {p: 0 for p in seen}
        for p in seen:
            for q in self.succ.get(p, ()):
                if q != wpoint and q in seen:
                    indeg[q] += 1
        queue = [p for p, d in indeg.items() if d == 0]
        removed = 0
        while queue:
            p = queue.pop()
            removed += 1
            for q in self.succ.get(p, ()):
                if q != wpoint and q in seen:
                    indeg[q] -= 1
                    if indeg[q] == 0:
                        queue.append(q)
        return removed == len(seen)

    # -- aliasing ---------------------------------------------------------

    def must_alias(self, a: AccessId, b: AccessId) -> bool:
        instr_a = self.instr_at[(a.block, a.index)]
        instr_b = self.instr_at[(b.block, b.index)]
        pa = self.pti.pt(self.fn.name, instr_a.addr)
        pb = self.pti.pt(self.fn.name, instr_b.addr)
        if len(pa) != 1 or pa != pb:
            return False
        (cell,) = pa
        if not isinstance(cell, Loc):
            return False
        if cell.func is None:
            return True  # one concrete cell program-wide
        # Stack cell: both registers must be pinned to it by direct
        # addressing, which ties them to the current activation.
        return (
            self.pinned.get(instr_a.addr) == cell
            and self.pinned.get(instr_b.addr) == cell
        )

    def modes_ok(self, access: AccessId, witness: AccessId) -> bool:
        return access.mode == "r" or witness.mode == "w"


def _position_before(dom: DominanceInfo, w: AccessId, a: AccessId) -> bool:
    if w.block == a.block:
        return w.index < a.index
    return dom.dominates(w.block, a.block)


def _position_after(dom: DominanceInfo, w: AccessId, a: AccessId) -> bool:
    if w.block == a.block:
        return w.index > a.index
    return dom.postdominates(w.block, a.block)


def _ordered_candidates(
    ctx: _FnContext, candidates: list[AccessId], blocks: list[str], reverse_in_block: bool
) -> list[AccessId]:
    by_block: dict[str, list[AccessId]] = {}
    for a in candidates:
        by_block.setdefault(a.block, []).append(a)
    out: list[AccessId] = []
    listed = set(blocks)
    all_blocks = list(blocks) + [
        b.name for b in ctx.fn.blocks if b.name not in listed
    ]
    for b in all_blocks:
        group = sorted(by_block.get(b, []), key=lambda a: a.index, reverse=reverse_in_block)
        out.extend(group)
    return out


def apply_de(
    program: Program,
    cg: CallGraph,
    pti: PointsToInfo,
    lo: LockOwnership,
    candidates: frozenset[AccessId],
    config: DeConfig = DeConfig(),
) -> RedundantSet:
    """Partition ``candidates`` into kept accesses and eliminations.

    Applying the result again to its own kept set eliminates nothing
    further: every witness is kept, and every judgment is derived from
    facts of the program, not from the candidate set."""
    sync = config.classification()
    release_free = sync_free_functions(program, cg, sync.release_kinds)
    acquire_free = sync_free_functions(program, cg, sync.acquire_kinds)

    eliminated: dict[AccessId, Elimination] = {}
    kept: set[AccessId] = set()

    by_fn: dict[str, list[AccessId]] = {}
    for a in sorted(candidates):
        by_fn.setdefault(a.func, []).append(a)

    for fn in program.functions:
        cands = by_fn.get(fn.name)
        if not cands:
            continue
        ctx = _FnContext(
            program, cg, pti, lo, fn, config, release_free, acquire_free
        )

        dom_order = _ordered_candidates(
            ctx, cands, [b for b in ctx.dom.dom_preorder if b != VIRTUAL_EXIT], False
        )
        fn_kept: list[AccessId] = []
        for a in dom_order:
            witness = None
            for w in reversed(fn_kept):
                if (
                    _position_before(ctx.dom, w, a)
                    and ctx.modes_ok(a, w)
                    and ctx.must_alias(a, w)
                    and ctx.release_free_between(w, a)
                ):
                    witness = w
                    break
            if witness is None:
                fn_kept.append(a)
            else:
                eliminated[a] = Elimination(a, "de_dom", witness)

        if config.enable_postdom:
            protected = {e.witness for e in eliminated.values()}
            pdom_order = _ordered_candidates(
                ctx,
                fn_kept,
                [b for b in ctx.dom.pdom_preorder if b != VIRTUAL_EXIT],
                True,
            )
            decided: list[AccessId] = []
            for a in pdom_order:
                witness = None
                if a not in protected and ctx.dom.reaches_exit(a.block):
                    for w in reversed(decided):
                        if (
                            _position_after(ctx.dom, w, a)
                            and ctx.modes_ok(a, w)
                            and ctx.must_alias(a, w)
                            and ctx.acquire_free_between(a, w)
                            and (
                                config.optimistic_termination
                                or ctx.witness_inevitable(a, w)
                            )
                        ):
                            witness = w
                            break
                if witness is None:
                    decided.append(a)
                else:
                    eliminated[a] = Elimination(a, "de_postdom", witness)
            kept.update(decided)
        else:
            kept.update(fn_kept)

    return RedundantSet(eliminated=eliminated, kept=frozenset(kept))
