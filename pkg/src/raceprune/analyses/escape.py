"""Escape analysis for registers and memory cells.

Determines which cells can be reached by more than one thread (or by
unknown extern code).  Accesses confined to cells that never escape the
activation that owns them cannot race: every concrete touch of such a
cell happens on the thread that created it.

"Escaped" here means shared in the widest sense.  Global cells and
extern-reachable cells are escaped from the start; the rules then close
the set:

  * a returned register escapes, and so does every call result,
  * arguments passed to externs escape,
  * loading through an escaped pointer yields an escaped value, and
    storing through one taints the stored value,
  * a computation over an escaped value is escaped,
  * escape crosses call boundaries in both directions (escaped actuals
    taint formals; a formal found escaped in the callee taints the
    actuals at every site),
  * a register pointing at any escaped cell is escaped, and every cell
    an escaped register can point at is escaped,
  * whatever an escaped cell stores, or aggregates over, is escaped.

Field accuracy follows the points-to facts: taking ``&v.f`` and leaking
it escapes only the ``f`` cell of ``v``; leaking ``&v`` escapes the base
cell and every field.

Two solver strategies are provided: a dependency-driven worklist (the
default) and a naive reapply-everything iteration; they compute the same
least fixed point and the tests hold them to that.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..ir import (
    AccessId,
    KIND_COMPUTE,
    KIND_DYNAMIC_CALL,
    KIND_READ,
    KIND_RETURN,
    KIND_STATIC_CALL,
    KIND_WRITE,
    Program,
    iter_instructions,
)
from ..facts import CallGraph, Loc, PointsToInfo, loc_sort_key

Reg = tuple[str, str]


@dataclass
class EscapeResult:
    escaped_regs: frozenset[Reg]
    escaped_cells: frozenset[Loc]
    summaries: dict[str, tuple[bool, ...]]

    def reg_escapes(self, func: str, reg: str) -> bool:
        return (func, reg) in self.escaped_regs

    def cell_escapes(self, loc: Loc) -> bool:
        return loc in self.escaped_cells


def _callee_functions(program: Program, cg: CallGraph, instr) -> list[str]:
    if instr.kind == KIND_STATIC_CALL:
        return [instr.func] if program.has_function(instr.func) else []
    return [
        g
        for g in sorted(cg.address_taken)
        if len(program.function(g).formals) == len(instr.args)
    ]


def _seed(
    program: Program, cg: CallGraph, pti: PointsToInfo
) -> tuple[set[Reg], set[Loc]]:
    regs: set[Reg] = set()
    cells: set[Loc] = set(c for c in pti.all_cells if c.func is None)
    cells.update(pti.extern_exposed)
    for fn, _block, _i, instr in iter_instructions(program):
        if instr.kind == KIND_RETURN and instr.src is not None:
            regs.add((fn.name, instr.src))
        elif instr.kind in (KIND_STATIC_CALL, KIND_DYNAMIC_CALL):
            if instr.dst is not None:
                regs.add((fn.name, instr.dst))
            if instr.kind == KIND_STATIC_CALL and not program.has_function(instr.func):
                for arg in instr.args:
                    regs.add((fn.name, arg))
    return regs, cells


def compute_escape(
    program: Program,
    cg: CallGraph,
    pti: PointsToInfo,
    method: str = "worklist",
    faults: frozenset[str] = frozenset(),
) -> EscapeResult:
    """Close the escape rules over the whole program.

    The "ea.ignore_store_escape" fault models a solver that forgets
    memory is a channel: stored values no longer escape, loaded values
    are no longer escaped, and the contents of escaped cells stay
    private.  It exists so the execution oracle can demonstrate the
    resulting eliminations are unsound; never enable it for real runs.
    """
    through_memory = "ea.ignore_store_escape" not in faults
    if method == "worklist":
        esc_regs, esc_cells = _solve_worklist(program, cg, pti, through_memory)
    elif method == "kleene":
        esc_regs, esc_cells = _solve_kleene(program, cg, pti, through_memory)
    else:
        raise ValueError(f"unknown method {method!r}")
    summaries = {
        fn.name: tuple((fn.name, formal) in esc_regs for formal in fn.formals)
        for fn in program.functions
    }
    return EscapeResult(
        escaped_regs=frozenset(esc_regs),
        escaped_cells=frozenset(esc_cells),
        summaries=summaries,
    )


def _solve_worklist(
    program: Program, cg: CallGraph, pti: PointsToInfo, through_memory: bool = True
) -> tuple[set[Reg], set[Loc]]:
    pt_inv: dict[Loc, list[Reg]] = {}
    for (func, reg), pointees in pti.reg_pt.items():
        for p in pointees:
            if isinstance(p, Loc):
                pt_inv.setdefault(p, []).append((func, reg))

    read_dsts: dict[Reg, list[str]] = {}
    write_srcs: dict[Reg, list[str]] = {}
    compute_dsts: dict[Reg, list[str]] = {}
    actual_to_formals: dict[Reg, list[Reg]] = {}
    formal_to_actuals: dict[Reg, list[Reg]] = {}
    for fn, _block, _i, instr in iter_instructions(program):
        if instr.kind == KIND_READ:
            read_dsts.setdefault((fn.name, instr.addr), []).append(instr.dst)
        elif instr.kind == KIND_WRITE:
            write_srcs.setdefault((fn.name, instr.addr), []).append(instr.src)
        elif instr.kind == KIND_COMPUTE:
            for a in instr.args:
                compute_dsts.setdefault((fn.name, a), []).append(instr.dst)
        elif instr.kind in (KIND_STATIC_CALL, KIND_DYNAMIC_CALL):
            for g in _callee_functions(program, cg, instr):
                formals = program.function(g).formals
                for actual, formal in zip(instr.args, formals):
                    actual_to_formals.setdefault((fn.name, actual), []).append(
                        (g, formal)
                    )
                    formal_to_actuals.setdefault((g, formal), []).append(
                        (fn.name, actual)
                    )

    fields_of: dict[Loc, list[Loc]] = {}
    for loc in pti.all_cells:
        if loc.field is not None:
            base = Loc(loc.func, loc.var, None)
            fields_of.setdefault(base, []).append(loc)

    esc_regs, esc_cells = _seed(program, cg, pti)
    work: list[tuple[str, object]] = [("r", r) for r in sorted(esc_regs)]
    work += [("c", c) for c in sorted(esc_cells, key=loc_sort_key)]

    def add_reg(r: Reg) -> None:
        if r not in esc_regs:
            esc_regs.add(r)
            work.append(("r", r))

    def add_cell(c: Loc) -> None:
        if c not in esc_cells:
            esc_cells.add(c)
            work.append(("c", c))

    while work:
        tag, item = work.pop()
        if tag == "r":
            func, reg = item  # type: ignore[misc]
            for p in pti.pt(func, reg):
                if isinstance(p, Loc):
                    add_cell(p)
            if through_memory:
                for dst in read_dsts.get((func, reg), ()):
                    add_reg((func, dst))
                for src in write_srcs.get((func, reg), ()):
                    add_reg((func, src))
            for dst in compute_dsts.get((func, reg), ()):
                add_reg((func, dst))
            for other in actual_to_formals.get((func, reg), ()):
                add_reg(other)
            for other in formal_to_actuals.get((func, reg), ()):
                add_reg(other)
        else:
            loc = item  # type: ignore[assignment]
            for f in fields_of.get(loc, ()):
                add_cell(f)
            if through_memory:
                for p in pti.contents(loc):
                    if isinstance(p, Loc):
                        add_cell(p)
            for r in pt_inv.get(loc, ()):
                add_reg(r)
    return esc_regs, esc_cells


def _solve_kleene(
    program: Program, cg: CallGraph, pti: PointsToInfo, through_memory: bool = True
) -> tuple[set[Reg], set[Loc]]:
    esc_regs, esc_cells = _seed(program, cg, pti)
    fields_of: dict[Loc, list[Loc]] = {}
    for loc in pti.all_cells:
        if loc.field is not None:
            fields_of.setdefault(Loc(loc.func, loc.var, None), []).append(loc)

    while True:
        before = (len(esc_regs), len(esc_cells))
        for (func, reg), pointees in pti.reg_pt.items():
            if (func, reg) in esc_regs:
                esc_cells.update(p for p in pointees if isinstance(p, Loc))
            elif any(isinstance(p, Loc) and p in esc_cells for p in pointees):
                esc_regs.add((func, reg))
        for loc in list(esc_cells):
            esc_cells.update(fields_of.get(loc, ()))
            if through_memory:
                esc_cells.update(p for p in pti.contents(loc) if isinstance(p, Loc))
        for fn, _block, _i, instr in iter_instructions(program):
            if instr.kind == KIND_READ:
                if through_memory and (fn.name, instr.addr) in esc_regs:
                    esc_regs.add((fn.name, instr.dst))
            elif instr.kind == KIND_WRITE:
                if through_memory and (fn.name, instr.addr) in esc_regs:
                    esc_regs.add((fn.name, instr.src))
            elif instr.kind == KIND_COMPUTE:
                if any((fn.name, a) in esc_regs for a in instr.args):
                    esc_regs.add((fn.name, instr.dst))
            elif instr.kind in (KIND_STATIC_CALL, KIND_DYNAMIC_CALL):
                for g in _callee_functions(program, cg, instr):
                    formals = program.function(g).formals
                    for actual, formal in zip(instr.args, formals):
                        if (fn.name, actual) in esc_regs:
                            esc_regs.add((g, formal))
                        if (g, formal) in esc_regs:
                            esc_regs.add((fn.name, actual))
        if (len(esc_regs), len(esc_cells)) == before:
            return esc_regs, esc_cells


def escape_safe_accesses(
    program: Program, pti: PointsToInfo, result: EscapeResult
) -> frozenset[AccessId]:
    """Accesses that only ever touch unescaped (activation-private) cells."""
    safe = [
        access_id
        for access_id, _instr, _fn in program.accesses()
        if not (pti.locs(access_id) & result.escaped_cells)
    ]
    return frozenset(safe)
