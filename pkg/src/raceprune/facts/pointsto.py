"""Inclusion-based points-to facts.

Flow- and context-insensitive, field-sensitive where the program is
(``&v.f`` yields exactly the field cell; ``&v`` on an aggregate yields
the base cell together with every field cell, since arithmetic on the
base pointer is opaque to us).  Every concrete memory cell corresponds
to exactly one abstract location: globals are keyed by name, locals by
(function, name), fields by an extra component.  All activations of a
function share its local cells.

Dynamic calls are resolved to every address-taken function of matching
arity.  Extern calls transfer no addresses (their results are plain
values) but any cell reachable from a pointer argument is flagged
``extern_exposed``; downstream analyses treat such cells as touchable
by unknown code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional, Union

from ..ir import (
    AccessId,
    KIND_ADDR_OF_FIELD,
    KIND_ADDR_OF_FUNC,
    KIND_ADDR_OF_VAR,
    KIND_COMPUTE,
    KIND_DYNAMIC_CALL,
    KIND_READ,
    KIND_RETURN,
    KIND_STATIC_CALL,
    KIND_WRITE,
    Program,
    VarDecl,
    iter_instructions,
)
from .callgraph import CallGraph


class Loc(NamedTuple):
    """Abstract memory cell: a global, a local, or one field of either."""

    func: Optional[str]  # None for globals
    var: str
    field: Optional[str]

    @property
    def text(self) -> str:
        base = self.var if self.func is None else f"{self.func}.{self.var}"
        return base if self.field is None else f"{base}.{self.field}"


class FuncTarget(NamedTuple):
    """A function address held in a register or cell."""

    name: str


Pointee = Union[Loc, FuncTarget]


def loc_sort_key(loc: Loc) -> tuple[str, str, str]:
    """Total order for cells; globals (func=None) sort first."""
    return (loc.func or "", loc.var, loc.field or "")


def decl_cells(decl: VarDecl, func: Optional[str]) -> list[Loc]:
    cells = [Loc(func, decl.name, None)]
    if decl.fields is not None:
        cells.extend(Loc(func, decl.name, f) for f in decl.fields)
    return cells


def _addressed_cells(decl: VarDecl, func: Optional[str]) -> frozenset[Loc]:
    return frozenset(decl_cells(decl, func))


@dataclass
class PointsToInfo:
    program: Program
    reg_pt: dict[tuple[str, str], frozenset[Pointee]]
    cell_contents: dict[Loc, frozenset[Pointee]]
    extern_exposed: frozenset[Loc]
    access_locs: dict[AccessId, frozenset[Loc]]
    writers: dict[Loc, tuple[AccessId, ...]]
    accessors: dict[Loc, tuple[AccessId, ...]]
    all_cells: frozenset[Loc]

    def pt(self, func: str, reg: str) -> frozenset[Pointee]:
        return self.reg_pt.get((func, reg), frozenset())

    def locs(self, access: AccessId) -> frozenset[Loc]:
        return self.access_locs[access]

    def contents(self, loc: Loc) -> frozenset[Pointee]:
        return self.cell_contents.get(loc, frozenset())

    def writes_of(self, loc: Loc) -> tuple[AccessId, ...]:
        return self.writers.get(loc, ())

    def global_cells(self) -> frozenset[Loc]:
        return frozenset(c for c in self.all_cells if c.func is None)


def compute_points_to(program: Program, callgraph: CallGraph) -> PointsToInfo:
    pt: dict[tuple[str, str], set[Pointee]] = {}
    contents: dict[Loc, set[Pointee]] = {}
    returns: dict[str, set[Pointee]] = {f.name: set() for f in program.functions}
    exposed: set[Loc] = set()

    all_cells: set[Loc] = set()
    field_cells: dict[Loc, frozenset[Loc]] = {}
    for g in program.globals:
        cells = decl_cells(g, None)
        all_cells.update(cells)
        field_cells[cells[0]] = frozenset(cells[1:])
    for fn in program.functions:
        for v in fn.locals:
            cells = decl_cells(v, fn.name)
            all_cells.update(cells)
            field_cells[cells[0]] = frozenset(cells[1:])

    def reg(func: str, name: str) -> set[Pointee]:
        return pt.setdefault((func, name), set())

    def cell(loc: Loc) -> set[Pointee]:
        return contents.setdefault(loc, set())

    def resolve_var(fn_name: str, var: str) -> tuple[Optional[str], VarDecl]:
        fn = program.function(fn_name)
        for v in fn.locals:
            if v.name == var:
                return fn_name, v
        decl = program.global_decl(var)
        assert decl is not None, f"validator admitted unknown variable {var!r}"
        return None, decl

    def compatible_targets(argc: int) -> list:
        out = []
        for name in sorted(callgraph.address_taken):
            if len(program.function(name).formals) == argc:
                out.append(program.function(name))
        return out

    def flow(dst: set[Pointee], src: set[Pointee]) -> bool:
        before = len(dst)
        dst.update(src)
        return len(dst) != before

    def expose(seed: set[Pointee]) -> bool:
        grew = False
        for p in seed:
            if isinstance(p, Loc) and p not in exposed:
                exposed.add(p)
                grew = True
        return grew

    def refresh_exposure() -> bool:
        # Anything stored in (or aggregated under) an exposed cell is
        # itself exposed; contents keep evolving, so walk every pass.
        grew = False
        worklist = list(exposed)
        while worklist:
            loc = worklist.pop()
            more = [p for p in contents.get(loc, ()) if isinstance(p, Loc)]
            more.extend(field_cells.get(loc, ()))
            for n in more:
                if n not in exposed:
                    exposed.add(n)
                    grew = True
                    worklist.append(n)
        return grew

    changed = True
    while changed:
        changed = False
        for fn, _block, _i, instr in iter_instructions(program):
            kind = instr.kind
            if kind == KIND_ADDR_OF_VAR:
                owner, decl = resolve_var(fn.name, instr.var)
                changed |= flow(reg(fn.name, instr.dst), _addressed_cells(decl, owner))
            elif kind == KIND_ADDR_OF_FIELD:
                owner, _decl = resolve_var(fn.name, instr.var)
                changed |= flow(
                    reg(fn.name, instr.dst), {Loc(owner, instr.var, instr.field_name)}
                )
            elif kind == KIND_ADDR_OF_FUNC:
                changed |= flow(reg(fn.name, instr.dst), {FuncTarget(instr.func)})
            elif kind == KIND_COMPUTE:
                reg(fn.name, instr.dst)  # plain value: empty points-to set
            elif kind == KIND_READ:
                dst = reg(fn.name, instr.dst)
                for p in list(reg(fn.name, instr.addr)):
                    if isinstance(p, Loc):
                        changed |= flow(dst, cell(p))
            elif kind == KIND_WRITE:
                src = reg(fn.name, instr.src)
                for p in list(reg(fn.name, instr.addr)):
                    if isinstance(p, Loc):
                        changed |= flow(cell(p), src)
            elif kind == KIND_RETURN:
                if instr.src is not None:
                    changed |= flow(returns[fn.name], reg(fn.name, instr.src))
            elif kind == KIND_STATIC_CALL:
                if program.has_function(instr.func):
                    callee = program.function(instr.func)
                    for formal, actual in zip(callee.formals, instr.args):
                        changed |= flow(reg(callee.name, formal), reg(fn.name, actual))
                    if instr.dst is not None:
                        changed |= flow(reg(fn.name, instr.dst), returns[callee.name])
                else:
                    for actual in instr.args:
                        changed |= expose(reg(fn.name, actual))
                    if instr.dst is not None:
                        reg(fn.name, instr.dst)  # extern results are plain values
            elif kind == KIND_DYNAMIC_CALL:
                for callee in compatible_targets(len(instr.args)):
                    for formal, actual in zip(callee.formals, instr.args):
                        changed |= flow(reg(callee.name, formal), reg(fn.name, actual))
                    if instr.dst is not None:
                        changed |= flow(reg(fn.name, instr.dst), returns[callee.name])
        changed |= refresh_exposure()

    access_locs: dict[AccessId, frozenset[Loc]] = {}
    writers: dict[Loc, list[AccessId]] = {}
    accessors: dict[Loc, list[AccessId]] = {}
    for access_id, instr, fn in program.accesses():
        locs = frozenset(
            p for p in pt.get((fn.name, instr.addr), ()) if isinstance(p, Loc)
        )
        access_locs[access_id] = locs
        for loc in locs:
            accessors.setdefault(loc, []).append(access_id)
            if instr.kind == KIND_WRITE:
                writers.setdefault(loc, []).append(access_id)

    return PointsToInfo(
        program=program,
        reg_pt={k: frozenset(v) for k, v in pt.items()},
        cell_contents={k: frozenset(v) for k, v in contents.items()},
        extern_exposed=frozenset(exposed),
        access_locs=access_locs,
        writers={k: tuple(v) for k, v in writers.items()},
        accessors={k: tuple(v) for k, v in accessors.items()},
        all_cells=frozenset(all_cells),
    )
