"""Text frontend for the mini-IR.

The surface syntax is deliberately small.  A program is a sequence of
top-level declarations:

    global g_config;
    global g_queue { slot0, slot1 };
    lock lk;
    extern fetch_payload;

    fn worker(p) {
      regs r0, t;
      locals req { id, payload };
      b0:
        lock lk;
        r0 = &g_config;
        t = read *r0;
        write *r0, t;
        unlock lk;
        goto b1;
      b1:
        branch [more work] b1 b2;
      b2:
        return;
    }

Every basic block is labelled and ends with exactly one terminator
(``goto``, ``branch`` or ``return``).  Branch guards are opaque bracketed
text kept only for display; control flow is nondeterministic.  ``#``
starts a comment that runs to the end of the line.

`parse` returns a validated :class:`~raceprune.ir.nodes.Program`.
Syntax and resolution errors raise :class:`FrontendError`; unreachable
blocks are tolerated and reported through ``Program.warnings``.
"""

from __future__ import annotations

import re
from typing import Iterator, NamedTuple, Optional

from .nodes import (
    BasicBlock,
    FrontendError,
    Function,
    Instruction,
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
    VarDecl,
)

RESERVED = frozenset(
    "global lock unlock extern fn regs locals goto branch return "
    "call create read write op".split()
)

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>      [ \t\r]+        )
    | (?P<comment> \#[^\n]*        )
    | (?P<nl>      \n              )
    | (?P<guard>   \[[^\]\n]*\]    )
    | (?P<ident>   [A-Za-z_]\w*    )
    | (?P<andand>  &&              )
    | (?P<punct>   [;:,{}()*=.&]   )
    """,
    re.VERBOSE,
)


class Token(NamedTuple):
    kind: str  # "ident" | "guard" | "punct" | "eof"
    text: str
    line: int


def tokenize(source: str) -> list[Token]:
    """Split `source` into tokens, dropping whitespace and comments."""
    tokens: list[Token] = []
    line = 1
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise FrontendError(f"unexpected character {source[pos]!r}", line)
        pos = m.end()
        kind = m.lastgroup
        if kind == "nl":
            line += 1
        elif kind == "ident":
            tokens.append(Token("ident", m.group(), line))
        elif kind == "guard":
            tokens.append(Token("guard", m.group()[1:-1].strip(), line))
        elif kind == "andand":
            tokens.append(Token("punct", "&&", line))
        elif kind == "punct":
            tokens.append(Token("punct", m.group(), line))
    tokens.append(Token("eof", "", line))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # -- token plumbing ------------------------------------------------

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.cur
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text: str) -> bool:
        return self.cur.text == text and self.cur.kind in ("ident", "punct")

    def eat(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            raise FrontendError(
                f"expected {text!r}, found {self._describe(self.cur)}", self.cur.line
            )
        return self.advance()

    def name(self, what: str) -> Token:
        tok = self.cur
        if tok.kind != "ident":
            raise FrontendError(
                f"expected {what}, found {self._describe(tok)}", tok.line
            )
        if tok.text in RESERVED:
            raise FrontendError(
                f"reserved word {tok.text!r} cannot be used as {what}", tok.line
            )
        return self.advance()

    @staticmethod
    def _describe(tok: Token) -> str:
        if tok.kind == "eof":
            return "end of input"
        if tok.kind == "guard":
            return f"guard [{tok.text}]"
        return repr(tok.text)

    # -- grammar -------------------------------------------------------

    def program(self) -> Program:
        globals_: list[VarDecl] = []
        locks: list[str] = []
        externs: list[str] = []
        functions: list[Function] = []
        while self.cur.kind != "eof":
            if self.eat("global"):
                globals_.extend(self._vardecl_list("global variable"))
            elif self.eat("lock"):
                locks.extend(self._name_list("lock name"))
            elif self.eat("extern"):
                externs.extend(self._name_list("extern name"))
            elif self.at("fn"):
                functions.append(self.function())
            else:
                raise FrontendError(
                    "expected 'global', 'lock', 'extern' or 'fn', found "
                    + self._describe(self.cur),
                    self.cur.line,
                )
        return Program(
            globals=tuple(globals_),
            locks=tuple(locks),
            externs=tuple(externs),
            functions=tuple(functions),
        )

    def _name_list(self, what: str) -> list[str]:
        names = [self.name(what).text]
        while self.eat(","):
            names.append(self.name(what).text)
        self.expect(";")
        return names

    def _vardecl_list(self, what: str) -> list[VarDecl]:
        decls = [self._vardecl(what)]
        while self.eat(","):
            decls.append(self._vardecl(what))
        self.expect(";")
        return decls

    def _vardecl(self, what: str) -> VarDecl:
        name = self.name(what).text
        fields: Optional[tuple[str, ...]] = None
        if self.eat("{"):
            parts = [self.name("field name").text]
            while self.eat(","):
                parts.append(self.name("field name").text)
            self.expect("}")
            fields = tuple(parts)
        return VarDecl(name, fields)

    def function(self) -> Function:
        line = self.expect("fn").line
        fname = self.name("function name").text
        self.expect("(")
        formals: list[str] = []
        if not self.at(")"):
            formals.append(self.name("formal parameter").text)
            while self.eat(","):
                formals.append(self.name("formal parameter").text)
        self.expect(")")
        self.expect("{")
        regs: list[str] = []
        locals_: list[VarDecl] = []
        while True:
            if self.eat("regs"):
                regs.extend(self._name_list("register name"))
            elif self.eat("locals"):
                locals_.extend(self._vardecl_list("local variable"))
            else:
                break
        blocks: list[BasicBlock] = []
        while not self.at("}"):
            blocks.append(self.block(fname))
        self.expect("}")
        if not blocks:
            raise FrontendError(f"function '{fname}' has no blocks", line)
        return Function(
            name=fname,
            formals=tuple(formals),
            regs=tuple(regs),
            locals=tuple(locals_),
            blocks=blocks,
            line=line,
        )

    def block(self, fname: str) -> BasicBlock:
        label = self.name("block label")
        self.expect(":")
        instrs: list[Instruction] = []
        while True:
            tok = self.cur
            if tok.kind == "eof":
                raise FrontendError(
                    f"block '{label.text}' in '{fname}' is missing a terminator",
                    tok.line,
                )
            if self.eat("goto"):
                target = self.name("block label").text
                self.expect(";")
                return BasicBlock(
                    label.text, instrs, successors=(target,), line=label.line
                )
            if self.eat("branch"):
                guard = None
                if self.cur.kind == "guard":
                    guard = self.advance().text
                then_ = self.name("block label").text
                else_ = self.name("block label").text
                self.expect(";")
                return BasicBlock(
                    label.text,
                    instrs,
                    successors=(then_, else_),
                    guard=guard,
                    line=label.line,
                )
            if self.eat("return"):
                src = None
                if not self.at(";"):
                    src = self.name("register").text
                self.expect(";")
                instrs.append(Instruction(KIND_RETURN, src=src, line=tok.line))
                return BasicBlock(label.text, instrs, successors=(), line=label.line)
            instrs.append(self.statement())

    def statement(self) -> Instruction:
        tok = self.cur
        if self.eat("lock"):
            lk = self.name("lock name").text
            self.expect(";")
            return Instruction(KIND_LOCK, lock=lk, line=tok.line)
        if self.eat("unlock"):
            lk = self.name("lock name").text
            self.expect(";")
            return Instruction(KIND_UNLOCK, lock=lk, line=tok.line)
        if self.eat("create"):
            target = self.name("function name").text
            self.expect(";")
            return Instruction(KIND_CREATE, func=target, line=tok.line)
        if self.eat("call"):
            instr = self._call(dst=None, line=tok.line)
            self.expect(";")
            return instr
        if self.eat("write"):
            self.expect("*")
            addr = self.name("register").text
            self.expect(",")
            src = self.name("register").text
            self.expect(";")
            return Instruction(KIND_WRITE, addr=addr, src=src, line=tok.line)
        dst = self.name("register or statement keyword").text
        self.expect("=")
        instr = self.rhs(dst, tok.line)
        self.expect(";")
        return instr

    def rhs(self, dst: str, line: int) -> Instruction:
        if self.eat("&&"):
            target = self.name("function name").text
            return Instruction(KIND_ADDR_OF_FUNC, dst=dst, func=target, line=line)
        if self.eat("&"):
            var = self.name("variable").text
            if self.eat("."):
                fld = self.name("field name").text
                return Instruction(
                    KIND_ADDR_OF_FIELD, dst=dst, var=var, field_name=fld, line=line
                )
            return Instruction(KIND_ADDR_OF_VAR, dst=dst, var=var, line=line)
        if self.eat("read"):
            self.expect("*")
            addr = self.name("register").text
            return Instruction(KIND_READ, dst=dst, addr=addr, line=line)
        if self.eat("call"):
            return self._call(dst=dst, line=line)
        if self.eat("op"):
            args: list[str] = []
            if self.cur.kind == "ident" and self.cur.text not in RESERVED:
                args.append(self.advance().text)
                while self.eat(","):
                    args.append(self.name("register").text)
            return Instruction(KIND_COMPUTE, dst=dst, args=tuple(args), line=line)
        raise FrontendError(
            "expected '&', '&&', 'read', 'call' or 'op' after '=', found "
            + self._describe(self.cur),
            self.cur.line,
        )

    def _call(self, dst: Optional[str], line: int) -> Instruction:
        if self.eat("*"):
            fn_reg = self.name("register").text
            callee = None
        else:
            fn_reg = None
            callee = self.name("function name").text
        self.expect("(")
        args: list[str] = []
        if not self.at(")"):
            args.append(self.name("register").text)
            while self.eat(","):
                args.append(self.name("register").text)
        self.expect(")")
        kind = KIND_DYNAMIC_CALL if fn_reg is not None else KIND_STATIC_CALL
        return Instruction(
            kind, dst=dst, func=callee, fn_reg=fn_reg, args=tuple(args), line=line
        )


# ---------------------------------------------------------------------------
# validation


def _check_unique(names, what: str, line: int = 0) -> None:
    seen: set[str] = set()
    for n in names:
        if n in seen:
            raise FrontendError(f"duplicate {what} '{n}'", line)
        seen.add(n)


def _validate(program: Program) -> Program:
    _check_unique((g.name for g in program.globals), "global")
    _check_unique(program.locks, "lock")
    _check_unique(program.externs, "extern")
    _check_unique((f.name for f in program.functions), "function")
    for g in program.globals:
        if g.fields is not None:
            _check_unique(g.fields, f"field of '{g.name}'")

    global_names = {g.name for g in program.globals}
    fn_names = {f.name for f in program.functions}
    overlap = fn_names & set(program.externs)
    if overlap:
        raise FrontendError(
            f"'{sorted(overlap)[0]}' declared both as function and extern"
        )
    callables = fn_names | set(program.externs)
    for group, what in ((program.locks, "lock"), (program.externs, "extern")):
        for n in group:
            if n in global_names:
                raise FrontendError(f"{what} '{n}' collides with a global")

    if not program.has_function("main"):
        raise FrontendError("program has no 'main' function")
    if program.function("main").formals:
        raise FrontendError(
            "'main' must not take parameters", program.function("main").line
        )

    warnings: list[str] = []
    for fn in program.functions:
        _validate_function(program, fn, global_names, callables, warnings)
    program.warnings.extend(warnings)
    return program


def _validate_function(
    program: Program,
    fn: Function,
    global_names: set[str],
    callables: set[str],
    warnings: list[str],
) -> None:
    _check_unique(fn.formals, f"formal of '{fn.name}'", fn.line)
    _check_unique(fn.regs, f"register of '{fn.name}'", fn.line)
    _check_unique((v.name for v in fn.locals), f"local of '{fn.name}'", fn.line)
    for v in fn.locals:
        if v.fields is not None:
            _check_unique(v.fields, f"field of '{fn.name}.{v.name}'", fn.line)

    regs = set(fn.all_regs)
    local_decls = {v.name: v for v in fn.locals}
    for v in local_decls:
        if v in global_names:
            raise FrontendError(
                f"local '{v}' of '{fn.name}' shadows a global", fn.line
            )
        if v in regs:
            raise FrontendError(
                f"'{v}' is both a register and a local in '{fn.name}'", fn.line
            )
    for r in regs:
        if r in global_names:
            raise FrontendError(
                f"register '{r}' of '{fn.name}' collides with a global", fn.line
            )

    block_names = [b.name for b in fn.blocks]
    _check_unique(block_names, f"block label in '{fn.name}'", fn.line)
    known_blocks = set(block_names)

    def need_reg(name: Optional[str], line: int, role: str) -> None:
        if name is None:
            return
        if name not in regs:
            hint = ""
            if name in local_decls or name in global_names:
                hint = " (variables must be addressed with '&' and dereferenced)"
            raise FrontendError(
                f"unknown register '{name}' used as {role} in '{fn.name}'{hint}",
                line,
            )

    for block in fn.blocks:
        for succ in block.successors:
            if succ not in known_blocks:
                raise FrontendError(
                    f"block '{block.name}' in '{fn.name}' jumps to "
                    f"undefined block '{succ}'",
                    block.line,
                )
        for instr in block.instructions:
            _validate_instruction(
                program, fn, instr, regs, local_decls, global_names, callables,
                need_reg,
            )

    # Reachability from the entry block; unreachable code is legal but noted.
    reached = {fn.entry.name}
    frontier = [fn.entry]
    by_name = {b.name: b for b in fn.blocks}
    while frontier:
        blk = frontier.pop()
        for succ in blk.successors:
            if succ not in reached:
                reached.add(succ)
                frontier.append(by_name[succ])
    for name in block_names:
        if name not in reached:
            warnings.append(f"{fn.name}: block '{name}' is unreachable")


def _validate_instruction(
    program: Program,
    fn: Function,
    instr: Instruction,
    regs: set[str],
    local_decls: dict[str, VarDecl],
    global_names: set[str],
    callables: set[str],
    need_reg,
) -> None:
    line = instr.line
    kind = instr.kind
    need_reg(instr.dst, line, "destination")
    need_reg(instr.addr, line, "address operand")
    need_reg(instr.src, line, "source operand")
    need_reg(instr.fn_reg, line, "call target")
    for a in instr.args:
        need_reg(a, line, "argument")

    if kind in (KIND_LOCK, KIND_UNLOCK):
        if instr.lock not in program.locks:
            raise FrontendError(f"unknown lock '{instr.lock}'", line)
    elif kind == KIND_CREATE:
        target = instr.func
        if target not in {f.name for f in program.functions}:
            extra = " (externs cannot be thread entries)" if target in program.externs else ""
            raise FrontendError(f"create of undeclared function '{target}'{extra}", line)
        if program.function(target).formals:
            raise FrontendError(
                f"create target '{target}' must not take parameters", line
            )
    elif kind == KIND_STATIC_CALL:
        if instr.func not in callables:
            raise FrontendError(f"call to undeclared function '{instr.func}'", line)
        if program.has_function(instr.func):
            want = len(program.function(instr.func).formals)
            if len(instr.args) != want:
                raise FrontendError(
                    f"'{instr.func}' expects {want} argument(s), got {len(instr.args)}",
                    line,
                )
    elif kind == KIND_ADDR_OF_FUNC:
        if not program.has_function(instr.func):
            extra = (
                " (externs have no address)" if instr.func in program.externs else ""
            )
            raise FrontendError(
                f"'&&' applied to undeclared function '{instr.func}'{extra}", line
            )
    elif kind in (KIND_ADDR_OF_VAR, KIND_ADDR_OF_FIELD):
        var = instr.var
        decl = local_decls.get(var)
        if decl is None:
            decl = program.global_decl(var) if var in global_names else None
        if decl is None:
            extra = " (registers have no address)" if var in regs else ""
            raise FrontendError(f"unknown variable '{var}'{extra}", line)
        if kind == KIND_ADDR_OF_FIELD:
            if decl.fields is None:
                raise FrontendError(f"variable '{var}' has no fields", line)
            if instr.field_name not in decl.fields:
                raise FrontendError(
                    f"variable '{var}' has no field '{instr.field_name}'", line
                )


def parse(source: str) -> Program:
    """Parse and validate a program from surface text."""
    return _validate(_Parser(tokenize(source)).program())


def parse_file(path: str) -> Program:
    with open(path, "r", encoding="utf-8") as fh:
        return parse(fh.read())


def iter_instructions(program: Program) -> Iterator[tuple[Function, BasicBlock, int, Instruction]]:
    """All instructions with their containing function, block and index."""
    for fn in program.functions:
        for block in fn.blocks:
            for i, instr in enumerate(block.instructions):
                yield fn, block, i, instr
