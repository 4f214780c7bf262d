"""Frontend: text to IR, printing back, and input validation."""

from __future__ import annotations

import pytest

from raceprune.gen import generate_source
from raceprune.ir import FrontendError, parse, print_program

from conftest import PROGRAMS


def _roundtrip(source: str) -> None:
    once = print_program(parse(source))
    twice = print_program(parse(once))
    assert once == twice


def test_roundtrip_shipped_programs():
    for path in sorted(PROGRAMS.glob("*.mini")):
        _roundtrip(path.read_text())


def test_roundtrip_generated_programs():
    for seed in range(40):
        _roundtrip(generate_source(seed))


def test_declarations_and_shapes():
    program = parse(
        """
        global plain;
        global box { lid, body };
        lock guard;
        extern helper;

        fn child() {
          b0: return;
        }

        fn main() {
          regs r0, r1, v;
          locals tmp, pair { left, right };
          b0:
            r0 = &plain;
            r1 = &box.lid;
            v = read *r0;
            lock guard;
            unlock guard;
            create child;
            v = call helper(r0);
            return;
        }
        """
    )
    assert [g.name for g in program.globals] == ["plain", "box"]
    assert program.global_decl("box").fields == ("lid", "body")
    assert program.locks == ("guard",)
    assert program.externs == ("helper",)
    main = program.function("main")
    assert main.regs == ("r0", "r1", "v")
    assert [v.name for v in main.locals] == ["tmp", "pair"]
    kinds = [i.kind for i in main.blocks[0].instructions]
    assert kinds == [
        "addr_of_var", "addr_of_field", "read", "lock", "unlock",
        "create", "static_call", "return",
    ]


def test_branch_and_goto_wire_successors():
    program = parse(
        """
        fn main() {
          b0: branch [maybe] b1 b2;
          b1: goto b3;
          b2: goto b3;
          b3: return;
        }
        """
    )
    blocks = {b.name: b for b in program.function("main").blocks}
    assert blocks["b0"].successors == ("b1", "b2")
    assert blocks["b0"].guard == "maybe"
    assert blocks["b1"].successors == ("b3",)
    assert blocks["b3"].successors == ()


def test_access_ids_enumerate_reads_and_writes(showcase):
    ids = showcase.access_ids()
    assert len(ids) == 10
    assert all(a.mode in ("r", "w") for a in ids)
    # text form is func:block:index:mode
    texts = {a.text for a in ids}
    assert "worker:b1:0:r" in texts


def test_comments_and_blank_lines_ignored():
    program = parse(
        "# leading comment\n"
        "global g;  # trailing\n"
        "\n"
        "fn main() {\n"
        "  b0:\n"
        "    # a comment between statements\n"
        "    return;\n"
        "}\n"
    )
    assert program.has_function("main")


@pytest.mark.parametrize(
    "source, fragment",
    [
        ("fn main() { b0: goto nowhere; }", "undefined block"),
        ("fn other() { b0: return; }", "no 'main'"),
        ("fn main(x) { b0: return; }", "must not take parameters"),
        ("fn main() { b0: return; }\nfn main() { b0: return; }", "duplicate"),
        ("global g;\nglobal g;\nfn main() { b0: return; }", "duplicate"),
        ("fn main() { b0: lock missing; return; }", "unknown lock"),
        ("fn main() { b0: create ghost; return; }", "create of undeclared"),
        (
            "fn takes(a) { b0: return; }\nfn main() { b0: create takes; return; }",
            "must not take parameters",
        ),
        (
            "fn callee(a) { b0: return; }\n"
            "fn main() { b0: call callee(); return; }",
            "expects 1 argument",
        ),
        ("fn main() { regs r; b0: r = &ghost; return; }", "unknown variable"),
        (
            "fn main() { regs r; b0: r = &r; return; }",
            "registers have no address",
        ),
        (
            "global g;\nfn main() { regs r; b0: r = &g.f; return; }",
            "has no fields",
        ),
        (
            "global box { a };\nfn main() { regs r; b0: r = &box.z; return; }",
            "has no field 'z'",
        ),
        ("fn main() { b0: write *w, w; return; }", "unknown register"),
        (
            "extern e;\nfn main() { regs r; b0: r = &&e; return; }",
            "externs have no address",
        ),
        ("global g;\nlock g;\nfn main() { b0: return; }", "collides with a global"),
        ("fn main() { }", "no blocks"),
    ],
)
def test_rejects_malformed_input(source, fragment):
    with pytest.raises(FrontendError, match=fragment):
        parse(source)


def test_error_carries_line_number():
    try:
        parse("global g;\n\nfn main() { b0: goto nowhere; }")
    except FrontendError as ex:
        assert "line 3" in str(ex)
    else:
        pytest.fail("expected a frontend error")
