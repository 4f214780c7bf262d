"""Which code can run multithreaded, and which accesses never do."""

from __future__ import annotations

from raceprune.analyses import compute_stc, stc_safe_accesses
from raceprune.facts import build_callgraph
from raceprune.gen import generate_program
from raceprune.ir import parse


def _stc(source: str, method: str = "worklist", faults: frozenset = frozenset()):
    program = parse(source)
    cg = build_callgraph(program)
    return program, cg, compute_stc(program, cg, method=method, faults=faults)


def test_no_threads_means_nothing_is_multithreaded():
    program, _, result = _stc(
        """
        global g;
        fn helper() { regs r, z; b0: r = &g; write *r, z; return; }
        fn main() { b0: call helper(); return; }
        """
    )
    assert result.mt_functions == frozenset()
    assert result.mt_main_blocks == frozenset()
    assert stc_safe_accesses(program, result) == set(program.access_ids())


def test_created_function_is_multithreaded():
    program, _, result = _stc(
        """
        global g;
        fn worker() { regs r, z; b0: r = &g; write *r, z; return; }
        fn main() { regs r, z; b0: r = &g; write *r, z; create worker; return; }
        """
    )
    assert "worker" in result.mt_functions
    safe = stc_safe_accesses(program, result)
    texts = {a.text for a in safe}
    # the worker's write can race; main's write sits in the spawning block
    assert "worker:b0:1:w" not in texts
    assert "main:b0:1:w" not in texts


def test_blocks_before_the_first_create_stay_single_threaded():
    program, _, result = _stc(
        """
        global g;
        fn worker() { b0: return; }
        fn main() {
          regs r, z;
          b0: r = &g; write *r, z; goto b1;
          b1: create worker; goto b2;
          b2: write *r, z; return;
        }
        """
    )
    assert result.mt_main_blocks == frozenset({"b1", "b2"})
    texts = {a.text for a in stc_safe_accesses(program, result)}
    assert "main:b0:1:w" in texts
    assert "main:b2:0:w" not in texts


def test_callee_of_multithreaded_code_is_multithreaded():
    _, _, result = _stc(
        """
        fn shared() { b0: return; }
        fn worker() { b0: call shared(); return; }
        fn main() { b0: create worker; return; }
        """
    )
    assert {"worker", "shared"} <= result.mt_functions


def test_caller_into_multithreaded_code_is_multithreaded():
    # main calls into a function that also runs on the spawned thread,
    # so the callee sees two threads and everything it calls does too
    _, _, result = _stc(
        """
        fn shared() { b0: return; }
        fn worker() { b0: call shared(); return; }
        fn main() {
          b0: create worker; goto b1;
          b1: call shared(); return;
        }
        """
    )
    assert "shared" in result.mt_functions


def test_address_taken_functions_join_the_multithreaded_set():
    _, _, result = _stc(
        """
        extern invoke_later;
        fn cb() { b0: return; }
        fn worker() { b0: return; }
        fn main() {
          regs fp, v;
          b0:
            create worker;
            fp = &&cb;
            v = call invoke_later(fp);
            return;
        }
        """
    )
    assert "cb" in result.mt_functions


def test_entire_main_is_multithreaded_when_its_address_leaks():
    _, _, result = _stc(
        """
        fn main() {
          regs fp;
          b0: fp = &&main; goto b1;
          b1: return;
        }
        """
    )
    assert result.mt_main_blocks == frozenset({"b0", "b1"})


def test_fault_hides_created_threads():
    source = """
        global g;
        fn worker() { regs r, z; b0: r = &g; write *r, z; return; }
        fn main() { b0: create worker; return; }
        """
    _, _, clean = _stc(source)
    assert "worker" in clean.mt_functions
    _, _, broken = _stc(source, faults=frozenset({"stc.ignore_created"}))
    assert "worker" not in broken.mt_functions
    assert broken.mt_main_blocks == frozenset()


def test_worklist_and_kleene_agree():
    for seed in range(60):
        program = generate_program(seed)
        cg = build_callgraph(program)
        a = compute_stc(program, cg, method="worklist")
        b = compute_stc(program, cg, method="kleene")
        assert a == b, seed
