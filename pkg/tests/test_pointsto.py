"""Inclusion-based points-to facts and derived access locations."""

from __future__ import annotations

from raceprune.facts import build_callgraph, compute_points_to
from raceprune.facts.pointsto import Loc
from raceprune.gen import generate_program
from raceprune.ir import parse


def _pti(source: str):
    program = parse(source)
    cg = build_callgraph(program)
    return program, compute_points_to(program, cg)


def test_addr_of_global_and_field():
    _, pti = _pti(
        """
        global g;
        global box { lid, body };
        fn main() {
          regs r0, r1;
          b0:
            r0 = &g;
            r1 = &box.lid;
            return;
        }
        """
    )
    assert pti.reg_pt[("main", "r0")] == {Loc(None, "g", None)}
    assert pti.reg_pt[("main", "r1")] == {Loc(None, "box", "lid")}


def test_locals_are_function_scoped_cells():
    _, pti = _pti(
        """
        fn main() {
          regs r;
          locals tmp;
          b0:
            r = &tmp;
            return;
        }
        """
    )
    assert pti.reg_pt[("main", "r")] == {Loc("main", "tmp", None)}


def test_stores_fill_cell_contents_and_loads_read_them():
    _, pti = _pti(
        """
        global slot;
        global target;
        fn main() {
          regs rs, rt, p;
          b0:
            rs = &slot;
            rt = &target;
            write *rs, rt;
            p = read *rs;
            return;
        }
        """
    )
    slot = Loc(None, "slot", None)
    target = Loc(None, "target", None)
    assert target in pti.cell_contents[slot]
    assert target in pti.reg_pt[("main", "p")]


def test_flow_through_call_and_return():
    _, pti = _pti(
        """
        global g;
        fn identity(x) {
          regs r;
          b0:
            r = op x;
            return x;
        }
        fn main() {
          regs a, out;
          b0:
            a = &g;
            out = call identity(a);
            return;
        }
        """
    )
    g = Loc(None, "g", None)
    assert g in pti.reg_pt[("identity", "x")]
    assert g in pti.reg_pt[("main", "out")]


def test_compute_produces_no_addresses():
    _, pti = _pti(
        """
        global g;
        fn main() {
          regs a, laundered;
          b0:
            a = &g;
            laundered = op a;
            return;
        }
        """
    )
    assert pti.reg_pt[("main", "laundered")] == frozenset()


def test_extern_exposure_marks_argument_pointees():
    _, pti = _pti(
        """
        global g;
        global quiet;
        extern surrender;
        fn main() {
          regs a, v;
          b0:
            a = &g;
            v = call surrender(a);
            return;
        }
        """
    )
    assert Loc(None, "g", None) in pti.extern_exposed
    assert Loc(None, "quiet", None) not in pti.extern_exposed


def test_access_locs_writers_accessors(showcase):
    cg = build_callgraph(showcase)
    pti = compute_points_to(showcase, cg)
    for access in showcase.access_ids():
        locs = pti.access_locs[access]
        assert locs, f"{access.text} has an empty location set"
        for loc in locs:
            assert access in pti.accessors[loc]
            if access.mode == "w":
                assert access in pti.writers[loc]


def test_access_locs_follow_the_address_register():
    # locs(a) is exactly the points-to set of the dereferenced register;
    # an empty set means no address can ever reach the access (it can
    # only trap at run time, so any verdict for it is vacuously safe)
    for seed in range(40):
        program = generate_program(seed)
        cg = build_callgraph(program)
        pti = compute_points_to(program, cg)
        for access in program.access_ids():
            instr = program.access_instruction(access)
            expected = pti.reg_pt[(access.func, instr.addr)]
            assert pti.access_locs[access] == expected, (seed, access.text)


def test_concrete_locations_stay_inside_the_abstraction():
    # every concretely touched cell must abstract to a member of locs(a)
    from raceprune.oracle import sample_traces

    for seed in (0, 3, 6, 9, 17, 34):
        program = generate_program(seed)
        cg = build_callgraph(program)
        pti = compute_points_to(program, cg)
        for trace in sample_traces(program, 25, seed):
            for event in trace.events:
                if event.is_access:
                    locs = pti.access_locs[event.access_id]
                    assert event.abstract_loc in locs, (seed, event)
