import pytest

from pctlwb import reduction as R
from pctlwb._rational import Rat
from pctlwb.formula import atoms, parse_formula, print_formula, subformulae
from pctlwb.geometry import DEFAULT_CONSTANTS

from helpers import m0

C = DEFAULT_CONSTANTS


def test_universe_size():
    # two disjoint copies of 19 + 18m atoms
    assert len(R.props_a(1, 1)) == 37
    assert len(R.universe(1)) == 74
    assert len(R.universe(2)) == 110  # 38 + 36m at m = 2


def test_build_at_shape():
    phi = R.build_at(1, 1, 1)
    # three exclusive 37-literal conjunctions, sharing subterms by id
    atom_nodes = [f for f in subformulae(phi) if f.kind == "atom"]
    assert len(atom_nodes) == 37
    assert all(p.copy == 1 for p in atoms(phi))
    with pytest.raises(R.ReductionError):
        R.build_at(3, 1, 2)


def test_exclusive_sharing():
    one = R.build_at(1, 1, 2)
    two = R.build_at(1, 1, 2)
    assert one is two


def test_marker_set_count():
    # 5*3*m lowercase singletons plus 9*3 capital sets
    for m in (1, 2, 3):
        assert len(R.marker_sets(1, m)) == 15 * m + 27


def test_struct_until_has_untils():
    phi = R.build_struct(1, 1, R.WITH_UNTIL, C)
    untils = [f for f in subformulae(phi)
              if f.kind == "prob" and f.path.kind == "until"
              and f.path.left.kind != "true"]
    assert untils, "until-based struct must propagate via non-F untils"


def test_struct_fg_only_f_shaped():
    phi = R.build_struct(2, 1, R.FG_ONLY, C)
    for f in subformulae(phi):
        if f.kind == "prob" and f.path.kind == "until":
            assert f.path.left.kind == "true"


def test_compile_fg_fragment_property():
    cfg = R.ReductionConfig(fragment=R.FG_ONLY, variant=R.FINITE_SAT)
    phi = R.compile(m0(), cfg)
    for f in subformulae(phi):
        if f.kind == "prob":
            assert f.path.kind == "until"
            assert f.path.left.kind == "true"


def test_compile_bounds_in_range():
    phi = R.compile(m0(), R.ReductionConfig())
    for f in subformulae(phi):
        if f.kind == "prob":
            assert 0 <= f.bound <= 1


def test_compile_atoms_within_universe():
    machine = m0()
    phi = R.compile(machine, R.ReductionConfig())
    assert atoms(phi) <= R.universe(machine.m)
    assert len(atoms(phi)) == 110


def test_compile_roundtrips_through_printer():
    phi = R.compile(m0(), R.ReductionConfig())
    assert parse_formula(print_formula(phi)) is phi


def test_zero_bounds_are_exact():
    phi = R.build_zero(1, 1, C)
    bounds = {f.bound for f in subformulae(phi) if f.kind == "prob"}
    # G-desugared complements of z1 and z2
    assert 1 - C.z.v1 in bounds and 1 - C.z.v2 in bounds


def test_eligible_lower_bound_is_interval_endpoint():
    phi = R.build_eligible(1, 1, C)
    bounds = {f.bound for f in subformulae(phi) if f.kind == "prob"}
    assert 1 - C.beta_low in bounds  # G>=beta desugars to P<=1-beta
    assert C.beta_low == Rat(1, 15)


def test_step_bound_sets():
    machine = m0()
    dec_step = R.build_step(0, 1, 2, machine.instruction(1), 1, machine.m, C)
    bounds = {f.bound for f in subformulae(dec_step) if f.kind == "prob"}
    z1, z2, d, lam = C.z.v1, C.z.v2, C.delta, C.lam
    # UDec carries the zero-branch products and the delta/lambda balances
    assert {1 - z1 * z1, 1 - z1 * z2, 1 - d, d, lam} <= bounds

    import dataclasses
    inc_instr = dataclasses.replace(machine.instruction(1),
                                    updates=("inc", "inc"))
    inc_step = R.build_step(0, 1, 2, inc_instr, 1, machine.m, C)
    bounds = {f.bound for f in subformulae(inc_step) if f.kind == "prob"}
    assert {1 - lam, 1 - C.rho, 1 - d} <= bounds


def test_step_all_covers_three_phases():
    machine = m0()
    phi = R.build_step_all(1, 2, machine.instruction(1), 1, machine.m, C)
    props = {(p.family, p.phase, p.label) for p in atoms(phi)}
    for i in range(3):
        assert ("r", i, 1) in props


def test_newsim_uses_tested_counter_copy():
    machine = m0()
    # instruction 2 tests C2, so NewZero is copy-2's zero formula even in
    # the copy-1 clause
    phi = R.build_newsim(2, 1, machine, C)
    copies = {p.copy for p in atoms(phi)}
    assert copies == {1, 2}
    # abandonment self-target: rsuc with l' = l occurs
    phi1 = R.build_newsim(1, 1, machine, C)
    assert phi1 is not None


def test_copy_isolation_of_per_copy_builders():
    m = 2
    for k in (1, 2):
        for phi in (R.build_struct(m, k, R.WITH_UNTIL, C),
                    R.build_struct(m, k, R.FG_ONLY, C),
                    R.build_zero(k, m, C), R.build_eligible(k, m, C),
                    R.build_init(k, m, C),
                    R.build_udec(0, 1, 2, k, m, C),
                    R.build_uinc(1, 2, 1, k, m, C)):
            assert {p.copy for p in atoms(phi)} == {k}


def test_sync_shape():
    phi = R.build_sync(2)
    # m*3 outer conjuncts each with m inner disjuncts; both copies crossed
    assert {p.copy for p in atoms(phi)} == {1, 2}
    heads = [(p.family, p.copy) for p in atoms(phi)]
    assert ("a", 1) in heads and ("a", 2) not in heads


def test_recurrent_requires_tau():
    with pytest.raises(R.ReductionError):
        R.build_recurrent(set(), 2)
    with pytest.raises(R.ReductionError):
        R.build_recurrent({5}, 2)
    phi = R.build_recurrent({1}, 2)
    assert phi.kind == "prob"  # the outer G=1


def test_variant_difference():
    machine = m0()
    fin = R.compile(machine, R.ReductionConfig(variant=R.FINITE_SAT))
    rec = R.compile(machine, R.ReductionConfig(variant=R.RECURRENT,
                                               tau=frozenset({1})))
    assert fin is not rec
    rec_part = R.build_recurrent({1}, machine.m)
    assert rec_part in subformulae(rec)
    assert rec_part not in subformulae(fin)


def test_fragment_difference_is_struct_only():
    machine = m0()
    u = R.compile_parts(machine, R.ReductionConfig(fragment=R.WITH_UNTIL))
    fg = R.compile_parts(machine, R.ReductionConfig(fragment=R.FG_ONLY))

    def parts_by_name(tree, out):
        out[tree.name] = tree.formula
        for ch in tree.children:
            parts_by_name(ch, out)
        return out

    pu, pfg = parts_by_name(u, {}), parts_by_name(fg, {})
    assert pu["init^1"] is pfg["init^1"]
    assert pu["mark^1"] is pfg["mark^1"]
    assert pu["lambda^2"] is pfg["lambda^2"]
    assert pu["succ^1"] is not pfg["succ^1"]
    assert pu["sync"] is pfg["sync"]


def test_reduction_config_validation():
    with pytest.raises(R.ReductionError):
        R.ReductionConfig(fragment="weird")
    with pytest.raises(R.ReductionError):
        R.ReductionConfig(variant=R.RECURRENT, tau=None)


def test_compile_rejects_wrong_d():
    from pctlwb.machines import CounterMachine, Instruction
    one = CounterMachine("one", 1, (
        Instruction(1, frozenset({1}), frozenset({1}), ("dec",)),))
    with pytest.raises(R.ReductionError):
        R.compile(one, R.ReductionConfig())


def test_stats_reports_sharing():
    sizes = {}
    for m in (1, 2):
        machine_text = "machine x\ncounters 2\n" + "\n".join(
            f"{l}: if C1 = 0 goto {{{l % m + 1}}} else goto {{{l % m + 1}}} ; dec dec"
            for l in range(1, m + 1))
        from pctlwb.machines import parse_machine
        phi = R.compile(parse_machine(machine_text), R.ReductionConfig())
        st = R.stats(phi)
        sizes[m] = st
        assert st["distinct_nodes"] * 5 < st["tree_size"]
    assert sizes[2]["distinct_nodes"] > sizes[1]["distinct_nodes"]
