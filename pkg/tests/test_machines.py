import pytest

from pctlwb import machines as M

from helpers import BOUNCER_MINSKY, M0_TEXT, bouncer, m0


def conf(label, *counters):
    return M.Configuration(label, tuple(counters))


def test_successors_examples():
    machine = M.CounterMachine("t", 2, (
        M.Instruction(1, frozenset({2}), frozenset({3}), ("inc", "dec")),
        M.Instruction(1, frozenset({1}), frozenset({1}), ("dec", "dec")),
        M.Instruction(1, frozenset({1, 2}), frozenset({3}), ("inc", "inc")),
    ))
    assert M.successors(machine, conf(1, 0, 5)) == {conf(2, 1, 4)}
    assert M.successors(machine, conf(2, 0, 0)) == {conf(1, 0, 0)}
    # nondeterminism only in the label
    assert M.successors(machine, conf(3, 0, 1)) == {conf(1, 1, 2), conf(2, 1, 2)}


def test_machine_invariants():
    with pytest.raises(M.MachineError):
        M.CounterMachine("bad", 2, (
            M.Instruction(3, frozenset({1}), frozenset({1}), ("dec", "dec")),))
    with pytest.raises(M.MachineError):
        M.CounterMachine("bad", 2, (
            M.Instruction(1, frozenset(), frozenset({1}), ("dec", "dec")),))
    with pytest.raises(M.MachineError):
        M.CounterMachine("bad", 2, (
            M.Instruction(1, frozenset({5}), frozenset({1}), ("dec", "dec")),))
    with pytest.raises(M.MachineError):
        M.CounterMachine("bad", 2, (
            M.Instruction(1, frozenset({1}), frozenset({1}), ("dec",)),))


def test_run_deterministic_m0():
    lasso = M.run_deterministic(m0())
    assert (lasso.alpha, lasso.beta) == (1, 3)
    assert [(c.label, c.counters) for c in lasso.configs] == [
        (1, (0, 0)), (2, (0, 0)), (1, (0, 0))]
    assert M.replay_lasso(m0(), lasso)


def test_run_deterministic_unbounded():
    grower = M.parse_machine(
        "machine g\ncounters 2\n"
        "1: if C1 = 0 goto {1} else goto {1} ; inc inc")
    out = M.run_deterministic(grower, max_steps=500)
    assert isinstance(out, M.Unbounded)
    assert out.steps == 500


def test_run_deterministic_self_loop():
    solo = M.parse_machine(
        "machine s\ncounters 2\n"
        "1: if C1 = 0 goto {1} else goto {1} ; dec dec")
    lasso = M.run_deterministic(solo)
    assert (lasso.alpha, lasso.beta) == (1, 2)


def test_run_rejects_nondeterministic():
    nd = M.parse_machine(
        "machine nd\ncounters 2\n"
        "1: if C1 = 0 goto {1,1} else goto {1} ; dec dec\n")
    assert nd.deterministic  # {1,1} collapses
    nd2 = M.CounterMachine("nd2", 2, (
        M.Instruction(1, frozenset({1, 2}), frozenset({1}), ("dec", "dec")),
        M.Instruction(1, frozenset({1}), frozenset({1}), ("dec", "dec"))))
    with pytest.raises(M.MachineError):
        M.run_deterministic(nd2)


def test_lasso_config_extension():
    lasso = M.run_deterministic(m0())
    for j in range(12):
        expected_label = 1 if j % 2 == 0 else 2
        assert lasso.config(j).label == expected_label


def test_minsky_successors():
    prog = M.MinskyMachine("p", 2, (
        M.MinskyInstruction(1, frozenset({2})),
        M.MinskyInstruction(1, frozenset({2}), frozenset({4, 5})),
        M.MinskyInstruction(2, frozenset({1}), frozenset({1})),
        M.MinskyInstruction(1, frozenset({1})),
        M.MinskyInstruction(1, frozenset({1})),
    ))
    assert M.minsky_successors(prog, conf(1, 0, 0)) == {conf(2, 1, 0)}
    # type II at zero: goto L, counters unchanged
    assert M.minsky_successors(prog, conf(2, 0, 7)) == {conf(2, 0, 7)}
    # type II positive: two successors with the counter decremented
    assert M.minsky_successors(prog, conf(2, 3, 0)) == \
        {conf(4, 2, 0), conf(5, 2, 0)}


def test_minsky_to_counter_m1():
    prog = M.parse_minsky("minsky one\n1: inc c1 goto {1}")
    compiled = M.minsky_to_counter(prog)
    assert compiled.m == 3
    first = compiled.instruction(1)
    assert first.test_counter == 1
    assert first.zero_targets == first.pos_targets == frozenset({2})
    assert first.updates == ("inc", "inc")
    second = compiled.instruction(2)
    assert second.updates == ("inc", "dec")
    assert second.zero_targets == frozenset({1})
    third = compiled.instruction(3)
    assert third.zero_targets == frozenset({2})
    assert third.updates == ("dec", "inc")


def test_minsky_to_counter_counts():
    for text, m in ((BOUNCER_MINSKY, 2), ("minsky one\n1: inc c1 goto {1}", 1)):
        prog = M.parse_minsky(text)
        compiled = M.minsky_to_counter(prog)
        assert compiled.m == 3 * m
        # output passes CounterMachine invariants by construction
        assert compiled.d == 2


def test_minsky_to_counter_boundedness_transfer():
    compiled = M.minsky_to_counter(bouncer())
    lasso = M.run_deterministic(compiled, max_steps=10000)
    assert isinstance(lasso, M.LassoComputation)
    assert M.replay_lasso(compiled, lasso)


def test_minsky_to_counter_rejects_wrong_d():
    prog = M.MinskyMachine("p3", 3, (M.MinskyInstruction(3, frozenset({1})),))
    with pytest.raises(M.MachineError):
        M.minsky_to_counter(prog)


def test_machine_roundtrip():
    machine = m0()
    assert M.parse_machine(M.print_machine(machine)) == machine


def test_minsky_roundtrip():
    prog = bouncer()
    assert M.parse_minsky(M.print_minsky(prog)) == prog


def test_parse_machine_errors():
    with pytest.raises(M.MachineError):
        M.parse_machine("machine x\ncounters 2\n"
                        "1: if C1 = 0 goto {9} else goto {1} ; dec dec")
    with pytest.raises(M.MachineError):
        M.parse_machine("machine x\ncounters 2\n"
                        "1: if C1 = 0 goto {} else goto {1} ; dec dec")
    with pytest.raises(M.MachineError):
        M.parse_machine("machine x\ncounters 2\n"
                        "1: if C1 = 0 goto {1} else goto {1} ; dec")
    with pytest.raises(M.MachineError):
        M.parse_machine("machine x\n1: if C1 = 0 goto {1} else goto {1} ; dec dec")


def test_reachable_configs_nonnegative():
    machine = m0()
    seen = set()
    frontier = {M.initial_configuration(machine)}
    for _ in range(20):
        nxt = set()
        for c in frontier:
            assert all(x >= 0 for x in c.counters)
            nxt |= M.successors(machine, c)
        seen |= frontier
        frontier = nxt - seen
    assert seen
