import random

import pytest

from pctlwb import checker, markov
from pctlwb._rational import Rat
from pctlwb.formula import (atom, mk_f_bounded, mk_g, mk_next, parse_formula,
                            user_prop)

from helpers import random_chain, random_state_sets


def coin_chain():
    """s -> t (1/2), s -> s (1/2), t absorbing; a labels t."""
    return markov.parse_chain(
        "state 0 :\nstate 1 : a\n0 -> 1 1/2\n0 -> 0 1/2\n1 -> 1 1\ninit 0")


def test_prob_next_examples():
    chain = coin_chain()
    assert checker.prob_next(chain, {1}) == {0: Rat(1, 2), 1: 1}
    assert checker.prob_next(chain, set()) == {0: 0, 1: 0}
    assert checker.prob_next(chain, {0, 1}) == {0: 1, 1: 1}


def test_prob_bounded_until_examples():
    chain = coin_chain()
    # s in S2 -> 1 for every k
    for k in range(4):
        assert checker.prob_bounded_until(chain, set(), {0}, k)[0] == 1
    # s not in S1 u S2 -> 0
    assert checker.prob_bounded_until(chain, set(), {1}, 3)[0] == 0
    # two accepting prefixes of length <= 2: 1/2 + 1/4
    assert checker.prob_bounded_until(chain, {0}, {1}, 2)[0] == Rat(3, 4)


def test_prob_until_examples():
    chain = coin_chain()
    # x = 1/2 + x/2 forces x = 1
    assert checker.prob_until(chain, {0}, {1})[0] == 1
    # S2 unreachable through S1
    assert checker.prob_until(chain, set(), {1})[0] == 0
    chain2 = markov.parse_chain(
        "state 0:\nstate 1: a\nstate 2:\n0 -> 1 1/3\n0 -> 2 2/3\n"
        "1 -> 1 1\n2 -> 2 1")
    assert checker.prob_until(chain2, {0}, {1})[0] == Rat(1, 3)


def test_sat_atom_and_next():
    chain = coin_chain()
    a = atom(user_prop("a"))
    satmap = checker.sat(chain, a)
    assert satmap[a.uid] == frozenset({1})
    phi = mk_next("=", 1, a)
    assert checker.sat(chain, phi)[phi.uid] == frozenset({1})
    both = markov.parse_chain(
        "state 0:\nstate 1: a\nstate 2: a\n0 -> 1 1/2\n0 -> 2 1/2\n"
        "1 -> 1 1\n2 -> 2 1")
    assert 0 in checker.sat(both, phi)[phi.uid]


def test_sat_bounded_until_example():
    chain = coin_chain()
    phi = parse_formula("P=1/2[true U<=2 a]")
    assert 0 not in checker.sat(chain, phi)[phi.uid]  # 3/4 != 1/2
    phi = parse_formula("P=3/4[true U<=2 a]")
    assert 0 in checker.sat(chain, phi)[phi.uid]


def test_sat_boolean_semantics():
    rnd = random.Random(7)
    chain = random_chain(rnd)
    a, b = atom(user_prop("a")), atom(user_prop("b"))
    from pctlwb.formula import and_, not_
    mc = checker.ModelChecker(chain)
    satmap = mc.sat(and_(a, b))
    assert satmap[and_(a, b).uid] == satmap[a.uid] & satmap[b.uid]
    satmap = mc.sat(not_(a))
    assert satmap[not_(a).uid] == frozenset(chain.states) - satmap[a.uid]


def test_brute_force_matches_on_examples():
    chain = coin_chain()
    for (s1, s2, k, s) in [({0}, {1}, 2, 0), (set(), {0}, 0, 0),
                           ({0, 1}, {1}, 5, 0)]:
        assert checker.brute_force_bounded(chain, s1, s2, k, s) == \
            checker.prob_bounded_until(chain, s1, s2, k)[s]


def test_oracle_equivalence_random():
    rnd = random.Random(123)
    for _ in range(40):
        chain = random_chain(rnd, max_states=5)
        s1, s2 = random_state_sets(rnd, chain)
        k = rnd.randint(0, 6)
        vec = checker.prob_bounded_until(chain, s1, s2, k)
        for s in chain.states:
            assert vec[s] == checker.brute_force_bounded(chain, s1, s2, k, s)


def test_bounded_monotone_and_convergence():
    rnd = random.Random(5)
    for _ in range(25):
        chain = random_chain(rnd, max_states=5)
        s1, s2 = random_state_sets(rnd, chain)
        prev = checker.prob_bounded_until(chain, s1, s2, 0)
        for k in range(1, 8):
            cur = checker.prob_bounded_until(chain, s1, s2, k)
            assert all(cur[s] >= prev[s] for s in chain.states)
            prev = cur
        unbounded = checker.prob_until(chain, s1, s2)
        assert all(prev[s] <= unbounded[s] for s in chain.states)


def test_until_fixpoint_residual():
    rnd = random.Random(99)
    for _ in range(30):
        chain = random_chain(rnd)
        s1, s2 = random_state_sets(rnd, chain)
        p = checker.prob_until(chain, s1, s2)
        for s in chain.states:
            if s in s2:
                assert p[s] == 1
            elif s not in s1:
                assert p[s] == 0
            else:
                total = sum((w * p[t] for t, w in chain.successors(s)),
                            Rat(0))
                assert p[s] == total


def test_memoization_reuses_path_probs():
    chain = coin_chain()
    mc = checker.ModelChecker(chain)
    phi = parse_formula("P>=1/2[true U a] & P<1[true U a]")
    mc.sat(phi)
    assert len(mc._path_memo) == 1  # one shared until body


def test_g_prob_set():
    chain = coin_chain()
    mc = checker.ModelChecker(chain)
    vec = mc.prob_g_set({0})  # stay outside 'a' forever
    assert vec[0] == 0 and vec[1] == 0
    vec = mc.prob_g_set({0, 1})
    assert vec[0] == 1 and vec[1] == 1
