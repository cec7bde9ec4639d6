"""Shared fixtures and generators for the test suite."""

import random

from pctlwb._rational import Rat
from pctlwb.formula import user_prop
from pctlwb.machines import parse_machine, parse_minsky
from pctlwb.markov import MarkovChain

M0_TEXT = """\
machine m0
counters 2
1: if C1 = 0 goto {2} else goto {2} ; dec dec
2: if C2 = 0 goto {1} else goto {1} ; dec dec
"""

PUMP_TEXT = """\
machine pump
counters 2
1: if C1 = 0 goto {2} else goto {2} ; inc inc
2: if C1 = 0 goto {3} else goto {3} ; dec dec
3: if C1 = 0 goto {1} else goto {1} ; dec dec
"""

SKEW_TEXT = """\
machine skew
counters 2
1: if C1 = 0 goto {2} else goto {2} ; inc dec
2: if C1 = 0 goto {1} else goto {1} ; dec inc
"""

LOP_TEXT = """\
machine lop
counters 2
1: if C1 = 0 goto {2} else goto {2} ; inc dec
2: if C1 = 0 goto {3} else goto {3} ; dec dec
3: if C1 = 0 goto {1} else goto {1} ; dec dec
"""

BOUNCER_MINSKY = """\
minsky bouncer
1: inc c1 goto {2}
2: test c1 zero {2} else {1}
"""


def m0():
    return parse_machine(M0_TEXT)


def bouncer():
    return parse_minsky(BOUNCER_MINSKY)


ATOMS = [user_prop(n) for n in ("a", "b", "c")]


def random_chain(rnd, max_states=6, max_atoms=3, max_out=4):
    """Seeded random chain with exact rational rows summing to 1."""
    n = rnd.randint(1, max_states)
    chain = MarkovChain(name="rnd", states=list(range(n)))
    atoms = ATOMS[:max_atoms]
    for s in range(n):
        chain.valuation[s] = frozenset(
            p for p in atoms if rnd.random() < 0.5)
        out = rnd.sample(range(n), rnd.randint(1, min(max_out, n)))
        weights = [rnd.randint(1, 6) for _ in out]
        total = sum(weights)
        chain.trans[s] = [(t, Rat(w, total)) for t, w in zip(out, weights)]
    chain.init = 0
    return chain


def random_state_sets(rnd, chain):
    s1 = {s for s in chain.states if rnd.random() < 0.7}
    s2 = {s for s in chain.states if rnd.random() < 0.3}
    return frozenset(s1), frozenset(s2)
