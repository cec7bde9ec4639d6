"""Finite labeled Markov chains with exact rational transition rows.

States are dense integer ids.  Rows are sparse: only positive entries are
stored, and a valid chain has every row summing to exactly 1.  The
line-oriented file format is::

    chain NAME
    state 0 : a b
    state 1 :
    0 -> 1 1/2
    0 -> 0 1/2
    1 -> 1 1
    init 0

with ``#`` comments allowed anywhere and fractions written bit-exactly.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ._rational import ONE, Rat, rat_from_text, rat_to_text
from .formula import Proposition, prop_from_name


class ChainParseError(ValueError):
    pass


@dataclass
class MarkovChain:
    name: str = "chain"
    states: List[int] = field(default_factory=list)
    valuation: Dict[int, frozenset] = field(default_factory=dict)
    trans: Dict[int, List[Tuple[int, object]]] = field(default_factory=dict)
    init: Optional[int] = None

    def successors(self, s):
        return self.trans.get(s, [])

    def props(self, s):
        return self.valuation.get(s, frozenset())

    def predecessors(self):
        """Reverse adjacency (target -> list of sources)."""
        pred = {s: [] for s in self.states}
        for s, row in self.trans.items():
            for t, _ in row:
                if t in pred:
                    pred[t].append(s)
        return pred


def validate(chain):
    """All invariant violations, as human-readable strings (empty = valid)."""
    violations = []
    known = set(chain.states)
    if len(known) != len(chain.states):
        violations.append("duplicate state ids in state list")
    for s in chain.valuation:
        if s not in known:
            violations.append(f"valuation for unknown state {s}")
    if chain.init is not None and chain.init not in known:
        violations.append(f"init state {chain.init} does not exist")
    for s in chain.states:
        row = chain.trans.get(s)
        if not row:
            violations.append(f"state {s}: no outgoing transitions")
            continue
        total = Rat(0)
        seen_targets = set()
        for t, p in row:
            if t not in known:
                violations.append(f"state {s}: dangling target {t}")
            if t in seen_targets:
                violations.append(f"state {s}: duplicate target {t}")
            seen_targets.add(t)
            if p <= 0:
                violations.append(
                    f"state {s}: nonpositive probability {rat_to_text(p)} to {t}")
            total += p
        if total != ONE:
            violations.append(f"state {s}: row sum {rat_to_text(total)} != 1")
    for s in chain.trans:
        if s not in known:
            violations.append(f"transitions from unknown state {s}")
    return violations


def reachable(chain, s):
    """Forward closure over stored (positive) transitions, including s."""
    if s not in set(chain.states):
        raise KeyError(f"unknown state {s}")
    seen = {s}
    stack = [s]
    while stack:
        u = stack.pop()
        for t, _ in chain.trans.get(u, []):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def print_chain(chain):
    lines = [f"chain {chain.name}"]
    for s in sorted(chain.states):
        props = " ".join(p.name for p in sorted(chain.valuation.get(s, ())))
        lines.append(f"state {s} : {props}".rstrip())
    for s in sorted(chain.trans):
        for t, p in chain.trans[s]:
            lines.append(f"{s} -> {t} {rat_to_text(p)}")
    if chain.init is not None:
        lines.append(f"init {chain.init}")
    return "\n".join(lines) + "\n"


def parse_chain(text):
    chain = MarkovChain()
    seen_states = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue

        def fail(msg):
            raise ChainParseError(f"line {lineno}: {msg}")

        if line.startswith("chain "):
            chain.name = line[len("chain "):].strip()
        elif line.startswith("state"):
            body = line[len("state"):].strip()
            if ":" in body:
                id_part, _, props_part = body.partition(":")
            else:
                id_part, props_part = body, ""
            if not id_part.strip().isdigit():
                fail(f"bad state id {id_part.strip()!r}")
            sid = int(id_part)
            if sid in seen_states:
                fail(f"duplicate state id {sid}")
            seen_states.add(sid)
            chain.states.append(sid)
            props = frozenset(prop_from_name(w) for w in props_part.split())
            chain.valuation[sid] = props
        elif line.startswith("init"):
            body = line[len("init"):].strip()
            if not body.isdigit():
                fail(f"bad init id {body!r}")
            chain.init = int(body)
        elif "->" in line:
            src_part, _, rest = line.partition("->")
            if not src_part.strip().isdigit():
                fail(f"bad source state {src_part.strip()!r}")
            parts = rest.split()
            if len(parts) != 2 or not parts[0].isdigit():
                fail(f"bad transition {line!r}")
            try:
                p = rat_from_text(parts[1])
            except ValueError as exc:
                fail(str(exc))
            chain.trans.setdefault(int(src_part), []).append((int(parts[0]), p))
        else:
            fail(f"unrecognized line {line!r}")
    return chain
