"""PCTL abstract syntax with hash-consing, plus parser and printer.

State formulae are built from atoms, true, negation, conjunction and the
probabilistic operator ``P(path) cmp bound``; path formulae are next,
until and step-bounded until.  F/G (and bounded F) exist only as sugar
and are desugared at construction / parse time:

    F_cmp,r phi      ==  P cmp r [true U phi]
    F^k_cmp,r phi    ==  P cmp r [true U<=k phi]
    G_cmp,r phi      ==  P negate(cmp) r [true U !phi]

Structurally identical formulae are interned: they share one node and one
integer ``uid``.  The checker and the reduction compiler rely on this for
memoization, so the intern table is guarded by a lock and nodes are
immutable.
"""

import re
import threading
from dataclasses import dataclass
from typing import Iterable, Optional

from ._rational import Rat, rat_from_text, rat_to_text

COMPARISONS = ("<=", "<", ">=", ">", "=", "!=")

# complement relations (x negate(cmp) r <=> not (x cmp r))
NEGATE_CMP = {"<=": ">", ">": "<=", "<": ">=", ">=": "<", "=": "!=", "!=": "="}

# mirrored relations ((1-x) cmp r <=> x mirror(cmp) (1-r)); this is what
# the G -> F duality needs: P(G phi) cmp r <=> P(F !phi) mirror(cmp) (1-r)
MIRROR_CMP = {"<=": ">=", ">=": "<=", "<": ">", ">": "<", "=": "=", "!=": "!="}

_LOWER_FAMILIES = ("r", "a", "abar", "b", "c", "d")
_UPPER_FAMILIES = ("A", "B", "C", "D", "E", "R")


class FormulaError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Proposition:
    """Atomic proposition: either a gadget atom or a free-form user atom.

    Gadget atoms carry (family, copy, phase, label) indices and print as
    e.g. ``r1_0_3`` (family r, copy 1, phase 0, label 3), ``Acap2_1`` or
    ``K1``; user atoms are arbitrary identifiers.  The dataclass ordering
    is the canonical total order used for deterministic printing.
    """

    sort_key: tuple

    @property
    def is_gadget(self):
        return self.sort_key[0] == 0

    @property
    def family(self):
        return self.sort_key[1] if self.is_gadget else None

    @property
    def copy(self):
        return self.sort_key[2] if self.is_gadget else None

    @property
    def phase(self):
        p = self.sort_key[3] if self.is_gadget else -1
        return None if p < 0 else p

    @property
    def label(self):
        l = self.sort_key[4] if self.is_gadget else -1
        return None if l < 0 else l

    @property
    def name(self):
        if not self.is_gadget:
            return self.sort_key[1]
        fam, copy, phase, label = self.sort_key[1:]
        if fam == "K":
            return f"K{copy}"
        if fam in _UPPER_FAMILIES:
            return f"{fam}cap{copy}_{phase}"
        return f"{fam}{copy}_{phase}_{label}"

    def __str__(self):
        return self.name

    def __repr__(self):
        return f"Proposition({self.name})"


def gadget_prop(family, copy, phase=None, label=None):
    if copy not in (1, 2):
        raise FormulaError(f"gadget copy must be 1 or 2, got {copy}")
    if family == "K":
        if phase is not None or label is not None:
            raise FormulaError("K takes only a copy index")
        return Proposition((0, "K", copy, -1, -1))
    if family in _UPPER_FAMILIES:
        if phase not in (0, 1, 2) or label is not None:
            raise FormulaError(f"{family} takes copy and phase in 0..2")
        return Proposition((0, family, copy, phase, -1))
    if family in _LOWER_FAMILIES:
        if phase not in (0, 1, 2):
            raise FormulaError(f"{family} phase must be in 0..2, got {phase}")
        if not isinstance(label, int) or label < 1:
            raise FormulaError(f"{family} label must be >= 1, got {label}")
        return Proposition((0, family, copy, phase, label))
    raise FormulaError(f"unknown gadget family {family!r}")


def user_prop(name):
    if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
        raise FormulaError(f"bad atom name {name!r}")
    return Proposition((1, name, 0, -1, -1))


_K_RE = re.compile(r"K([12])\Z")
_UPPER_RE = re.compile(r"([A-E]|R)cap([12])_([0-2])\Z")
_LOWER_RE = re.compile(r"(abar|[rabcd])([12])_([0-2])_([1-9][0-9]*)\Z")


def prop_from_name(name):
    """Interpret an identifier, preferring the gadget naming scheme."""
    m = _K_RE.fullmatch(name)
    if m:
        return gadget_prop("K", int(m.group(1)))
    m = _UPPER_RE.fullmatch(name)
    if m:
        return gadget_prop(m.group(1), int(m.group(2)), int(m.group(3)))
    m = _LOWER_RE.fullmatch(name)
    if m:
        return gadget_prop(m.group(1), int(m.group(2)), int(m.group(3)),
                           int(m.group(4)))
    return user_prop(name)


# ---------------------------------------------------------------------------
# hash-consed AST
# ---------------------------------------------------------------------------

_intern_lock = threading.RLock()
_state_table = {}
_path_table = {}
_uid_counter = [0]


class StateFormula:
    """Hash-consed PCTL state formula node."""

    __slots__ = ("kind", "prop", "left", "right", "path", "cmp", "bound",
                 "uid", "_hash")

    def __new__(cls, key):
        raise TypeError("use the mk_* / atom / and_ constructors")

    def __repr__(self):
        return f"<StateFormula #{self.uid} {print_formula(self)}>"

    def __hash__(self):
        return self._hash


class PathFormula:
    """Hash-consed PCTL path formula node (next / until / bounded until)."""

    __slots__ = ("kind", "left", "right", "step_bound", "uid", "_hash")

    def __new__(cls, key):
        raise TypeError("use next_ / until / bounded_until")

    def __repr__(self):
        return f"<PathFormula #{self.uid} {print_path(self)}>"

    def __hash__(self):
        return self._hash


def _intern_state(key, fill):
    with _intern_lock:
        node = _state_table.get(key)
        if node is None:
            node = object.__new__(StateFormula)
            node.kind = key[0]
            node.prop = None
            node.left = None
            node.right = None
            node.path = None
            node.cmp = None
            node.bound = None
            fill(node)
            _uid_counter[0] += 1
            node.uid = _uid_counter[0]
            node._hash = hash(key)
            _state_table[key] = node
        return node


def _intern_path(key, fill):
    with _intern_lock:
        node = _path_table.get(key)
        if node is None:
            node = object.__new__(PathFormula)
            node.kind = key[0]
            node.left = None
            node.right = None
            node.step_bound = None
            fill(node)
            _uid_counter[0] += 1
            node.uid = _uid_counter[0]
            node._hash = hash(key)
            _path_table[key] = node
        return node


def atom(prop):
    if not isinstance(prop, Proposition):
        raise FormulaError(f"atom() expects a Proposition, got {prop!r}")

    def fill(n):
        n.prop = prop

    return _intern_state(("atom", prop), fill)


def true():
    return _intern_state(("true",), lambda n: None)


def not_(phi):
    def fill(n):
        n.left = phi

    return _intern_state(("not", phi.uid), fill)


def false():
    return not_(true())


def and_(left, right):
    def fill(n):
        n.left = left
        n.right = right

    return _intern_state(("and", left.uid, right.uid), fill)


def or_(left, right):
    return not_(and_(not_(left), not_(right)))


def implies(left, right):
    return not_(and_(left, not_(right)))


def conj(parts):
    parts = list(parts)
    if not parts:
        return true()
    out = parts[0]
    for p in parts[1:]:
        out = and_(out, p)
    return out


def disj(parts):
    parts = list(parts)
    if not parts:
        return false()
    out = parts[0]
    for p in parts[1:]:
        out = or_(out, p)
    return out


def _check_bound(bound):
    bound = Rat(bound)
    if bound < 0 or bound > 1:
        raise FormulaError(f"probability bound {bound} outside [0,1]")
    return bound


def prob(path, cmp, bound):
    if cmp not in COMPARISONS:
        raise FormulaError(f"unknown comparison {cmp!r}")
    bound = _check_bound(bound)

    def fill(n):
        n.path = path
        n.cmp = cmp
        n.bound = bound

    return _intern_state(("prob", path.uid, cmp, bound), fill)


def next_(phi):
    def fill(n):
        n.left = phi

    return _intern_path(("next", phi.uid), fill)


def until(left, right):
    def fill(n):
        n.left = left
        n.right = right

    return _intern_path(("until", left.uid, right.uid), fill)


def bounded_until(left, right, k):
    if not isinstance(k, int) or k < 0:
        raise FormulaError(f"step bound must be a natural number, got {k}")

    def fill(n):
        n.left = left
        n.right = right
        n.step_bound = k

    return _intern_path(("buntil", left.uid, right.uid, k), fill)


def mk_f(cmp, bound, phi):
    return prob(until(true(), phi), cmp, bound)


def mk_f_bounded(cmp, bound, k, phi):
    return prob(bounded_until(true(), phi, k), cmp, bound)


def mk_g(cmp, bound, phi):
    """G_cmp,bound phi via the probability complement: the probability of
    staying in phi forever is 1 minus that of reaching !phi, so the
    comparison is mirrored and the bound complemented."""
    bound = _check_bound(bound)
    return prob(until(true(), not_(phi)), MIRROR_CMP[cmp], 1 - bound)


def mk_next(cmp, bound, phi):
    return prob(next_(phi), cmp, bound)


def mk_exclusive(L, O):
    """<L>_O: all atoms of L positive, all of O minus L negated, in
    canonical proposition order."""
    L = frozenset(L)
    O = frozenset(O)
    if not L <= O:
        raise FormulaError("mk_exclusive: L must be a subset of O")
    literals = [atom(p) if p in L else not_(atom(p)) for p in sorted(O)]
    return conj(literals)


def subformulae(phi):
    """All state subformulae of phi in topological order (children strictly
    before parents); shared nodes appear once."""
    out = []
    seen = set()
    stack = [(phi, False)]
    while stack:
        node, expanded = stack.pop()
        if node.uid in seen:
            continue
        if expanded:
            seen.add(node.uid)
            out.append(node)
            continue
        stack.append((node, True))
        if node.kind == "not":
            stack.append((node.left, False))
        elif node.kind == "and":
            stack.append((node.right, False))
            stack.append((node.left, False))
        elif node.kind == "prob":
            p = node.path
            if p.kind == "next":
                stack.append((p.left, False))
            else:
                stack.append((p.right, False))
                stack.append((p.left, False))
    return out


def atoms(phi):
    """Set of propositions occurring in phi."""
    return {f.prop for f in subformulae(phi) if f.kind == "atom"}


# ---------------------------------------------------------------------------
# printer
# ---------------------------------------------------------------------------

def _wrap_state(phi):
    if phi.kind in ("atom", "true"):
        return print_formula(phi)
    return "(" + print_formula(phi) + ")"


def print_formula(phi):
    """Fully parenthesized canonical form; parse(print(phi)) is phi."""
    kind = phi.kind
    if kind == "true":
        return "true"
    if kind == "atom":
        return phi.prop.name
    if kind == "not":
        return "!" + _wrap_state(phi.left)
    if kind == "and":
        return _wrap_state(phi.left) + " & " + _wrap_state(phi.right)
    if kind == "prob":
        return f"P{phi.cmp}{rat_to_text(phi.bound)} [{print_path(phi.path)}]"
    raise FormulaError(f"unknown node kind {kind!r}")


def print_path(path):
    if path.kind == "next":
        return "X " + _wrap_state(path.left)
    if path.kind == "until":
        return _wrap_state(path.left) + " U " + _wrap_state(path.right)
    if path.kind == "buntil":
        return (_wrap_state(path.left) + f" U<={path.step_bound} "
                + _wrap_state(path.right))
    raise FormulaError(f"unknown path kind {path.kind!r}")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class ParseError(FormulaError):
    def __init__(self, message, line, col):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


_RESERVED = {"true", "false", "P", "X", "U", "F", "G"}

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<comment>#[^\n]*)"
    r"|(?P<nat>[0-9]+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>=>|<=|>=|!=|[!&|()\[\]<>=/])"
)


class _Tokenizer:
    def __init__(self, text):
        self.tokens = []
        line, col = 1, 1
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            value = m.group(0)
            kind = m.lastgroup
            if kind not in ("ws", "comment"):
                self.tokens.append((kind, value, line, col))
            newlines = value.count("\n")
            if newlines:
                line += newlines
                col = len(value) - value.rfind("\n")
            else:
                col += len(value)
            pos = m.end()
        self.tokens.append(("eof", "", line, col))
        self.idx = 0

    def peek(self):
        return self.tokens[self.idx]

    def next(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok

    def expect(self, value):
        kind, val, line, col = self.next()
        if val != value:
            raise ParseError(f"expected {value!r}, found {val or 'end of input'!r}",
                             line, col)

    def error(self, message):
        _, val, line, col = self.peek()
        raise ParseError(message + f" (at {val or 'end of input'!r})", line, col)


def parse_formula(text):
    tz = _Tokenizer(text)
    phi = _parse_implies(tz)
    if tz.peek()[0] != "eof":
        tz.error("trailing input after formula")
    return phi


def _parse_implies(tz):
    left = _parse_or(tz)
    if tz.peek()[1] == "=>":
        tz.next()
        right = _parse_implies(tz)
        return implies(left, right)
    return left


def _parse_or(tz):
    out = _parse_and(tz)
    while tz.peek()[1] == "|":
        tz.next()
        out = or_(out, _parse_and(tz))
    return out


def _parse_and(tz):
    out = _parse_unary(tz)
    while tz.peek()[1] == "&":
        tz.next()
        out = and_(out, _parse_unary(tz))
    return out


def _parse_unary(tz):
    kind, val, line, col = tz.peek()
    if val == "!":
        tz.next()
        return not_(_parse_unary(tz))
    if val == "(":
        tz.next()
        phi = _parse_implies(tz)
        tz.expect(")")
        return phi
    if val == "true":
        tz.next()
        return true()
    if val == "false":
        tz.next()
        return false()
    if val == "P":
        tz.next()
        return _parse_prob(tz)
    if kind == "ident":
        if val in _RESERVED:
            tz.error(f"reserved word {val!r} cannot be an atom")
        tz.next()
        return atom(prop_from_name(val))
    tz.error("expected a state formula")


def _parse_nat(tz):
    kind, val, line, col = tz.next()
    if kind != "nat":
        raise ParseError(f"expected a number, found {val!r}", line, col)
    return int(val)


def _parse_rat(tz):
    num = _parse_nat(tz)
    if tz.peek()[1] == "/":
        tz.next()
        den = _parse_nat(tz)
        if den == 0:
            tz.error("zero denominator")
        return Rat(num, den)
    return Rat(num)


def _parse_prob(tz):
    kind, val, line, col = tz.peek()
    if val not in COMPARISONS:
        tz.error("expected a comparison after P")
    tz.next()
    cmp = val
    bound = _parse_rat(tz)
    if bound > 1:
        raise ParseError(f"probability bound {bound} outside [0,1]", line, col)
    tz.expect("[")
    phi = _parse_path(tz, cmp, bound)
    tz.expect("]")
    return phi


def _parse_path(tz, cmp, bound):
    kind, val, line, col = tz.peek()
    if val == "X":
        tz.next()
        return mk_next(cmp, bound, _parse_implies(tz))
    if val == "F":
        tz.next()
        if tz.peek()[1] == "<=":
            tz.next()
            k = _parse_nat(tz)
            return mk_f_bounded(cmp, bound, k, _parse_implies(tz))
        return mk_f(cmp, bound, _parse_implies(tz))
    if val == "G":
        tz.next()
        return mk_g(cmp, bound, _parse_implies(tz))
    left = _parse_implies(tz)
    kind, val, line, col = tz.peek()
    if val != "U":
        tz.error("expected U in path formula")
    tz.next()
    if tz.peek()[1] == "<=":
        tz.next()
        k = _parse_nat(tz)
        right = _parse_implies(tz)
        return prob(bounded_until(left, right, k), cmp, bound)
    right = _parse_implies(tz)
    return prob(until(left, right), cmp, bound)
